"""UMKESS roles and messages.

Steps 2-5 of the scheme as pure functions, plus two small state machines
(``KeyGenerationCentre`` and ``User``) that hold the per-session state a
real party would keep between steps. Nothing here authenticates anything:
the scheme has no such mechanism.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateAbscissa,
    DuplicateGroupTag,
    EmptyGroup,
    InvalidGroupList,
    MissingChallenge,
    NotParticipating,
    UnknownMember,
    WrongBundleSize,
)
from .field import FieldElement, FieldParams, hash_to_field, random_element
from .poly import Point, Polynomial, evaluate, interpolate, sample_points


@dataclass(frozen=True)
class UserCredential:
    index: int
    secret: FieldElement

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("user indices start at 1")
        if self.index >= self.secret.p:
            raise ValueError(f"user index {self.index} does not embed injectively in GF({self.secret.p})")


def compute_group_tag(members: Iterable[int], params: FieldParams) -> FieldElement:
    """S(G): the sum of member indices, reduced mod p."""
    members = list(members)
    if not members:
        raise EmptyGroup("a group needs at least one member")
    return FieldElement(sum(members), params)


@dataclass(frozen=True)
class GroupDescriptor:
    group_id: int
    members: tuple[int, ...]
    tag: FieldElement

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise EmptyGroup(f"group {self.group_id} has no members")
        if list(members) != sorted(set(members)):
            raise InvalidGroupList(f"group {self.group_id} members must be sorted and distinct")
        if self.tag != compute_group_tag(members, self.tag.params):
            raise InvalidGroupList(f"group {self.group_id} tag does not match its members")

    @classmethod
    def build(cls, group_id: int, members: Iterable[int], params: FieldParams) -> GroupDescriptor:
        members = tuple(sorted(set(members)))
        return cls(group_id, members, compute_group_tag(members, params))


@dataclass(frozen=True)
class GroupListBroadcast:
    """Step 2 message. Sent on the group-list broadcast channel."""

    groups: tuple[GroupDescriptor, ...]

    def by_id(self) -> dict[int, GroupDescriptor]:
        return {g.group_id: g for g in self.groups}

    def groups_of(self, index: int) -> list[GroupDescriptor]:
        return [g for g in self.groups if index in g.members]


@dataclass(frozen=True)
class ChallengeMessage:
    """Step 3 message: one random value r per group the sender belongs to."""

    sender_index: int
    challenges: Mapping[int, FieldElement]


@dataclass(frozen=True)
class PointBundle:
    """Step 4b message: m_i points on the recipient's polynomial."""

    recipient_index: int
    points: tuple[Point, ...]


@dataclass(frozen=True)
class PublicBulletin:
    """Step 4c message: r0 and the hash of every group key."""

    r0: FieldElement
    key_hashes: Mapping[int, FieldElement]


class Verdict(str, enum.Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class SessionOutcome:
    recovered_keys: Mapping[int, FieldElement]
    verification: Mapping[int, Verdict]

    @property
    def all_accepted(self) -> bool:
        return bool(self.verification) and all(v is Verdict.ACCEPTED for v in self.verification.values())


@dataclass
class KgcSession:
    """Everything the KGC produces in step 4. ``keys`` and ``polynomials`` stay private."""

    bundles: dict[int, PointBundle]
    bulletin: PublicBulletin
    keys: dict[int, FieldElement]
    polynomials: dict[int, Polynomial] = field(default_factory=dict)


# -- step functions ---------------------------------------------------------

def kgc_announce(groups: Sequence[GroupDescriptor], roster: Iterable[int]) -> GroupListBroadcast:
    """Step 2: publish the group list after checking it against the roster."""
    roster = set(roster)
    ids = [g.group_id for g in groups]
    if not ids:
        raise InvalidGroupList("no groups to announce")
    if len(set(ids)) != len(ids):
        raise InvalidGroupList(f"duplicate group id in {ids}")
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise InvalidGroupList(f"group ids must be 1..m, got {sorted(ids)}")
    for g in groups:
        unknown = [i for i in g.members if i not in roster]
        if unknown:
            raise UnknownMember(f"group {g.group_id} lists users {unknown} not on the roster")
    return GroupListBroadcast(tuple(sorted(groups, key=lambda g: g.group_id)))


def user_generate_challenges(cred: UserCredential, broadcast: GroupListBroadcast, rng) -> ChallengeMessage:
    """Step 3: draw one fresh r for each group the user sees itself in."""
    mine = broadcast.groups_of(cred.index)
    if not mine:
        raise NotParticipating(f"user {cred.index} is in no announced group")
    params = cred.secret.params
    return ChallengeMessage(cred.index, {g.group_id: random_element(rng, params) for g in mine})


def masked_key(key: FieldElement, secret: FieldElement, challenge: FieldElement, r0: FieldElement) -> FieldElement:
    """K + h(x + r + r0): the y value hiding a group key on a user's polynomial."""
    return key + hash_to_field(secret + challenge + r0)


def kgc_build_session(
    params: FieldParams,
    roster: Sequence[UserCredential],
    groups: Sequence[GroupDescriptor],
    received: Mapping[int, ChallengeMessage],
    rng,
) -> KgcSession:
    """Step 4: draw keys and r0, build each participant's polynomial, sample its points."""
    secrets = {c.index: c.secret for c in roster}
    participants = sorted({i for g in groups for i in g.members})
    membership = {i: [g for g in groups if i in g.members] for i in participants}

    for i in participants:
        msg = received.get(i)
        if msg is None:
            raise MissingChallenge(i)
        for g in membership[i]:
            if g.group_id not in msg.challenges:
                raise MissingChallenge(i, g.group_id)

    # 4a
    keys = {g.group_id: random_element(rng, params) for g in sorted(groups, key=lambda g: g.group_id)}
    r0 = random_element(rng, params)

    # 4b
    bundles, polys = {}, {}
    for i in participants:
        x_i = secrets[i]
        challenges = received[i].challenges
        anchor = Point(params(i), x_i + r0)
        defining = [anchor]
        for g in membership[i]:
            y = masked_key(keys[g.group_id], x_i, challenges[g.group_id], r0)
            defining.append(Point(g.tag, y))
        try:
            f = interpolate(defining)
        except DuplicateAbscissa as exc:
            raise _tag_collision(i, exc.x, membership[i]) from exc
        polys[i] = f
        excluded = [pt.x for pt in defining]
        bundles[i] = PointBundle(i, tuple(sample_points(f, len(membership[i]), excluded, rng)))

    # 4c
    bulletin = PublicBulletin(r0, {gid: hash_to_field(k) for gid, k in keys.items()})
    return KgcSession(bundles, bulletin, keys, polys)


def _tag_collision(user: int, x: FieldElement, groups: Sequence[GroupDescriptor]) -> DuplicateGroupTag:
    hits = [g.group_id for g in groups if g.tag == x]
    if x.value == user % x.p:
        return DuplicateGroupTag(user, x, hits[:1], self_collision=True)
    return DuplicateGroupTag(user, x, hits)


def user_recover_keys(
    cred: UserCredential,
    bundle: PointBundle,
    bulletin: PublicBulletin,
    retained: ChallengeMessage,
    groups: GroupListBroadcast,
) -> SessionOutcome:
    """Step 5: rebuild f_i from the bundle plus (i, x_i + r0) and unmask each key."""
    params = cred.secret.params
    mine = groups.groups_of(cred.index)
    if len(bundle.points) != len(mine):
        raise WrongBundleSize(f"user {cred.index} expected {len(mine)} points, got {len(bundle.points)}")
    r0 = bulletin.r0
    f = interpolate(list(bundle.points) + [Point(params(cred.index), cred.secret + r0)])

    keys, verdicts = {}, {}
    for g in mine:
        mask = hash_to_field(cred.secret + retained.challenges[g.group_id] + r0)
        k = evaluate(f, g.tag) - mask
        keys[g.group_id] = k
        published = bulletin.key_hashes.get(g.group_id)
        ok = published is not None and hash_to_field(k) == published
        verdicts[g.group_id] = Verdict.ACCEPTED if ok else Verdict.REJECTED
    return SessionOutcome(keys, verdicts)


# -- role state machines ----------------------------------------------------

class KeyGenerationCentre:
    def __init__(self, params: FieldParams, roster: Sequence[UserCredential], rng):
        self.params = params
        self.roster = tuple(roster)
        self.rng = rng
        self.groups: tuple[GroupDescriptor, ...] = ()
        self.received: dict[int, ChallengeMessage] = {}
        self.session: KgcSession | None = None

    def announce(self, groups: Sequence[GroupDescriptor]) -> GroupListBroadcast:
        broadcast = kgc_announce(groups, (c.index for c in self.roster))
        self.groups = broadcast.groups
        return broadcast

    def receive_challenge(self, msg: ChallengeMessage):
        # a later message from the same claimed sender overwrites the earlier one
        self.received[msg.sender_index] = msg

    def build(self) -> KgcSession:
        self.session = kgc_build_session(self.params, self.roster, self.groups, self.received, self.rng)
        return self.session

    @property
    def keys(self) -> dict[int, FieldElement]:
        return dict(self.session.keys) if self.session else {}


class User:
    def __init__(self, cred: UserCredential, rng):
        self.cred = cred
        self.rng = rng
        self.view: GroupListBroadcast | None = None
        self.retained: ChallengeMessage | None = None
        self.bundle: PointBundle | None = None
        self.bulletin: PublicBulletin | None = None
        self.outcome: SessionOutcome | None = None

    @property
    def index(self) -> int:
        return self.cred.index

    @property
    def participating(self) -> bool:
        return self.view is not None and bool(self.view.groups_of(self.index))

    def on_group_list(self, broadcast: GroupListBroadcast) -> ChallengeMessage | None:
        self.view = broadcast
        if not self.participating:
            return None
        self.retained = user_generate_challenges(self.cred, broadcast, self.rng)
        return self.retained

    def on_bundle(self, bundle: PointBundle):
        self.bundle = bundle

    def on_bulletin(self, bulletin: PublicBulletin):
        self.bulletin = bulletin

    def ready(self) -> bool:
        return self.retained is not None and self.bundle is not None and self.bulletin is not None

    def finish(self) -> SessionOutcome:
        self.outcome = user_recover_keys(self.cred, self.bundle, self.bulletin, self.retained, self.view)
        return self.outcome
