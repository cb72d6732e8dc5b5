"""Deterministic message fabric between one KGC and n users.

Every message travels over one of four channels, one per flow the scheme
uses. Each delivery passes through the adversary script, and the transcript
records the message before and after the adversary touched it. By default
the two KGC broadcasts are reliable: the adversary may read them but not
change them. The two point-to-point flows can be tampered with.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import MissingChallenge, ProtocolError, ScenarioError, TranscriptMismatch, UmkessError
from .field import FieldElement, FieldParams, random_element
from .protocol import (
    ChallengeMessage,
    GroupDescriptor,
    KeyGenerationCentre,
    SessionOutcome,
    User,
    UserCredential,
)
from .wire import canonical_json, message_from_json, message_to_json, outcome_from_json, outcome_to_json

KGC = "kgc"


class ChannelKind(str, enum.Enum):
    GROUP_LIST = "group_list"
    USER_TO_KGC = "user_to_kgc"
    KGC_TO_USER = "kgc_to_user"
    BULLETIN = "bulletin"


class Protection(str, enum.Enum):
    RELIABLE = "reliable"
    TAMPERABLE = "tamperable"


DEFAULT_PROTECTION = {
    ChannelKind.GROUP_LIST: Protection.RELIABLE,
    ChannelKind.USER_TO_KGC: Protection.TAMPERABLE,
    ChannelKind.KGC_TO_USER: Protection.TAMPERABLE,
    ChannelKind.BULLETIN: Protection.RELIABLE,
}


@dataclass(frozen=True)
class Channel:
    kind: ChannelKind
    protection: Protection

    @property
    def reliable(self) -> bool:
        return self.protection is Protection.RELIABLE


def derive_rng(seed: int, *labels) -> random.Random:
    """Independent deterministic stream for one role in one session."""
    return random.Random(":".join(["umkess", str(seed), *map(str, labels)]))


@dataclass(frozen=True)
class SessionConfig:
    params: FieldParams
    roster: tuple[UserCredential, ...]
    groups: tuple[GroupDescriptor, ...]
    seed: int
    protection: Mapping[ChannelKind, Protection] = field(default_factory=dict)

    def channel(self, kind: ChannelKind) -> Channel:
        return Channel(kind, Protection(self.protection.get(kind, DEFAULT_PROTECTION[kind])))

    def with_protection(self, **overrides: Protection) -> SessionConfig:
        merged = dict(self.protection)
        merged.update({ChannelKind(k): Protection(v) for k, v in overrides.items()})
        return SessionConfig(self.params, self.roster, self.groups, self.seed, merged)

    def with_seed(self, seed: int) -> SessionConfig:
        return SessionConfig(self.params, self.roster, self.groups, seed, self.protection)

    def credential(self, index: int) -> UserCredential:
        for c in self.roster:
            if c.index == index:
                return c
        raise KeyError(index)

    def to_json(self) -> dict:
        return {
            "p": hex(self.params.p),
            "roster": [[c.index, c.secret.hex()] for c in self.roster],
            "groups": [[g.group_id, list(g.members)] for g in self.groups],
            "seed": self.seed,
            "protection": {k.value: self.channel(k).protection.value for k in ChannelKind},
        }

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_json()).encode()).hexdigest()


def make_config(
    params: FieldParams,
    groups: Sequence[Iterable[int]],
    seed: int,
    n: int | None = None,
    secrets: Mapping[int, int] | None = None,
    protection: Mapping | None = None,
) -> SessionConfig:
    """Build a config from plain member lists. Missing secrets come from the seed."""
    groups = [GroupDescriptor.build(gid, members, params) for gid, members in enumerate(groups, start=1)]
    if n is None:
        n = max(max(g.members) for g in groups)
    secrets = dict(secrets or {})
    roster = []
    for i in range(1, n + 1):
        if i in secrets:
            x = FieldElement(secrets[i], params)
        else:
            x = random_element(derive_rng(seed, "roster", i), params)
        roster.append(UserCredential(i, x))
    prot = {ChannelKind(k): Protection(v) for k, v in (protection or {}).items()}
    return SessionConfig(params, tuple(roster), tuple(groups), seed, prot)


# -- adversary --------------------------------------------------------------

class Action:
    modifies = False

    def apply(self, msg, capture: Callable):
        return msg


class Pass(Action):
    pass


class CopyThenPass(Action):
    def apply(self, msg, capture):
        capture(msg)
        return msg


class Drop(Action):
    modifies = True

    def apply(self, msg, capture):
        return None


@dataclass
class Replace(Action):
    message: object
    modifies = True

    def apply(self, msg, capture):
        return self.message


@dataclass
class Transform(Action):
    fn: Callable
    modifies = True

    def apply(self, msg, capture):
        return self.fn(msg)


@dataclass
class Rule:
    """Matches on channel kind, sender, recipient and an optional predicate.

    ``None`` fields match anything. Rules that modify traffic must name a
    channel kind so they can be checked against its protection up front.
    """

    action: Action
    kind: ChannelKind | None = None
    sender: object = None
    recipient: object = None
    where: Callable | None = None

    def matches(self, kind, sender, recipient, msg) -> bool:
        if self.kind is not None and self.kind is not kind:
            return False
        if self.sender is not None and self.sender != sender:
            return False
        if self.recipient is not None and self.recipient != recipient:
            return False
        return self.where is None or bool(self.where(msg))


@dataclass(frozen=True)
class Capture:
    step: str
    kind: ChannelKind
    sender: object
    recipient: object
    message: object


@dataclass(frozen=True)
class Injection:
    """A message the adversary puts on a channel, claiming to be ``sender``."""

    kind: ChannelKind
    recipient: object
    message: object
    sender: object = KGC


class AdversaryScript:
    """Ordered rules (first match wins, default Pass) plus injection hooks.

    Injectors are called as ``injector(step, session)`` after each step's
    traffic is routed and may return Injections. ``captured`` collects every
    message a CopyThenPass rule saw.
    """

    def __init__(self, rules: Sequence[Rule] = (), injectors: Sequence[Callable] = ()):
        self.rules = list(rules)
        self.injectors = list(injectors)
        self.captured: list[Capture] = []

    def validate(self, config: SessionConfig):
        for rule in self.rules:
            if not rule.action.modifies:
                continue
            if rule.kind is None:
                raise ScenarioError("a rule that modifies traffic must name its channel kind")
            if config.channel(rule.kind).reliable:
                raise ScenarioError(f"{type(rule.action).__name__} rule targets reliable channel {rule.kind.value}")

    def action_for(self, kind, sender, recipient, msg) -> Action:
        for rule in self.rules:
            if rule.matches(kind, sender, recipient, msg):
                return rule.action
        return Pass()

    def captured_on(self, kind: ChannelKind, sender=None, recipient=None) -> list:
        return [
            c.message
            for c in self.captured
            if c.kind is kind and (sender is None or c.sender == sender) and (recipient is None or c.recipient == recipient)
        ]


# -- transcript -------------------------------------------------------------

@dataclass(frozen=True)
class Record:
    step: str
    channel: ChannelKind
    sender: object
    recipient: object
    before: object
    after: object

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "channel": self.channel.value,
            "from": self.sender,
            "to": self.recipient,
            "payload_before": message_to_json(self.before),
            "payload_after": message_to_json(self.after),
        }


class Transcript:
    """Append-only log of one session."""

    def __init__(self, config_digest: str):
        self.config_digest = config_digest
        self._records: list[Record] = []
        self.outcomes: dict[int, SessionOutcome] = {}
        self.error: dict | None = None

    def append(self, record: Record):
        self._records.append(record)

    @property
    def records(self) -> tuple[Record, ...]:
        return tuple(self._records)

    def __len__(self):
        return len(self._records)

    def _records_json(self):
        return [r.to_json() for r in self._records]

    def to_json(self) -> dict:
        records = self._records_json()
        return {
            "config_digest": self.config_digest,
            "records": records,
            "records_digest": hashlib.sha256(canonical_json(records).encode()).hexdigest(),
            "outcomes": {str(i): outcome_to_json(o) for i, o in sorted(self.outcomes.items())},
            "error": self.error,
        }

    def dumps(self) -> str:
        return canonical_json(self.to_json())


def load_transcript(text: str, params: FieldParams) -> Transcript:
    """Parse a transcript, checking its records digest."""
    try:
        data = json.loads(text)
        records = data["records"]
        digest = hashlib.sha256(canonical_json(records).encode()).hexdigest()
        if digest != data["records_digest"]:
            raise TranscriptMismatch("records digest does not match the recorded messages")
        t = Transcript(data["config_digest"])
        for r in records:
            t.append(
                Record(
                    r["step"],
                    ChannelKind(r["channel"]),
                    r["from"],
                    r["to"],
                    message_from_json(r["payload_before"], params),
                    message_from_json(r["payload_after"], params),
                )
            )
        t.outcomes = {int(i): outcome_from_json(o, params) for i, o in data["outcomes"].items()}
        t.error = data["error"]
        return t
    except TranscriptMismatch:
        raise
    except (KeyError, ValueError, TypeError, UmkessError) as exc:
        raise TranscriptMismatch(f"malformed transcript: {exc}") from exc


# -- session driver ---------------------------------------------------------

@dataclass
class SessionResult:
    outcomes: dict[int, SessionOutcome]
    transcript: Transcript
    kgc: KeyGenerationCentre
    users: dict[int, User]
    script: AdversaryScript

    @property
    def keys(self) -> dict[int, FieldElement]:
        """The KGC's true group keys (ground truth for evaluation only)."""
        return self.kgc.keys

    def __iter__(self):
        # allows ``outcomes, transcript = run_session(...)``
        return iter((self.outcomes, self.transcript))


class Session:
    """One run: roles, channels and the adversary wired together."""

    def __init__(self, config: SessionConfig, script: AdversaryScript):
        self.config = config
        self.script = script
        self.kgc = KeyGenerationCentre(config.params, config.roster, derive_rng(config.seed, "kgc"))
        self.users = {c.index: User(c, derive_rng(config.seed, "user", c.index)) for c in config.roster}
        self.transcript = Transcript(config.digest())
        self.pending_challenges: list[ChallengeMessage] = []
        self.step = None

    # routing

    def route(self, kind, sender, recipient, msg):
        channel = self.config.channel(kind)
        action = self.script.action_for(kind, sender, recipient, msg)
        if action.modifies and channel.reliable:
            raise ScenarioError(f"adversary tried to modify reliable channel {kind.value}")

        def capture(m):
            self.script.captured.append(Capture(self.step, kind, sender, recipient, m))

        after = action.apply(msg, capture)
        self.transcript.append(Record(self.step, kind, sender, recipient, msg, after))
        if after is not None:
            self.deliver(kind, recipient, after)

    def inject(self, injection: Injection):
        if self.config.channel(injection.kind).reliable:
            raise ScenarioError(f"adversary tried to inject on reliable channel {injection.kind.value}")
        self.transcript.append(
            Record(self.step, injection.kind, injection.sender, injection.recipient, None, injection.message)
        )
        self.deliver(injection.kind, injection.recipient, injection.message)

    def deliver(self, kind, recipient, msg):
        if kind is ChannelKind.GROUP_LIST:
            challenge = self.users[recipient].on_group_list(msg)
            if challenge is not None:
                self.pending_challenges.append(challenge)
        elif kind is ChannelKind.USER_TO_KGC:
            self.kgc.receive_challenge(msg)
        elif kind is ChannelKind.KGC_TO_USER:
            self.users[recipient].on_bundle(msg)
        elif kind is ChannelKind.BULLETIN:
            self.users[recipient].on_bulletin(msg)

    def run_injectors(self):
        for injector in self.script.injectors:
            for inj in injector(self.step, self) or ():
                self.inject(inj)

    def _fail(self, exc: UmkessError, step: str):
        exc.step = step
        self.transcript.error = error_to_json(exc)
        exc.transcript = self.transcript
        raise exc

    # protocol steps

    def step2(self):
        self.step = "2"
        try:
            broadcast = self.kgc.announce(self.config.groups)
        except ProtocolError as exc:
            self._fail(exc, "2")
        for i in sorted(self.users):
            self.route(ChannelKind.GROUP_LIST, KGC, i, broadcast)
        self.run_injectors()

    def step3(self):
        self.step = "3"
        pending, self.pending_challenges = self.pending_challenges, []
        for msg in pending:
            self.route(ChannelKind.USER_TO_KGC, msg.sender_index, KGC, msg)
        self.run_injectors()

    def step4(self):
        self.step = "4"
        try:
            session = self.kgc.build()
        except MissingChallenge as exc:
            self._fail(exc, "4")
        except ProtocolError as exc:
            self._fail(exc, "4b")
        self.step = "4b"
        for i, bundle in sorted(session.bundles.items()):
            self.route(ChannelKind.KGC_TO_USER, KGC, i, bundle)
        self.step = "4c"
        for i in sorted(self.users):
            self.route(ChannelKind.BULLETIN, KGC, i, session.bulletin)
        self.step = "4"
        self.run_injectors()

    def step5(self) -> dict[int, SessionOutcome]:
        self.step = "5"
        outcomes = {}
        for i, user in sorted(self.users.items()):
            if user.participating and user.ready():
                try:
                    outcomes[i] = user.finish()
                except UmkessError as exc:
                    self._fail(exc, "5")
        self.transcript.outcomes = outcomes
        return outcomes


def error_to_json(exc: UmkessError) -> dict:
    out = {"type": type(exc).__name__, "step": exc.step}
    for attr in ("user", "group_id", "groups", "self_collision"):
        if hasattr(exc, attr):
            v = getattr(exc, attr)
            out[attr] = list(v) if isinstance(v, tuple) else v
    if hasattr(exc, "tag"):
        out["tag"] = int(exc.tag)
    return out


def run_session(config: SessionConfig, script: AdversaryScript | None = None) -> SessionResult:
    """Drive steps 2 to 5 in lock-step through the adversary.

    Protocol errors propagate with ``.step`` set and the partial transcript
    attached as ``.transcript``.
    """
    script = script or AdversaryScript()
    script.validate(config)
    s = Session(config, script)
    s.step2()
    s.step3()
    s.step4()
    outcomes = s.step5()
    return SessionResult(outcomes, s.transcript, s.kgc, s.users, script)


def replay(transcript: Transcript, config: SessionConfig) -> dict[int, SessionOutcome]:
    """Re-derive outcomes from the transcript's post-adversary messages.

    Honest parties are re-run from the config's seeds. Every recorded
    pre-adversary payload must equal what that party would have sent, and
    the final outcomes (or the abort) must equal the recorded ones.
    """
    if transcript.config_digest != config.digest():
        raise TranscriptMismatch("transcript was produced under a different configuration")
    s = Session(config, AdversaryScript())
    records = list(transcript.records)
    phases = {"2": 0, "3": 1, "4b": 2, "4c": 2, "4": 2}
    if any(r.step not in phases for r in records):
        raise TranscriptMismatch("unexpected step label in transcript")
    if [phases[r.step] for r in records] != sorted(phases[r.step] for r in records):
        raise TranscriptMismatch("records are out of step order")

    def expect(record, sent):
        if record.before is None:
            return  # injected by the adversary
        if message_to_json(record.before) != message_to_json(sent):
            raise TranscriptMismatch(f"step {record.step} payload from {record.sender} differs from the replayed party")

    def expect_error(exc):
        exc.step = exc.step or s.step
        if transcript.error != error_to_json(exc):
            raise TranscriptMismatch(f"replay failed with {type(exc).__name__}, transcript records {transcript.error}")
        return {}

    try:
        s.step = "2"
        broadcast = s.kgc.announce(config.groups)
    except ProtocolError as exc:
        exc.step = "2"
        return expect_error(exc)

    for r in (r for r in records if r.step in ("2", "3")):
        s.step = r.step
        if r.channel is ChannelKind.GROUP_LIST:
            expect(r, broadcast)
        elif r.channel is ChannelKind.USER_TO_KGC and r.before is not None:
            sender = s.users.get(r.sender)
            if sender is None or sender.retained is None:
                raise TranscriptMismatch(f"user {r.sender} never produced a challenge")
            expect(r, sender.retained)
        if r.after is not None:
            s.deliver(r.channel, r.recipient, r.after)

    s.step = "4"
    try:
        session = s.kgc.build()
    except MissingChallenge as exc:
        exc.step = "4"
        return expect_error(exc)
    except ProtocolError as exc:
        exc.step = "4b"
        return expect_error(exc)

    for r in (r for r in records if phases[r.step] == 2):
        if r.channel is ChannelKind.KGC_TO_USER:
            expect(r, session.bundles.get(r.recipient))
        elif r.channel is ChannelKind.BULLETIN:
            expect(r, session.bulletin)
        if r.after is not None:
            s.deliver(r.channel, r.recipient, r.after)

    try:
        outcomes = s.step5()
    except UmkessError as exc:
        return expect_error(exc)
    if transcript.error is not None:
        raise TranscriptMismatch("transcript records an abort but the replay completed")
    got = {i: outcome_to_json(o) for i, o in outcomes.items()}
    want = {i: outcome_to_json(o) for i, o in transcript.outcomes.items()}
    if got != want:
        raise TranscriptMismatch("replayed outcomes differ from the recorded outcomes")
    return outcomes
