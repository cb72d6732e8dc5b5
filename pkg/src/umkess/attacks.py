"""Executable demonstrations of the four UMKESS failures.

Each function builds the adversary it needs, runs a session through
netsim, checks the outcome against ground truth and returns an
AttackReport. An attack only does what the configured channel protection
allows it to do. When a channel it relies on is reliable it still runs,
and the report then shows the failure, so a protected deployment makes
every attack report ``success=False``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import DuplicateGroupTag, PreconditionUnmet, ReportedInsecureBehaviorAbsent, SingularSystem
from .field import FieldElement, FieldParams, hash_to_field, random_element
from .netsim import (
    AdversaryScript,
    ChannelKind,
    CopyThenPass,
    Injection,
    Rule,
    SessionConfig,
    Transform,
    derive_rng,
    make_config,
    run_session,
)
from .poly import LinearSystem, Point, Polynomial, interpolate, solve_linear
from .protocol import GroupDescriptor, GroupListBroadcast, PointBundle, PublicBulletin, Verdict, user_recover_keys
from .wire import element_map_to_json

COLLIDING_GROUPS = ([1, 5], [1, 2, 3])


@dataclass
class AttackReport:
    scenario: str
    success: bool
    recovered: dict[str, FieldElement] = field(default_factory=dict)
    victim_verdicts: dict[int, Verdict] = field(default_factory=dict)
    transcript: object = None
    details: dict = field(default_factory=dict)

    @property
    def transcript_ref(self) -> str | None:
        if self.transcript is None:
            return None
        return self.transcript.to_json()["records_digest"]

    def require(self) -> AttackReport:
        """Raise if the insecure behaviour the scenario demonstrates did not occur."""
        if not self.success:
            raise ReportedInsecureBehaviorAbsent(f"{self.scenario}: {self.details}")
        return self

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "success": self.success,
            "recovered": element_map_to_json(self.recovered),
            "victim_verdicts": {str(k): v.value for k, v in sorted(self.victim_verdicts.items())},
            "transcript_ref": self.transcript_ref,
            "details": self.details,
        }


def _groups_of(config: SessionConfig, index: int) -> list[GroupDescriptor]:
    return [g for g in config.groups if index in g.members]


# -- interpolation collision ------------------------------------------------

def demo_collision_failure(
    params: FieldParams,
    groups=COLLIDING_GROUPS,
    seed: int = 0,
    strict: bool = False,
    *,
    config: SessionConfig | None = None,
) -> AttackReport:
    """Run a session where a user's polynomial cannot exist.

    With the default groups {U1,U5} and {U1,U2,U3} both tags are 6 and the
    KGC fails at step 4b while building U1's polynomial. Success means the
    failure was observed.
    """
    if config is None:
        n = max(max(g) for g in groups)
        config = make_config(params, groups, seed, n=max(n, 5))
    try:
        result = run_session(config)
    except DuplicateGroupTag as exc:
        return AttackReport(
            "collision",
            True,
            transcript=exc.transcript,
            details={
                "step": exc.step,
                "user": exc.user,
                "colliding_tag": int(exc.tag),
                "colliding_groups": list(exc.groups),
                "self_collision": exc.self_collision,
            },
        )
    report = AttackReport(
        "collision",
        False,
        transcript=result.transcript,
        details={"all_accepted": all(o.all_accepted for o in result.outcomes.values())},
    )
    return report.require() if strict else report


# -- insider recovery of a long-term secret ---------------------------------

def insider_secret_recovery(config: SessionConfig, attacker: int, victim: int) -> AttackReport:
    """Insider U_a recovers U_v's long-term secret x_v.

    U_a rewrites U_v's challenge for the second shared group to equal the
    first, so both masked keys carry the same hash H. The difference of f_v
    at the two tags is then K_v1 - K_v2, which U_a knows. Together with the
    m_v points copied off the wire that gives m_v + 1 equations in the
    m_v + 1 coefficients of f_v, and f_v(v) - r0 = x_v.
    """
    if attacker == victim:
        raise PreconditionUnmet("attacker and victim must differ")
    shared = [g for g in _groups_of(config, victim) if attacker in g.members]
    pair = next(
        ((a, b) for i, a in enumerate(shared) for b in shared[i + 1:] if a.tag != b.tag),
        None,
    )
    if pair is None:
        raise PreconditionUnmet(
            f"users {attacker} and {victim} need two shared groups with distinct tags, share {len(shared)}"
        )
    g1, g2 = pair

    def equalise(msg):
        challenges = dict(msg.challenges)
        challenges[g2.group_id] = challenges[g1.group_id]
        return dataclasses.replace(msg, challenges=challenges)

    rules = [Rule(CopyThenPass(), ChannelKind.KGC_TO_USER, recipient=victim)]
    tampered = not config.channel(ChannelKind.USER_TO_KGC).reliable
    if tampered:
        rules.insert(0, Rule(Transform(equalise), ChannelKind.USER_TO_KGC, sender=victim))
    script = AdversaryScript(rules)
    result = run_session(config, script)

    details = {
        "shared_groups": [g1.group_id, g2.group_id],
        "z1": int(g1.tag),
        "z2": int(g2.tag),
        "challenge_tampered": tampered,
    }
    victim_verdicts = dict(result.outcomes[victim].verification) if victim in result.outcomes else {}
    own = result.users[attacker].outcome
    k1, k2 = own.recovered_keys[g1.group_id], own.recovered_keys[g2.group_id]
    r0 = result.users[attacker].bulletin.r0
    bundle = script.captured_on(ChannelKind.KGC_TO_USER, recipient=victim)[0]

    system = insider_linear_system(bundle, g1.tag, g2.tag, k1 - k2)
    recovered = {"K_v1": k1, "K_v2": k2}
    try:
        coeffs = solve_linear(system)
    except SingularSystem:
        details["failure"] = "SingularSystem"
        return AttackReport("insider-secret-recovery", False, recovered, victim_verdicts, result.transcript, details)

    details["residual_zero"] = all(r.value == 0 for r in system.residual(coeffs))
    f_v = Polynomial(coeffs)
    x_v = f_v(config.params(victim)) - r0
    recovered["x_v"] = x_v
    success = details["residual_zero"] and x_v == config.credential(victim).secret
    return AttackReport("insider-secret-recovery", success, recovered, victim_verdicts, result.transcript, details)


def insider_linear_system(bundle: PointBundle, z1: FieldElement, z2: FieldElement, key_difference) -> LinearSystem:
    """Equations f(x_k) = y_k for each point, plus f(z1) - f(z2) = key_difference."""
    params = z1.params
    width = len(bundle.points) + 1
    rows, rhs = [], []
    for pt in bundle.points:
        rows.append([pt.x ** k for k in range(width)])
        rhs.append(pt.y)
    rows.append([z1 ** k - z2 ** k for k in range(width)])
    rhs.append(params(0) + key_difference)
    return LinearSystem(rows, rhs)


# -- forged group list ------------------------------------------------------

def reference_group_list_config(params: FieldParams, seed: int = 0, tamperable: bool = True) -> SessionConfig:
    """G1 = {U1,U2,U3} (tag 6) as in the example, plus an unrelated {U4,U5}."""
    protection = {ChannelKind.GROUP_LIST: "tamperable"} if tamperable else {}
    return make_config(params, [[1, 2, 3], [4, 5]], seed, n=5, protection=protection)


def group_list_forgery(
    params: FieldParams,
    seed: int = 0,
    *,
    config: SessionConfig | None = None,
    victim: int = 1,
    target_group: int = 1,
    forged_members=(1, 5),
) -> AttackReport:
    """Outsider rewrites the group list one user sees.

    U1 is told its group is {U1,U5}. Both member sets sum to 6, so the KGC's
    polynomial for U1 is unchanged and U1 accepts the real key while
    believing it shares it with U5.
    """
    if config is None:
        config = reference_group_list_config(params, seed)
    true_group = {g.group_id: g for g in config.groups}[target_group]
    forged = GroupDescriptor.build(target_group, forged_members, config.params)

    def rewrite(msg: GroupListBroadcast):
        return GroupListBroadcast(tuple(forged if g.group_id == target_group else g for g in msg.groups))

    rules = []
    if not config.channel(ChannelKind.GROUP_LIST).reliable:
        rules.append(Rule(Transform(rewrite), ChannelKind.GROUP_LIST, recipient=victim))
    result = run_session(config, AdversaryScript(rules))

    user = result.users[victim]
    believed = user.view.by_id().get(target_group)
    outcome = result.outcomes.get(victim)
    details = {
        "true_members": list(true_group.members),
        "believed_members": list(believed.members) if believed else [],
        "true_tag": int(true_group.tag),
        "forged_tag": int(forged.tag),
        "list_tampered": bool(rules),
    }
    if outcome is None or target_group not in outcome.recovered_keys:
        return AttackReport("group-list-forgery", False, transcript=result.transcript, details=details)
    key = outcome.recovered_keys[target_group]
    details["key_matches_kgc"] = key == result.keys[target_group]
    success = (
        outcome.verification[target_group] is Verdict.ACCEPTED
        and details["key_matches_kgc"]
        and details["believed_members"] != details["true_members"]
    )
    return AttackReport(
        "group-list-forgery", success, {"K_i": key}, dict(outcome.verification), result.transcript, details
    )


# -- forged key-hash list ---------------------------------------------------

def hash_list_forgery(
    config: SessionConfig,
    attacker: int,
    victim: int,
    target_group: int,
    forged_key: FieldElement | None = None,
) -> AttackReport:
    """Insider makes U_v accept a key of its choosing for one group.

    U_a holds back U_v's points and the bulletin, builds delta vanishing at
    v and at every other tag of U_v, taking K' - K at the target tag, and
    sends U_v the points of f_v + delta with h(K') in the bulletin.
    """
    victim_groups = {g.group_id: g for g in _groups_of(config, victim)}
    target = victim_groups.get(target_group)
    if target is None or attacker not in target.members or attacker == victim:
        raise PreconditionUnmet(f"users {attacker} and {victim} do not share group {target_group}")

    can_points = not config.channel(ChannelKind.KGC_TO_USER).reliable
    can_bulletin = not config.channel(ChannelKind.BULLETIN).reliable
    held: dict[ChannelKind, object] = {}

    def withhold(kind):
        def fn(msg):
            held[kind] = msg
            return None
        return fn

    rules = []
    for kind, allowed in ((ChannelKind.KGC_TO_USER, can_points), (ChannelKind.BULLETIN, can_bulletin)):
        action = Transform(withhold(kind)) if allowed else CopyThenPass()
        rules.append(Rule(action, kind, recipient=victim))
    script = AdversaryScript(rules)
    state = {}

    def forge(step, session):
        if step != "4":
            return ()
        me = session.users[attacker]
        own = user_recover_keys(me.cred, me.bundle, me.bulletin, me.retained, me.view)
        true_key = own.recovered_keys[target_group]
        params = config.params
        k_forged = forged_key
        if k_forged is None:
            rng = derive_rng(config.seed, "adversary")
            k_forged = random_element(rng, params)
            while k_forged == true_key:
                k_forged = random_element(rng, params)
        bundle = held.get(ChannelKind.KGC_TO_USER) or script.captured_on(ChannelKind.KGC_TO_USER, recipient=victim)[0]
        bulletin = held.get(ChannelKind.BULLETIN) or me.bulletin

        delta = forgery_delta(params, victim, [g.tag for g in me.view.groups_of(victim)], target.tag,
                              k_forged - true_key)
        state.update(true_key=true_key, forged_key=k_forged, delta=delta)
        out = []
        if can_points:
            points = tuple(Point(pt.x, pt.y + delta(pt.x)) for pt in bundle.points)
            out.append(Injection(ChannelKind.KGC_TO_USER, victim, PointBundle(victim, points)))
        if can_bulletin:
            hashes = dict(bulletin.key_hashes)
            hashes[target_group] = hash_to_field(k_forged)
            out.append(Injection(ChannelKind.BULLETIN, victim, PublicBulletin(bulletin.r0, hashes)))
        return out

    script.injectors.append(forge)
    result = run_session(config, script)

    details = {
        "points_forged": can_points,
        "bulletin_forged": can_bulletin,
        "delta_degree": state["delta"].degree,
    }
    recovered = {"K_v_t": state["true_key"], "K'_v_t": state["forged_key"]}
    outcome = result.outcomes.get(victim)
    if outcome is None:
        return AttackReport("hash-list-forgery", False, recovered, {}, result.transcript, details)

    others_exact = all(
        outcome.recovered_keys[gid] == result.keys[gid] for gid in victim_groups if gid != target_group
    )
    details["non_target_keys_exact"] = others_exact
    success = (
        outcome.all_accepted
        and state["forged_key"] != state["true_key"]
        and outcome.recovered_keys[target_group] == state["forged_key"]
        and others_exact
    )
    return AttackReport(
        "hash-list-forgery", success, recovered, dict(outcome.verification), result.transcript, details
    )


def forgery_delta(params: FieldParams, victim: int, victim_tags, target_tag, shift) -> Polynomial:
    """delta through (v, 0), (target_tag, shift) and (tag, 0) for the victim's other tags."""
    points = [Point(params(victim), params.zero), Point(target_tag, params.zero + shift)]
    points += [Point(t, params.zero) for t in victim_tags if t != target_tag]
    return interpolate(points)
