"""Exit criteria. Each test records one PASS/FAIL line, printed at the end of the run."""

import functools
import random
import time
from importlib import resources
from pathlib import Path

import pytest
from scipy.stats import binom

from conftest import ACCEPTANCE_RESULTS
from oracles import group_collision, strip, vandermonde_coeffs
from umkess.attacks import (
    demo_collision_failure,
    group_list_forgery,
    hash_list_forgery,
    insider_secret_recovery,
    reference_group_list_config,
)
from umkess.cli import main
from umkess.errors import SingularSystem
from umkess.field import FieldParams, preset, random_element
from umkess.netsim import make_config, run_session
from umkess.poly import LinearSystem, Point, interpolate, solve_linear

INSIDER_GROUPS = [[1, 2], [1, 2, 3], [3, 4]]
HASH_GROUPS = {1: [[1, 2], [3, 4]], 2: [[1, 2], [1, 3]], 3: [[1, 2], [1, 3], [1, 4]]}


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                note = fn(*args, **kwargs)
            except BaseException as exc:
                ACCEPTANCE_RESULTS.append(f"[{number}] FAIL  {title}: {type(exc).__name__}: {exc}".splitlines()[0])
                raise
            elapsed = time.perf_counter() - start
            ACCEPTANCE_RESULTS.append(f"[{number}] PASS  {title} ({note}; {elapsed:.1f}s)")
        return run
    return wrap


def random_collision_free_config(rng, params, seed):
    while True:
        n = rng.randint(2, 10)
        m = rng.randint(1, 4)
        groups = [rng.sample(range(1, n + 1), rng.randint(1, n)) for _ in range(m)]
        if not any(group_collision(groups, i) for i in range(1, n + 1)):
            return make_config(params, groups, seed, n=n)


@criterion(1, "honest round trip, 1000 sessions")
def test_1_honest_round_trip():
    rng = random.Random(1)
    fields = [FieldParams(1019), preset("p256")]
    start = time.perf_counter()
    sessions = users = 0
    for trial in range(1000):
        config = random_collision_free_config(rng, fields[trial % 2], seed=trial)
        result = run_session(config)
        participants = {i for g in config.groups for i in g.members}
        assert set(result.outcomes) == participants
        for outcome in result.outcomes.values():
            assert outcome.all_accepted
            assert all(key == result.keys[gid] for gid, key in outcome.recovered_keys.items())
        sessions += 1
        users += len(participants)
    elapsed = time.perf_counter() - start
    assert elapsed < 30, f"took {elapsed:.1f}s"
    return f"{sessions} sessions, {users} user outcomes all Accepted and exact"


@criterion(2, "collision failure for {U1,U5}/{U1,U2,U3}")
def test_2_collision_reproduction():
    for params in (FieldParams(1019), preset("p256")):
        reports = [demo_collision_failure(params) for _ in range(2)]
        for report in reports:
            assert report.success
            assert report.details["user"] == 1
            assert report.details["colliding_tag"] == 6
            assert report.details["step"] == "4b"
        assert reports[0].to_json() == reports[1].to_json()
    return "DuplicateGroupTag(6) for user 1 at step 4b, p=1019 and 256-bit"


@criterion(3, "insider recovery of x_v")
def test_3_insider_secret_recovery():
    start = time.perf_counter()
    p256 = preset("p256")
    big_ok, big_fail = 0, []
    for seed in range(200):
        report = insider_secret_recovery(make_config(p256, INSIDER_GROUPS, seed), attacker=2, victim=1)
        if report.success:
            big_ok += 1
        else:
            big_fail.append(report.details.get("failure"))
    assert big_ok >= 199
    assert all(f == "SingularSystem" for f in big_fail)

    small = FieldParams(1019)
    trials, failures = 1000, []
    m_v = 2
    for seed in range(trials):
        config = make_config(small, INSIDER_GROUPS, seed)
        report = insider_secret_recovery(config, attacker=2, victim=1)
        if not report.success:
            failures.append(report.details.get("failure"))
        else:
            assert report.recovered["x_v"] == config.credential(1).secret
    assert all(f == "SingularSystem" for f in failures)
    lo, hi = binom.interval(0.99, trials, (m_v + 1) / small.p)
    assert lo <= len(failures) <= hi, (len(failures), lo, hi)
    elapsed = time.perf_counter() - start
    assert elapsed < 60, f"took {elapsed:.1f}s"
    return (f"256-bit {big_ok}/200; p=1019 {len(failures)}/{trials} singular, "
            f"99% interval [{lo:.0f}, {hi:.0f}]")


@criterion(4, "group-list forgery {U1,U2,U3} -> {U1,U5}")
def test_4_group_list_forgery():
    params = FieldParams(1019)
    for seed in range(100):
        report = group_list_forgery(params, seed=seed)
        assert report.success, seed
        assert report.details["believed_members"] == [1, 5]
        assert report.details["true_members"] == [1, 2, 3]
        assert report.details["key_matches_kgc"]
    return "100/100 accepted true key with wrong membership belief"


@criterion(5, "hash-list forgery, m_v in {1,2,3}")
def test_5_hash_list_forgery():
    params = preset("p256")
    for m_v, groups in HASH_GROUPS.items():
        for seed in range(100):
            config = make_config(params, groups, seed, n=4, protection={"bulletin": "tamperable"})
            report = hash_list_forgery(config, attacker=2, victim=1, target_group=1)
            assert report.success, (m_v, seed)
            assert report.recovered["K'_v_t"] != report.recovered["K_v_t"]
            assert report.details["non_target_keys_exact"]
    return "300/300 forged keys accepted, non-target keys exact"


@criterion(6, "interpolation and solver oracles")
def test_6_oracle_equivalence():
    checked = 0
    for p in (23, 47, 1019):
        F = FieldParams(p)
        rng = random.Random(p)
        for degree in range(6):
            for _ in range(100):
                xs = rng.sample(range(p), degree + 1)
                ys = [rng.randrange(p) for _ in xs]
                got = interpolate([Point(F(x), F(y)) for x, y in zip(xs, ys)]).ints()
                assert got == strip(vandermonde_coeffs(xs, ys, p)), (p, xs, ys)
                checked += 1

                system = LinearSystem(
                    [[F(pow(x, k, p)) for k in range(degree + 1)] for x in xs], [F(y) for y in ys]
                )
                sol = solve_linear(system)
                assert all(r.value == 0 for r in system.residual(sol))
                assert strip([c.value for c in sol]) == got

        for _ in range(100):
            n = rng.randint(1, 6)
            system = LinearSystem(
                [[random_element(rng, F) for _ in range(n)] for _ in range(n)],
                [random_element(rng, F) for _ in range(n)],
            )
            try:
                sol = solve_linear(system)
            except SingularSystem:
                continue
            assert all(r.value == 0 for r in system.residual(sol))
    return f"{checked} interpolations coefficient-exact, residuals identically zero"


@criterion(7, "falsifiability controls")
def test_7_controls():
    p1019, p256 = FieldParams(1019), preset("p256")
    assert not demo_collision_failure(p1019, groups=([1, 5], [1, 2, 4])).success

    config = make_config(p256, INSIDER_GROUPS, 1, protection={"user_to_kgc": "reliable"})
    assert not insider_secret_recovery(config, attacker=2, victim=1).success

    config = reference_group_list_config(p1019, seed=1, tamperable=False)
    assert not group_list_forgery(p1019, config=config).success

    for reliable in ({"bulletin": "reliable"}, {"kgc_to_user": "reliable"}):
        config = make_config(p256, HASH_GROUPS[2], 1, n=4, protection={"bulletin": "tamperable", **reliable})
        assert not hash_list_forgery(config, attacker=2, victim=1, target_group=1).success
    return "all four attacks report success=false under protected channels / disjoint tags"


SCENARIOS = sorted(Path(str(resources.files("umkess") / "scenarios")).glob("*.json"))


@criterion(8, "byte-identical transcripts for bundled scenarios")
def test_8_determinism(tmp_path):
    assert SCENARIOS
    for scenario in SCENARIOS:
        outputs = []
        for run in range(3):
            out = tmp_path / scenario.stem / str(run)
            assert main(["run", str(scenario), "--out", str(out)]) == 0
            outputs.append((out / "transcript.json").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2], scenario.name
    return f"{len(SCENARIOS)} scenarios x 3 runs identical"
