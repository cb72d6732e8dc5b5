"""Command line front end.

    umkess run <scenario.json> [--out DIR] [--seed N]
    umkess verify <transcript.json> <scenario.json> [--seed N]

``run`` exits 0 when the scenario behaves as expected (honest sessions
all-Accepted, attacks successful, unless the file says ``"expect":
"failure"``), 1 on an unexpected outcome and 2 on a bad scenario file.
``verify`` replays a transcript and exits 0 if it reproduces.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from . import attacks
from .errors import PrimeError, ProtocolError, ScenarioError, TranscriptMismatch, UmkessError
from .field import PRESETS, FieldParams, validate_safe_prime
from .netsim import (
    ChannelKind,
    Protection,
    SessionConfig,
    error_to_json,
    load_transcript,
    make_config,
    replay,
    run_session,
)
from .protocol import kgc_announce
from .wire import canonical_json

SCENARIOS = ("honest", "collision", "insider-secret-recovery", "group-list-forgery", "hash-list-forgery")

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["prime", "roster", "groups", "seed", "scenario"],
    "properties": {
        "prime": {"type": "string"},
        "roster": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["index"],
                "properties": {
                    "index": {"type": "integer", "minimum": 1},
                    "secret": {"type": ["string", "integer"]},
                },
            },
        },
        "groups": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "scenario": {"enum": list(SCENARIOS)},
        "attacker": {"type": "integer", "minimum": 1},
        "victim": {"type": "integer", "minimum": 1},
        "target_group": {"type": "integer", "minimum": 1},
        "forged_members": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "protection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k.value: {"enum": [p.value for p in Protection]} for k in ChannelKind},
        },
        "expect": {"enum": ["success", "failure"]},
        "description": {"type": "string"},
    },
}

REQUIRED_FIELDS = {
    "insider-secret-recovery": ("attacker", "victim"),
    "group-list-forgery": ("victim", "target_group", "forged_members"),
    "hash-list-forgery": ("attacker", "victim", "target_group"),
}


class SchemaError(Exception):
    pass


def _parse_int(text) -> int:
    if isinstance(text, int):
        return text
    return int(text, 0)


def parse_prime(text: str) -> FieldParams:
    p = PRESETS.get(text)
    if p is None:
        try:
            p = _parse_int(text)
        except ValueError:
            raise SchemaError(f"prime must be a preset {sorted(PRESETS)} or an integer, got {text!r}") from None
    return validate_safe_prime(p)


def load_scenario(path, seed: int | None = None) -> tuple[dict, SessionConfig]:
    try:
        data = json.loads(Path(path).read_text())
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
        raise SchemaError(str(exc).splitlines()[0]) from exc
    missing = [f for f in REQUIRED_FIELDS.get(data["scenario"], ()) if f not in data]
    if missing:
        raise SchemaError(f"scenario {data['scenario']} needs fields {missing}")
    if seed is not None:
        data["seed"] = seed
    try:
        params = parse_prime(data["prime"])
        indices = [r["index"] for r in data["roster"]]
        if sorted(indices) != list(range(1, len(indices) + 1)):
            raise SchemaError("roster indices must be exactly 1..n")
        secrets = {r["index"]: _parse_int(r["secret"]) for r in data["roster"] if "secret" in r}
        config = make_config(
            params, data["groups"], data["seed"], n=len(indices), secrets=secrets,
            protection=data.get("protection"),
        )
        kgc_announce(config.groups, indices)
    except (PrimeError, ProtocolError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc
    return data, config


def execute(data: dict, config: SessionConfig) -> attacks.AttackReport:
    kind = data["scenario"]
    if kind == "honest":
        try:
            result = run_session(config)
        except ProtocolError as exc:
            details = {"error": error_to_json(exc)}
            return attacks.AttackReport("honest", False, transcript=exc.transcript, details=details)
        ok = bool(result.outcomes) and all(
            o.all_accepted and all(o.recovered_keys[g] == result.keys[g] for g in o.recovered_keys)
            for o in result.outcomes.values()
        )
        details = {"users": {str(i): {str(g): v.value for g, v in o.verification.items()}
                             for i, o in sorted(result.outcomes.items())}}
        return attacks.AttackReport("honest", ok, transcript=result.transcript, details=details)
    if kind == "collision":
        return attacks.demo_collision_failure(config.params, config=config)
    if kind == "insider-secret-recovery":
        return attacks.insider_secret_recovery(config, data["attacker"], data["victim"])
    if kind == "group-list-forgery":
        return attacks.group_list_forgery(
            config.params, config=config, victim=data["victim"],
            target_group=data["target_group"], forged_members=tuple(data["forged_members"]),
        )
    if kind == "hash-list-forgery":
        return attacks.hash_list_forgery(config, data["attacker"], data["victim"], data["target_group"])
    raise SchemaError(f"unknown scenario {kind!r}")


def cmd_run(args) -> int:
    try:
        data, config = load_scenario(args.scenario, args.seed)
        report = execute(data, config)
    except (SchemaError, PrimeError, ScenarioError, attacks.PreconditionUnmet) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "transcript.json").write_text(report.transcript.dumps())
    (out / "report.json").write_text(canonical_json(report.to_json()))
    expected = data.get("expect", "success") == "success"
    verdict = "as expected" if report.success == expected else "UNEXPECTED"
    print(f"{data['scenario']}: success={report.success} ({verdict}); wrote {out}/transcript.json, {out}/report.json")
    return 0 if report.success == expected else 1


def cmd_verify(args) -> int:
    try:
        _, config = load_scenario(args.scenario, args.seed)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        transcript = load_transcript(Path(args.transcript).read_text(), config.params)
        outcomes = replay(transcript, config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TranscriptMismatch, UmkessError) as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return 1
    print(f"transcript reproduces: {len(transcript)} records, {len(outcomes)} user outcomes")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umkess", description="UMKESS sessions and attack scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario")
    run.add_argument("--out", default="out", help="output directory (default: ./out)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="replay a transcript against its scenario")
    verify.add_argument("transcript")
    verify.add_argument("scenario")
    verify.add_argument("--seed", type=int, help="seed override used for the original run")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
