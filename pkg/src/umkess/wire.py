"""JSON forms of protocol messages and outcomes.

Field elements are written as lowercase hex of their fixed-width canonical
encoding. Map keys (group ids, user indices) become decimal strings.
"""

from __future__ import annotations

import json

from .field import FieldElement, FieldParams, from_hex
from .poly import Point
from .protocol import (
    ChallengeMessage,
    GroupDescriptor,
    GroupListBroadcast,
    PointBundle,
    PublicBulletin,
    SessionOutcome,
    Verdict,
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def message_to_json(msg) -> dict | None:
    if msg is None:
        return None
    if isinstance(msg, GroupListBroadcast):
        return {
            "type": "group_list",
            "groups": [
                {"group_id": g.group_id, "members": list(g.members), "tag": g.tag.hex()} for g in msg.groups
            ],
        }
    if isinstance(msg, ChallengeMessage):
        return {
            "type": "challenges",
            "sender": msg.sender_index,
            "challenges": {str(k): v.hex() for k, v in sorted(msg.challenges.items())},
        }
    if isinstance(msg, PointBundle):
        return {
            "type": "points",
            "recipient": msg.recipient_index,
            "points": [[pt.x.hex(), pt.y.hex()] for pt in msg.points],
        }
    if isinstance(msg, PublicBulletin):
        return {
            "type": "bulletin",
            "r0": msg.r0.hex(),
            "key_hashes": {str(k): v.hex() for k, v in sorted(msg.key_hashes.items())},
        }
    raise TypeError(f"not a protocol message: {type(msg).__name__}")


def message_from_json(obj: dict | None, params: FieldParams):
    if obj is None:
        return None
    kind = obj["type"]
    if kind == "group_list":
        return GroupListBroadcast(
            tuple(
                GroupDescriptor(g["group_id"], tuple(g["members"]), from_hex(g["tag"], params))
                for g in obj["groups"]
            )
        )
    if kind == "challenges":
        return ChallengeMessage(
            obj["sender"], {int(k): from_hex(v, params) for k, v in obj["challenges"].items()}
        )
    if kind == "points":
        return PointBundle(
            obj["recipient"],
            tuple(Point(from_hex(x, params), from_hex(y, params)) for x, y in obj["points"]),
        )
    if kind == "bulletin":
        return PublicBulletin(
            from_hex(obj["r0"], params), {int(k): from_hex(v, params) for k, v in obj["key_hashes"].items()}
        )
    raise ValueError(f"unknown message type {kind!r}")


def outcome_to_json(outcome: SessionOutcome) -> dict:
    return {
        "recovered_keys": {str(k): v.hex() for k, v in sorted(outcome.recovered_keys.items())},
        "verification": {str(k): v.value for k, v in sorted(outcome.verification.items())},
    }


def outcome_from_json(obj: dict, params: FieldParams) -> SessionOutcome:
    return SessionOutcome(
        {int(k): from_hex(v, params) for k, v in obj["recovered_keys"].items()},
        {int(k): Verdict(v) for k, v in obj["verification"].items()},
    )


def element_map_to_json(values: dict) -> dict:
    out = {}
    for k, v in values.items():
        out[str(k)] = v.hex() if isinstance(v, FieldElement) else v
    return out
