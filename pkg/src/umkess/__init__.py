"""UMKESS group key distribution and a harness reproducing its known flaws."""

from .attacks import (
    AttackReport,
    demo_collision_failure,
    group_list_forgery,
    hash_list_forgery,
    insider_secret_recovery,
)
from .field import FieldElement, FieldParams, hash_to_field, preset, validate_safe_prime
from .netsim import AdversaryScript, SessionConfig, make_config, replay, run_session
from .poly import Point, Polynomial, interpolate, solve_linear

__all__ = [
    "AdversaryScript",
    "AttackReport",
    "FieldElement",
    "FieldParams",
    "Point",
    "Polynomial",
    "SessionConfig",
    "demo_collision_failure",
    "group_list_forgery",
    "hash_list_forgery",
    "hash_to_field",
    "insider_secret_recovery",
    "interpolate",
    "make_config",
    "preset",
    "replay",
    "run_session",
    "solve_linear",
    "validate_safe_prime",
]
