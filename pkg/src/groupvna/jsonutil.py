"""Deterministic JSON helpers for reports and certificates."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction


def fraction_json(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def fraction_from_json(d: dict) -> Fraction:
    return Fraction(d["num"], d["den"])


def canonical_dumps(obj) -> str:
    """Stable serialization: sorted keys, no whitespace drift."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def spec_digest(spec: dict) -> str:
    return hashlib.sha256(canonical_dumps(spec).encode("utf-8")).hexdigest()
