"""Verdicts produced by the verification routines and their JSON form."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .expr import ZeroCertificate


def _jsonable(v: Any) -> Any:
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    if hasattr(v, "item") and callable(v.item):  # numpy scalars
        return _jsonable(v.item())
    return v


@dataclass
class Verdict:
    """Outcome of one named check.  Truthy iff the check passed."""

    name: str
    passed: bool
    exact: bool = False
    samples: int = 0
    max_residual: float = 0.0
    witness: Any = None
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.passed)

    @classmethod
    def from_zero(cls, name: str, cert: ZeroCertificate, witness=None, **details) -> "Verdict":
        if witness is None and cert.witness is not None:
            witness = {"point": list(cert.witness)}
        return cls(
            name=name,
            passed=cert.zero,
            exact=cert.exact,
            samples=cert.samples,
            max_residual=cert.max_abs,
            witness=witness,
            details=details,
        )

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "name": self.name,
                "passed": bool(self.passed),
                "exact": self.exact,
                "samples": self.samples,
                "max_residual": self.max_residual,
                "witness": self.witness,
                "details": self.details,
            }
        )


def all_passed(verdicts) -> Verdict:
    verdicts = list(verdicts)
    return Verdict(
        name="all",
        passed=all(verdicts),
        exact=all(v.exact for v in verdicts),
        samples=max((v.samples for v in verdicts), default=0),
        max_residual=max((v.max_residual for v in verdicts), default=0.0),
        witness=next((v.witness for v in verdicts if not v), None),
    )


def jsonable(v: Any) -> Any:
    return _jsonable(v)
