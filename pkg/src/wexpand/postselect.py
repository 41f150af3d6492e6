"""Photon-number post-selection with ideal, polarization-blind detectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import DuplicateMode, NotNormalized
from .fock import NORM_TOL, StateVector, norm

ZERO_PROBABILITY = 1e-15


@dataclass(frozen=True)
class DetectionPattern:
    """Required total photon count per spatial mode; absent modes are unconstrained."""

    required: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        req = {int(m): int(n) for m, n in dict(self.required).items()}
        if any(n < 0 for n in req.values()):
            raise ValueError("required photon counts must be non-negative")
        object.__setattr__(self, "required", MappingProxyType(dict(sorted(req.items()))))

    def __hash__(self):
        return hash(tuple(self.required.items()))

    def __eq__(self, other):
        return isinstance(other, DetectionPattern) and dict(self.required) == dict(other.required)

    def matches(self, totals: Mapping[int, int]) -> bool:
        return all(totals.get(m, 0) == n for m, n in self.required.items())

    def __or__(self, other: DetectionPattern) -> DetectionPattern:
        clash = [m for m in self.required if m in other.required and self.required[m] != other.required[m]]
        if clash:
            raise ValueError(f"conflicting requirements on modes {clash}")
        return DetectionPattern({**self.required, **other.required})


@dataclass(frozen=True)
class PostSelectionResult:
    probability: float
    state: StateVector


def coincidence_pattern(modes: Iterable[int]) -> DetectionPattern:
    """Exactly one photon in each listed mode."""
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise DuplicateMode(f"duplicate modes in {modes}")
    return DetectionPattern({m: 1 for m in modes})


def project(s: StateVector, pat: DetectionPattern, *, check_norm: bool = True) -> PostSelectionResult:
    """Keep the terms consistent with ``pat`` and renormalize them."""
    if check_norm and abs(norm(s) - 1.0) > NORM_TOL:
        raise NotNormalized(f"project needs a normalized state, got norm {norm(s):.12g}")
    kept = StateVector({k: a for k, a in s.items() if pat.matches(k.mode_totals())}, s.tol)
    prob = norm(kept) ** 2
    if prob < ZERO_PROBABILITY:
        return PostSelectionResult(prob, StateVector(tol=s.tol))
    return PostSelectionResult(prob, kept * (prob ** -0.5))
