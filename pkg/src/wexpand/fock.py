"""Sparse multiphoton states over (spatial mode, polarization) channels.

Basis labels are occupation numbers. A label ``{(0, H): 2}`` means two
photons in channel (0, H); the bosonic ``sqrt(n!)`` factors that appear
when creation operators act are handled by :mod:`wexpand.optics`, so
everything here is purely combinatorial.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import IntEnum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import InvalidPermutation, NotNormalized, OverlappingModes, ZeroState

DEFAULT_TOL = 1e-12
NORM_TOL = 1e-9


class Polarization(IntEnum):
    """Polarization qubit: H encodes logical 0, V encodes logical 1."""

    H = 0
    V = 1

    def __str__(self) -> str:
        return self.name


H = Polarization.H
V = Polarization.V


class Channel(NamedTuple):
    """A (spatial mode, polarization) pair; ordered by mode, then H < V."""

    mode: int
    pol: Polarization

    def __str__(self) -> str:
        return f"{self.pol.name}{self.mode}"


def channel(mode: int, pol: Polarization | str) -> Channel:
    if isinstance(pol, str):
        pol = Polarization[pol]
    if mode < 0:
        raise ValueError(f"mode index must be non-negative, got {mode}")
    return Channel(int(mode), Polarization(pol))


@dataclass(frozen=True, order=True)
class Occupation:
    """Photon counts per channel in canonical (sorted, zero-free) form.

    Build instances with :meth:`from_counts` or :func:`occ`; the raw
    constructor assumes its argument is already canonical.
    """

    items: tuple[tuple[Channel, int], ...] = ()

    @classmethod
    def from_counts(cls, counts: Mapping[Channel, int] | Iterable[tuple[Channel, int]]) -> Occupation:
        pairs = counts.items() if isinstance(counts, Mapping) else counts
        merged: dict[Channel, int] = {}
        for ch, n in pairs:
            if type(ch) is not Channel:
                ch = channel(*ch)
            if n < 0:
                raise ValueError(f"negative photon count {n} in channel {ch}")
            merged[ch] = merged.get(ch, 0) + int(n)
        return cls(tuple(sorted((ch, n) for ch, n in merged.items() if n)))

    @property
    def counts(self) -> dict[Channel, int]:
        return dict(self.items)

    @property
    def total_photons(self) -> int:
        return sum(n for _, n in self.items)

    def modes(self) -> frozenset[int]:
        return frozenset(ch.mode for ch, _ in self.items)

    def mode_totals(self) -> dict[int, int]:
        """Photon count per spatial mode, summed over polarization."""
        totals: dict[int, int] = {}
        for ch, n in self.items:
            totals[ch.mode] = totals.get(ch.mode, 0) + n
        return totals

    def canonical(self) -> Occupation:
        return Occupation.from_counts(self.items)

    def merge(self, other: Occupation) -> Occupation:
        return Occupation.from_counts(self.items + other.items)

    def __getitem__(self, ch: Channel) -> int:
        return dict(self.items).get(ch, 0)

    def __str__(self) -> str:
        if not self.items:
            return "|vac>"
        parts = [str(ch) if n == 1 else f"{ch}^{n}" for ch, n in self.items]
        return "|" + " ".join(parts) + ">"

    def to_record(self) -> list[list]:
        return [[ch.mode, ch.pol.name, n] for ch, n in self.items]


def occ(*spec: tuple[int, str | Polarization] | tuple[int, str | Polarization, int]) -> Occupation:
    """Shorthand constructor: ``occ((0, "H"), (1, "V", 2))``."""
    pairs = []
    for entry in spec:
        mode, pol, *rest = entry
        pairs.append((channel(mode, pol), rest[0] if rest else 1))
    return Occupation.from_counts(pairs)


VACUUM = Occupation()


class StateVector:
    """Immutable sparse superposition of occupation-number basis states.

    Terms whose amplitude magnitude is at most ``tol`` are dropped on
    construction, so every derived state is pruned automatically.
    """

    __slots__ = ("_terms", "tol")

    def __init__(self, terms: Mapping[Occupation, complex] | None = None, tol: float = DEFAULT_TOL):
        kept: dict[Occupation, complex] = {}
        for key, amp in (terms or {}).items():
            amp = complex(amp)
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"non-finite amplitude {amp} for {key}")
            if abs(amp) > tol:
                kept[key] = amp
        self._terms = dict(sorted(kept.items()))
        self.tol = tol

    @property
    def terms(self) -> Mapping[Occupation, complex]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Occupation]:
        return iter(self._terms)

    def items(self):
        return self._terms.items()

    def __getitem__(self, key: Occupation) -> complex:
        return self._terms.get(key, 0j)

    def __add__(self, other: StateVector) -> StateVector:
        out = dict(self._terms)
        for key, amp in other.items():
            out[key] = out.get(key, 0j) + amp
        return StateVector(out, min(self.tol, other.tol))

    def __sub__(self, other: StateVector) -> StateVector:
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> StateVector:
        return StateVector({k: scalar * a for k, a in self._terms.items()}, self.tol)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        if not self._terms:
            return "StateVector(0)"
        body = " + ".join(f"({a.real:.6g}{a.imag:+.6g}j){k}" for k, a in self._terms.items())
        return f"StateVector({body})"

    def modes(self) -> frozenset[int]:
        found: set[int] = set()
        for key in self._terms:
            found |= key.modes()
        return frozenset(found)

    def photon_numbers(self) -> frozenset[int]:
        return frozenset(k.total_photons for k in self._terms)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(norm(self) - 1.0) <= tol

    def canonical_phase(self) -> StateVector:
        """Rotate the global phase so the smallest occupation's amplitude is real positive."""
        if not self._terms:
            return self
        first = next(iter(self._terms.values()))
        return self * cmath.exp(-1j * cmath.phase(first))

    def to_records(self) -> list[dict]:
        """Serializable term list in canonical order, with canonical global phase."""
        return [
            {"occupation": key.to_record(), "re": amp.real, "im": amp.imag}
            for key, amp in self.canonical_phase().items()
        ]


def make_basis_state(o: Occupation) -> StateVector:
    return StateVector({o: 1.0})


def tensor_product(s1: StateVector, s2: StateVector) -> StateVector:
    shared = s1.modes() & s2.modes()
    if shared:
        raise OverlappingModes(f"spatial modes {sorted(shared)} appear in both factors")
    out: dict[Occupation, complex] = {}
    for k1, a1 in s1.items():
        for k2, a2 in s2.items():
            out[k1.merge(k2)] = a1 * a2
    return StateVector(out, min(s1.tol, s2.tol))


def inner_product(bra: StateVector, ket: StateVector) -> complex:
    """<bra|ket>, conjugate-linear in ``bra``."""
    if len(bra) > len(ket):
        return sum((bra[k].conjugate() * a for k, a in ket.items()), 0j)
    return sum((a.conjugate() * ket[k] for k, a in bra.items()), 0j)


def norm(s: StateVector) -> float:
    return math.sqrt(math.fsum(abs(a) ** 2 for a in s._terms.values()))


def normalize(s: StateVector) -> StateVector:
    n = norm(s)
    if n <= 1e-12:
        raise ZeroState("cannot normalize a state with norm <= 1e-12")
    return s * (1.0 / n)


def fidelity(s1: StateVector, s2: StateVector) -> float:
    """|<s1|s2>|^2 for normalized pure states."""
    for s in (s1, s2):
        if abs(norm(s) - 1.0) > 1e-6:
            raise NotNormalized(f"fidelity needs normalized states, got norm {norm(s):.12g}")
    return abs(inner_product(s1, s2)) ** 2


def infidelity(target: StateVector, s: StateVector) -> float:
    """1 - fidelity, as the squared norm of the part of ``s`` orthogonal to ``target``.

    Avoids the cancellation in ``1 - |<target|s>|^2``, so deficits far below
    machine epsilon stay resolvable.
    """
    fidelity(target, s)
    overlap = inner_product(target, s)
    keys = set(target.terms) | set(s.terms)
    return math.fsum(abs(s[k] - overlap * target[k]) ** 2 for k in keys)


def permute_spatial_modes(s: StateVector, perm: Mapping[int, int]) -> StateVector:
    """Relabel spatial modes by ``perm`` (old index -> new index)."""
    present = s.modes()
    missing = present - set(perm)
    if missing:
        raise InvalidPermutation(f"permutation does not cover modes {sorted(missing)}")
    if len(set(perm.values())) != len(perm):
        raise InvalidPermutation("permutation is not injective")
    if any(v < 0 for v in perm.values()):
        raise InvalidPermutation("mode indices must be non-negative")
    if all(perm[m] == m for m in present):
        return s
    out: dict[Occupation, complex] = {}
    for key, amp in s.items():
        moved = Occupation.from_counts((Channel(perm[ch.mode], ch.pol), n) for ch, n in key.items)
        out[moved] = amp
    return StateVector(out, s.tol)


def swap_modes(s: StateVector, i: int, j: int) -> StateVector:
    perm = {m: m for m in s.modes() | {i, j}}
    perm[i], perm[j] = j, i
    return permute_spatial_modes(s, perm)


def product_state(pols: Iterable[Polarization | str], start: int = 0) -> StateVector:
    """One photon per consecutive spatial mode with the given polarizations."""
    return make_basis_state(Occupation.from_counts((channel(start + i, p), 1) for i, p in enumerate(pols)))
