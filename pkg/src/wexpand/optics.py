"""Linear optical elements acting on photon creation operators.

A :class:`ModeCoupling` holds a unitary ``U`` over an ordered channel list;
column ``k`` is the image of input channel ``k``:
``a_k^dag -> sum_j U[j, k] a_j^dag``. :func:`apply_element` expands that
substitution term by term. :func:`amplitude_oracle` computes the same
transition amplitudes from matrix permanents and shares no code with it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidReflectivity, NonUnitary, PhotonNumberMismatch
from .fock import H, V, Channel, Occupation, StateVector, channel

UNITARY_TOL = 1e-10
MAX_ORACLE_PHOTONS = 6


@dataclass(frozen=True)
class Reflectivity:
    eta_h: float
    eta_v: float

    def __post_init__(self):
        for name in ("eta_h", "eta_v"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise InvalidReflectivity(f"{name}={value!r} outside [0, 1]")

    def for_pol(self, pol) -> float:
        return self.eta_h if pol == H else self.eta_v

    def is_close(self, other: Reflectivity, tol: float = 1e-12) -> bool:
        return abs(self.eta_h - other.eta_h) <= tol and abs(self.eta_v - other.eta_v) <= tol


EXPANSION_REFLECTIVITY = Reflectivity((5 - math.sqrt(5)) / 10, (5 + math.sqrt(5)) / 10)
BALANCED = Reflectivity(0.5, 0.5)


@dataclass(frozen=True, eq=False)
class ModeCoupling:
    channels: tuple[Channel, ...]
    matrix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        chans = tuple(channel(*c) for c in self.channels)
        if len(set(chans)) != len(chans):
            raise ValueError("coupling channels must be distinct")
        u = np.array(self.matrix, dtype=complex)
        u.setflags(write=False)
        m = len(chans)
        if u.shape != (m, m):
            raise ValueError(f"matrix shape {u.shape} does not match {m} channels")
        dev = np.abs(u.conj().T @ u - np.eye(m)).max(initial=0.0)
        if dev > UNITARY_TOL:
            raise NonUnitary(f"U^dag U deviates from identity by {dev:.3g}")
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "matrix", u)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(chans)})

    def index(self, ch: Channel) -> int:
        return self._index[ch]

    def __contains__(self, ch) -> bool:
        return ch in self._index

    def inverse(self) -> ModeCoupling:
        return ModeCoupling(self.channels, self.matrix.conj().T)

    def embed(self, channels: Sequence[Channel]) -> np.ndarray:
        """Matrix of this coupling on a superset channel list (identity elsewhere)."""
        pos = [channels.index(c) for c in self.channels]
        out = np.eye(len(channels), dtype=complex)
        out[np.ix_(pos, pos)] = self.matrix
        return out

    def __str__(self) -> str:
        head = " " * 6 + "".join(f"{str(c):>12}" for c in self.channels)
        rows = [head]
        for j, c in enumerate(self.channels):
            cells = "".join(f"{_fmt_entry(z):>12}" for z in self.matrix[j])
            rows.append(f"{str(c):>6}{cells}")
        return "\n".join(rows)

    def _expansion(self, n_in: tuple[int, ...]) -> list[tuple[tuple[int, ...], complex]]:
        """Output occupations (per coupling channel) and amplitudes for input counts ``n_in``."""
        hit = self._cache.get(n_in)
        if hit is not None:
            return hit
        u = self.matrix
        cols = [k for k, n in enumerate(n_in) for _ in range(n)]
        poly: dict[tuple[int, ...], complex] = {(): 1.0 + 0j}
        for k in cols:
            nz = [(j, u[j, k]) for j in range(u.shape[0]) if u[j, k] != 0]
            grown: dict[tuple[int, ...], complex] = {}
            for mono, c in poly.items():
                for j, ujk in nz:
                    key = tuple(sorted(mono + (j,)))
                    grown[key] = grown.get(key, 0j) + c * ujk
            poly = grown
        in_fact = math.prod(math.factorial(n) for n in n_in)
        result = []
        for mono, c in poly.items():
            counts = [0] * len(n_in)
            for j in mono:
                counts[j] += 1
            out_fact = math.prod(math.factorial(n) for n in counts)
            result.append((tuple(counts), c * math.sqrt(out_fact / in_fact)))
        self._cache[n_in] = result
        return result


def _fmt_entry(z: complex) -> str:
    if abs(z.imag) < 1e-15:
        return f"{z.real:.6f}"
    return f"{z.real:.3f}{z.imag:+.3f}j"


def identity(channels: Iterable[Channel]) -> ModeCoupling:
    chans = tuple(sorted(channel(*c) for c in channels))
    return ModeCoupling(chans, np.eye(len(chans)))


def pdbs(r: Reflectivity, in_a: int, in_b: int, out_c: int | None = None, out_d: int | None = None) -> ModeCoupling:
    """Polarization-dependent beam splitter.

    Per polarization p with reflectivity eta_p::

        a_p^dag -> sqrt(eta_p) c_p^dag + sqrt(1 - eta_p) d_p^dag
        b_p^dag -> sqrt(1 - eta_p) c_p^dag - sqrt(eta_p) d_p^dag

    With ``out_c == in_a`` and ``out_d == in_b`` (the default) the element
    acts in place on four channels. Disjoint output modes give an
    eight-channel coupling whose (c, d) inputs are routed back to (a, b)
    so that the matrix stays unitary.
    """
    if not isinstance(r, Reflectivity):
        r = Reflectivity(*r)
    out_c = in_a if out_c is None else out_c
    out_d = in_b if out_d is None else out_d
    if in_a == in_b or out_c == out_d:
        raise ValueError("beam splitter ports must use distinct modes")
    in_place = (in_a, in_b) == (out_c, out_d)
    if not in_place and {in_a, in_b} & {out_c, out_d}:
        raise ValueError("output modes must equal the input modes or be disjoint from them")

    ins = [channel(m, p) for p in (H, V) for m in (in_a, in_b)]
    outs = [channel(m, p) for p in (H, V) for m in (out_c, out_d)]
    chans = sorted(set(ins) | set(outs))
    idx = {c: i for i, c in enumerate(chans)}
    u = np.zeros((len(chans), len(chans)))
    for p in (H, V):
        eta = r.for_pol(p)
        t, s = math.sqrt(eta), math.sqrt(1.0 - eta)
        a, b, c, d = (channel(m, p) for m in (in_a, in_b, out_c, out_d))
        block = {(c, a): t, (d, a): s, (c, b): s, (d, b): -t}
        for (row, col), val in block.items():
            u[idx[row], idx[col]] = val
            if not in_place:
                u[idx[col], idx[row]] = val
    return ModeCoupling(tuple(chans), u)


def balanced_splitter(in_a: int, in_b: int, out_c: int | None = None, out_d: int | None = None) -> ModeCoupling:
    return pdbs(BALANCED, in_a, in_b, out_c, out_d)


def hwp_zero(mode: int) -> ModeCoupling:
    """Half-wave plate at 0 degrees: H -> H, V -> -V."""
    return ModeCoupling((channel(mode, H), channel(mode, V)), np.diag([1.0, -1.0]))


def compose(e1: ModeCoupling, e2: ModeCoupling) -> ModeCoupling:
    """Coupling equivalent to applying ``e2`` first, then ``e1``."""
    chans = sorted(set(e1.channels) | set(e2.channels))
    return ModeCoupling(tuple(chans), e1.embed(chans) @ e2.embed(chans))


def apply_element(s: StateVector, e: ModeCoupling) -> StateVector:
    """Evolve ``s`` through ``e``; channels outside ``e`` pass through."""
    out: dict[Occupation, complex] = {}
    m = len(e.channels)
    for key, amp in s.items():
        n_in = [0] * m
        rest = []
        for ch, n in key.items:
            if ch in e:
                n_in[e.index(ch)] = n
            else:
                rest.append((ch, n))
        for n_out, c in e._expansion(tuple(n_in)):
            inside = [(e.channels[j], n) for j, n in enumerate(n_out) if n]
            target = Occupation.from_counts(rest + inside)
            out[target] = out.get(target, 0j) + amp * c
    return StateVector(out, s.tol)


def apply_circuit(s: StateVector, elements: Iterable[ModeCoupling]) -> StateVector:
    for e in elements:
        s = apply_element(s, e)
    return s


# -- permanent-based oracle ---------------------------------------------------


def permanent_naive(a: np.ndarray) -> complex:
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    rows = range(n)
    return complex(sum(math.prod(a[i, p[i]] for i in rows) for p in itertools.permutations(rows)))


def permanent_ryser(a: np.ndarray) -> complex:
    """Ryser's inclusion-exclusion formula, O(2^n n^2)."""
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for size in range(1, n + 1):
        sign = (-1) ** size
        for cols in itertools.combinations(range(n), size):
            total += sign * np.prod(a[:, list(cols)].sum(axis=1))
    return (-1) ** n * total


def permanent(a: np.ndarray) -> complex:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("permanent needs a square matrix")
    if a.shape[0] <= 4:
        return permanent_naive(a)
    if a.shape[0] <= MAX_ORACLE_PHOTONS:
        return permanent_ryser(a)
    raise ValueError(f"permanent limited to {MAX_ORACLE_PHOTONS}x{MAX_ORACLE_PHOTONS}")


def amplitude_oracle(e: ModeCoupling, in_occ: Occupation, out_occ: Occupation) -> complex:
    """<out| U |in> as per(U[out, in]) / sqrt(prod n_in! prod n_out!)."""
    for label, o in (("input", in_occ), ("output", out_occ)):
        stray = [ch for ch, _ in o.items if ch not in e]
        if stray:
            raise ValueError(f"{label} occupation uses channels outside the coupling: {stray}")
    if in_occ.total_photons != out_occ.total_photons:
        raise PhotonNumberMismatch(f"{in_occ.total_photons} photons in, {out_occ.total_photons} out")
    if in_occ.total_photons > MAX_ORACLE_PHOTONS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_PHOTONS} photons")
    cols = [e.index(ch) for ch, n in in_occ.items for _ in range(n)]
    rows = [e.index(ch) for ch, n in out_occ.items for _ in range(n)]
    sub = e.matrix[np.ix_(rows, cols)]
    denom = math.prod(math.factorial(n) for _, n in in_occ.items) * math.prod(
        math.factorial(n) for _, n in out_occ.items
    )
    return permanent(sub) / math.sqrt(denom)


def givens_unitary(channels: Sequence[Channel], rng: np.random.Generator, rotations: int | None = None) -> ModeCoupling:
    """Random unitary built from complex Givens rotations and a diagonal phase layer."""
    chans = tuple(channels)
    m = len(chans)
    u = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, m)))
    if m >= 2:
        for _ in range(rotations if rotations is not None else 2 * m * m):
            i, j = rng.choice(m, size=2, replace=False)
            theta = rng.uniform(0, np.pi / 2)
            phi = rng.uniform(0, 2 * np.pi)
            g = np.eye(m, dtype=complex)
            g[i, i] = math.cos(theta)
            g[j, j] = math.cos(theta)
            g[i, j] = -np.exp(-1j * phi) * math.sin(theta)
            g[j, i] = np.exp(1j * phi) * math.sin(theta)
            u = g @ u
    return ModeCoupling(chans, u)
