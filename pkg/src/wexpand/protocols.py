"""W-state construction, the one-photon expansion gate and its cascades.

The gate mixes one photon of an n-photon W state (mode ``a``) with an
``|H>`` ancilla (mode ``b``) on a polarization-dependent beam splitter,
flips the V phase on output ``c`` with a half-wave plate and keeps the
events with exactly one photon in every spatial mode. At the reference
reflectivities the kept branch is ``sqrt((n+1)/(5n)) |W_{n+1}>``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import InvalidN, InvalidSpec, NotNormalized, NotSingleOccupied
from .fock import H, V, StateVector, fidelity, infidelity, make_basis_state, norm, occ, permute_spatial_modes, product_state, tensor_product
from .optics import BALANCED, EXPANSION_REFLECTIVITY, Reflectivity, apply_element, compose, hwp_zero, pdbs
from .postselect import coincidence_pattern, project


class Source(str, Enum):
    SINGLE_PHOTONS = "single"
    EPR_SEED = "epr"


class FirstElement(str, Enum):
    PDBS = "pdbs"
    BALANCED = "balanced"


@dataclass(frozen=True)
class StageRecord:
    stage: int
    n_from: int
    element: str
    probability: float
    cumulative_probability: float
    fidelity: float


@dataclass(frozen=True)
class ExpansionReport:
    success_probability: float
    analytic_probability: float
    fidelity_with_target: float
    output_state: StateVector
    steps: int
    stages: tuple[StageRecord, ...] = field(default=())
    infidelity: float = 0.0


@dataclass(frozen=True)
class CascadeSpec:
    target_n: int
    source: Source = Source.SINGLE_PHOTONS
    first_element: FirstElement = FirstElement.PDBS
    reflectivity: Reflectivity = EXPANSION_REFLECTIVITY

    def __post_init__(self):
        try:
            object.__setattr__(self, "source", Source(self.source))
            object.__setattr__(self, "first_element", FirstElement(self.first_element))
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None
        _check_cascade(self.target_n, self.source, self.first_element)


def _check_cascade(n: int, source: Source, first: FirstElement) -> None:
    if n < 2:
        raise InvalidSpec(f"target_n must be >= 2, got {n}")
    if source is Source.EPR_SEED and n < 3:
        raise InvalidSpec("an EPR seed already is W_2; target_n must be >= 3")
    if first is FirstElement.BALANCED and source is not Source.SINGLE_PHOTONS:
        raise InvalidSpec("a balanced first splitter only applies to single-photon sources")


# -- states -------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def build_w(n: int) -> StateVector:
    """|W_n> on modes 0..n-1: one V photon shared symmetrically among n H photons."""
    if n < 1:
        raise InvalidN(f"W state needs n >= 1, got {n}")
    amp = 1 / math.sqrt(n)
    terms = {}
    for k in range(n):
        pols = [V if i == k else H for i in range(n)]
        (key,) = product_state(pols).terms
        terms[key] = amp
    return StateVector(terms)


def build_epr() -> StateVector:
    """(|HV> + |VH>)/sqrt(2), i.e. W_2."""
    s = 1 / math.sqrt(2)
    return StateVector({occ((0, "H"), (1, "V")): s, occ((0, "V"), (1, "H")): s})


def build_ghz(n: int) -> StateVector:
    if n < 1:
        raise InvalidN(f"GHZ state needs n >= 1, got {n}")
    s = 1 / math.sqrt(2)
    return product_state([H] * n) * s + product_state([V] * n) * s


# -- expansion gate -------------------------------------------------------------


def expansion_gate(r: Reflectivity, a: int, b: int):
    """PDBS on (a, b) in place followed by the 0-degree wave plate on output a."""
    return compose(hwp_zero(a), pdbs(r, a, b))


def expand_once(s: StateVector, attach_mode: int | None = None, r: Reflectivity = EXPANSION_REFLECTIVITY) -> ExpansionReport:
    """Add one photon to ``s`` through the photon of ``attach_mode``.

    ``attach_mode`` defaults to the highest occupied mode. The output is
    relabeled onto modes ``0..n``; the ancilla's output port becomes mode ``n``.
    """
    if not isinstance(r, Reflectivity):
        r = Reflectivity(*r)
    if abs(norm(s) - 1.0) > 1e-9:
        raise NotNormalized(f"expand_once needs a normalized state, got norm {norm(s):.12g}")
    modes = sorted(s.modes())
    if attach_mode is None:
        attach_mode = modes[-1]
    if any(k.mode_totals().get(attach_mode, 0) != 1 for k in s):
        raise NotSingleOccupied(f"mode {attach_mode} must hold exactly one photon in every term")
    photons = s.photon_numbers()
    n = max(photons)

    ancilla_mode = modes[-1] + 1
    ancilla = make_basis_state(occ((ancilla_mode, "H")))
    psi = apply_element(tensor_product(s, ancilla), expansion_gate(r, attach_mode, ancilla_mode))
    result = project(psi, coincidence_pattern(modes + [ancilla_mode]))

    relabel = {m: i for i, m in enumerate(modes + [ancilla_mode])}
    out = permute_spatial_modes(result.state, relabel)
    target = build_w(n + 1)
    fid, infid = (fidelity(target, out), infidelity(target, out)) if len(out) else (0.0, 1.0)
    if r.is_close(EXPANSION_REFLECTIVITY) and len(photons) == 1:
        analytic = analytic_probability(n)
    else:
        analytic = result.probability
    return ExpansionReport(result.probability, analytic, fid, out, 1, infidelity=infid)


def run_cascade(spec: CascadeSpec) -> ExpansionReport:
    """Grow a W state photon by photon up to ``spec.target_n``."""
    stages: list[StageRecord] = []
    cumulative = 1.0
    if spec.source is Source.SINGLE_PHOTONS:
        state = make_basis_state(occ((0, "V")))
        n = 1
    else:
        state = build_epr()
        n = 2
    while n < spec.target_n:
        if n == 1 and spec.first_element is FirstElement.BALANCED:
            r, label = BALANCED, "balanced"
        else:
            r, label = spec.reflectivity, "pdbs"
        rep = expand_once(state, n - 1, r)
        cumulative *= rep.success_probability
        stages.append(StageRecord(len(stages) + 1, n, label, rep.success_probability, cumulative, rep.fidelity_with_target))
        state = rep.output_state
        n += 1
        if not len(state):
            break

    if len(state) and n == spec.target_n:
        target = build_w(spec.target_n)
        fid, infid = fidelity(target, state), infidelity(target, state)
    else:
        fid, infid = 0.0, 1.0
    if spec.reflectivity.is_close(EXPANSION_REFLECTIVITY):
        analytic = analytic_cascade_probability(spec.target_n, spec.source, spec.first_element)
    else:
        analytic = cumulative
    return ExpansionReport(cumulative, analytic, fid, state, len(stages), tuple(stages), infid)


# -- closed forms -----------------------------------------------------------------


def analytic_probability_exact(n_from: int) -> Fraction:
    if n_from < 1:
        raise InvalidN(f"n_from must be >= 1, got {n_from}")
    return Fraction(n_from + 1, 5 * n_from)


def analytic_probability(n_from: int) -> float:
    """Success probability (n+1)/(5n) of one expansion step from W_n."""
    return float(analytic_probability_exact(n_from))


def analytic_cascade_probability_exact(n: int, source=Source.SINGLE_PHOTONS, first_element=FirstElement.PDBS) -> Fraction:
    try:
        source, first_element = Source(source), FirstElement(first_element)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from None
    _check_cascade(n, source, first_element)
    if source is Source.EPR_SEED:
        return Fraction(n, 2 * 5 ** (n - 2))
    if first_element is FirstElement.BALANCED:
        return Fraction(n, 4 * 5 ** (n - 2))
    return Fraction(n, 5 ** (n - 1))


def analytic_cascade_probability(n: int, source=Source.SINGLE_PHOTONS, first_element=FirstElement.PDBS) -> float:
    """Total success probability of preparing W_n by repeated expansion."""
    return float(analytic_cascade_probability_exact(n, source, first_element))


def tashima_probability_exact(n: int) -> Fraction:
    if n < 3:
        raise InvalidN(f"the two-photon expansion scheme needs n >= 3, got {n}")
    if n % 2:
        k = (n - 1) // 2
        return Fraction(2 * k + 1, 2 ** (4 * k))
    k = n // 2 - 1
    return Fraction(k + 1, 2 ** (4 * k))


def tashima_probability(n: int) -> float:
    """Success probability of the two-photon-adding expansion scheme for W_n."""
    return float(tashima_probability_exact(n))
