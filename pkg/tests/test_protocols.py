import itertools
import math
from fractions import Fraction

import pytest
import sympy as sp

from oracles import exact_expansion, to_state
from wexpand.errors import InvalidN, InvalidSpec, NotNormalized, NotSingleOccupied
from wexpand.fock import fidelity, make_basis_state, norm, occ, product_state, swap_modes
from wexpand.optics import BALANCED, EXPANSION_REFLECTIVITY, Reflectivity
from wexpand.protocols import (
    CascadeSpec,
    FirstElement,
    Source,
    analytic_cascade_probability,
    analytic_cascade_probability_exact,
    analytic_probability,
    build_epr,
    build_w,
    expand_once,
    run_cascade,
    tashima_probability,
    tashima_probability_exact,
)

SQRT5 = sp.sqrt(5)
ETA_H, ETA_V = (5 - SQRT5) / 10, (5 + SQRT5) / 10

VALID_SCHEMES = [
    (Source.SINGLE_PHOTONS, FirstElement.PDBS),
    (Source.SINGLE_PHOTONS, FirstElement.BALANCED),
    (Source.EPR_SEED, FirstElement.PDBS),
]


# -- states ----------------------------------------------------------------------------


def test_build_w3():
    w = build_w(3)
    expected = (product_state("HHV") + product_state("HVH") + product_state("VHH")) * (1 / math.sqrt(3))
    assert set(w.terms) == set(expected.terms)
    assert all(abs(w[k] - 1 / math.sqrt(3)) < 1e-15 for k in w)


def test_build_w1_is_single_v_photon():
    assert dict(build_w(1).terms) == {occ((0, "V")): 1}


def test_build_w4_structure():
    w = build_w(4)
    assert len(w) == 4
    for key in w:
        assert all(abs(w[key] - 0.5) < 1e-15 for key in w)
        pols = [ch.pol.name for ch, _ in key.items]
        assert pols.count("V") == 1 and pols.count("H") == 3
        assert key.mode_totals() == {0: 1, 1: 1, 2: 1, 3: 1}


@pytest.mark.parametrize("n", range(1, 9))
def test_build_w_is_normalized(n):
    assert abs(norm(build_w(n)) - 1) < 1e-12


def test_build_w_rejects_small_n():
    with pytest.raises(InvalidN):
        build_w(0)


def test_epr_is_w2():
    epr = build_epr()
    assert abs(fidelity(epr, build_w(2)) - 1) < 1e-15
    assert len(epr) == 2 and all(abs(a - 1 / math.sqrt(2)) < 1e-15 for _, a in epr.items())
    assert all(k.mode_totals() == {0: 1, 1: 1} for k in epr)


# -- single expansion step --------------------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 9))
def test_expand_once_matches_closed_form(n):
    rep = expand_once(build_w(n))
    assert abs(rep.success_probability - (n + 1) / (5 * n)) < 1e-9
    assert abs(rep.analytic_probability - (n + 1) / (5 * n)) < 1e-15
    assert abs(rep.fidelity_with_target - 1) < 1e-9
    assert rep.output_state.modes() == frozenset(range(n + 1))
    assert rep.steps == 1


def test_expand_w2_gives_three_tenths():
    rep = expand_once(build_w(2))
    assert abs(rep.success_probability - 0.3) < 1e-12


def test_expand_w3_gives_four_fifteenths():
    rep = expand_once(build_w(3))
    assert rep.success_probability == pytest.approx(0.266667, abs=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_expand_once_agrees_with_symbolic_oracle(n):
    prob, fid, kept = exact_expansion(n, ETA_H, ETA_V)
    assert prob == sp.Rational(n + 1, 5 * n)
    assert fid == 1
    rep = expand_once(build_w(n))
    assert abs(rep.success_probability - float(prob)) < 1e-12
    ref = to_state(kept) * (1 / math.sqrt(float(prob)))
    assert set(rep.output_state.terms) == set(ref.terms)
    assert all(abs(rep.output_state[k] - ref[k]) < 1e-12 for k in ref)


def test_expand_from_single_v_photon():
    # brute force: only |V>_a|H>_b contributes, two terms of amplitude 1/sqrt5
    rep = expand_once(make_basis_state(occ((0, "V"))))
    assert abs(rep.success_probability - 0.4) < 1e-12
    assert abs(fidelity(rep.output_state, build_w(2)) - 1) < 1e-12


@pytest.mark.parametrize("attach", [0, 1, 2])
def test_attach_mode_is_irrelevant(attach):
    rep = expand_once(build_w(3), attach)
    assert abs(rep.success_probability - 4 / 15) < 1e-12
    assert abs(rep.fidelity_with_target - 1) < 1e-12


def test_expand_requires_single_occupation():
    s = make_basis_state(occ((0, "H", 2), (1, "V")))
    with pytest.raises(NotSingleOccupied):
        expand_once(s, 0)


def test_expand_requires_normalized_state():
    with pytest.raises(NotNormalized):
        expand_once(2 * build_w(2))


def test_other_reflectivity_reports_simulated_value():
    rep = expand_once(build_w(2), r=BALANCED)
    assert rep.analytic_probability == rep.success_probability
    prob, fid, _ = exact_expansion(2, sp.Rational(1, 2), sp.Rational(1, 2))
    assert abs(rep.success_probability - float(prob)) < 1e-12
    assert abs(rep.fidelity_with_target - float(fid)) < 1e-12


def test_accepts_reflectivity_tuple():
    assert abs(expand_once(build_w(2), r=(EXPANSION_REFLECTIVITY.eta_h, EXPANSION_REFLECTIVITY.eta_v)).success_probability - 0.3) < 1e-12


# -- cascades ----------------------------------------------------------------------------------


def test_cascade_single_photons_w4():
    rep = run_cascade(CascadeSpec(4, Source.SINGLE_PHOTONS, FirstElement.PDBS))
    assert abs(rep.success_probability - 0.032) < 1e-12
    assert rep.steps == 3


def test_cascade_balanced_w3():
    rep = run_cascade(CascadeSpec(3, "single", "balanced"))
    assert abs(rep.success_probability - 0.15) < 1e-12
    assert rep.stages[0].element == "balanced"


def test_cascade_epr_w4():
    rep = run_cascade(CascadeSpec(4, "epr"))
    assert abs(rep.success_probability - 0.08) < 1e-12
    assert rep.steps == 2


CASCADE_CASES = [(n, src, first) for src, first in VALID_SCHEMES for n in range(3 if src is Source.EPR_SEED else 2, 7)]


@pytest.mark.parametrize("n,source,first", CASCADE_CASES)
def test_cascade_factorizes_and_matches_formula(n, source, first):
    rep = run_cascade(CascadeSpec(n, source, first))
    product = math.prod(s.probability for s in rep.stages)
    assert abs(rep.success_probability - product) < 1e-12
    assert abs(rep.success_probability - analytic_cascade_probability(n, source, first)) < 1e-9
    assert abs(rep.fidelity_with_target - 1) < 1e-9
    assert abs(rep.stages[-1].cumulative_probability - rep.success_probability) < 1e-15


@pytest.mark.parametrize("n", range(2, 6))
def test_cascade_output_is_permutation_symmetric(n):
    out = run_cascade(CascadeSpec(n)).output_state
    for i, j in itertools.combinations(range(n), 2):
        assert abs(fidelity(out, swap_modes(out, i, j)) - 1) < 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [dict(target_n=1), dict(target_n=2, source="epr"), dict(target_n=4, source="epr", first_element="balanced"), dict(target_n=3, source="laser")],
)
def test_invalid_cascade_specs(kwargs):
    with pytest.raises(InvalidSpec):
        CascadeSpec(**kwargs)


# -- closed forms --------------------------------------------------------------------------------


def test_analytic_probability_examples():
    assert analytic_probability(2) == 0.3
    assert analytic_probability(3) == pytest.approx(4 / 15, abs=1e-15)
    assert abs(analytic_probability(10**6) - 0.2) < 1e-6
    with pytest.raises(InvalidN):
        analytic_probability(0)


def test_analytic_cascade_examples():
    assert analytic_cascade_probability(2, "single", "pdbs") == 0.4
    assert analytic_cascade_probability(3, "epr", "pdbs") == 0.3
    assert analytic_cascade_probability(4, "single", "balanced") == 0.04
    assert analytic_cascade_probability_exact(4, "single", "balanced") == Fraction(1, 25)
    with pytest.raises(InvalidSpec):
        analytic_cascade_probability(2, "epr", "pdbs")


def test_tashima_examples():
    assert tashima_probability(3) == 0.1875
    assert tashima_probability(4) == 0.125
    assert tashima_probability_exact(5) == Fraction(5, 256)
    assert tashima_probability_exact(6) == Fraction(3, 256)
    with pytest.raises(InvalidN):
        tashima_probability(2)


def test_comparison_with_two_photon_scheme():
    assert analytic_cascade_probability(3, "epr", "pdbs") > tashima_probability(3)
    assert analytic_cascade_probability(4, "epr", "pdbs") < tashima_probability(4)


@pytest.mark.parametrize("n", range(2, 11))
def test_cascade_probability_decays_by_step_factor(n):
    ratio = analytic_cascade_probability(n + 1) / analytic_cascade_probability(n)
    assert abs(ratio - (n + 1) / (5 * n)) < 1e-12


def test_rejected_root_flips_one_sign():
    # Swapping the two reflectivities keeps |coefficients| but makes the HH
    # branch negative, so the output is W_3 up to a local phase flip.
    swapped = Reflectivity(EXPANSION_REFLECTIVITY.eta_v, EXPANSION_REFLECTIVITY.eta_h)
    rep = expand_once(build_w(2), r=swapped)
    prob, fid, _ = exact_expansion(2, ETA_V, ETA_H)
    assert prob == sp.Rational(3, 10) and fid == sp.Rational(1, 9)
    assert abs(rep.success_probability - 0.3) < 1e-12
    assert abs(rep.fidelity_with_target - 1 / 9) < 1e-12
    flipped = build_w(3) - 2 * (1 / math.sqrt(3)) * product_state("VHH")
    assert abs(fidelity(rep.output_state, flipped) - 1) < 1e-12
