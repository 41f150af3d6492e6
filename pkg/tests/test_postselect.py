import math

import numpy as np
import pytest

from wexpand.errors import DuplicateMode, NotNormalized
from wexpand.fock import StateVector, fidelity, normalize, occ, product_state
from wexpand.optics import EXPANSION_REFLECTIVITY, apply_element, compose, hwp_zero, pdbs
from wexpand.postselect import DetectionPattern, coincidence_pattern, project
from wexpand.protocols import build_w

GATE = compose(hwp_zero(0), pdbs(EXPANSION_REFLECTIVITY, 0, 1))


def test_coincidence_pattern_construction():
    assert coincidence_pattern([2, 3]) == DetectionPattern({2: 1, 3: 1})
    assert coincidence_pattern([]) == DetectionPattern()
    assert dict(coincidence_pattern(range(1, 5)).required) == {1: 1, 2: 1, 3: 1, 4: 1}
    with pytest.raises(DuplicateMode):
        coincidence_pattern([0, 0])


def test_hh_input_postselects_with_probability_one_fifth():
    res = project(apply_element(product_state("HH"), GATE), coincidence_pattern([0, 1]))
    assert abs(res.probability - 0.2) < 1e-12
    assert abs(fidelity(res.state, product_state("HH")) - 1) < 1e-12


def test_vh_input_postselects_to_symmetric_pair():
    res = project(apply_element(product_state("VH"), GATE), coincidence_pattern([0, 1]))
    assert abs(res.probability - 0.4) < 1e-12
    expected = normalize(product_state("HV") + product_state("VH"))
    assert abs(fidelity(res.state, expected) - 1) < 1e-12
    assert abs(res.state[occ((0, "H"), (1, "V"))] - 1 / math.sqrt(2)) < 1e-12


def test_empty_pattern_keeps_everything():
    w = build_w(3)
    res = project(w, DetectionPattern())
    assert res.probability == pytest.approx(1, abs=1e-15)
    assert dict(res.state.terms) == pytest.approx(dict(w.terms))


@pytest.mark.parametrize("pols", ["HH", "VH", "HV", "VV"])
def test_exhaustive_patterns_sum_to_one(pols):
    out = apply_element(product_state(pols), GATE)
    total = sum(project(out, DetectionPattern(p)).probability for p in ({0: 2}, {1: 2}, {0: 1, 1: 1}))
    assert abs(total - 1) < 1e-10


def test_project_is_idempotent():
    out = apply_element(product_state("VH"), GATE)
    first = project(out, coincidence_pattern([0, 1]))
    again = project(first.state, coincidence_pattern([0, 1]))
    assert abs(again.probability - 1) < 1e-12
    assert max(abs(again.state[k] - first.state[k]) for k in first.state) < 1e-12


def test_polarization_blindness():
    pat = coincidence_pattern([0, 1])
    for pols in ("HH", "HV", "VH", "VV"):
        assert project(product_state(pols), pat).probability == 1
    assert project(make_bunched(), pat).probability == 0


def make_bunched():
    return StateVector({occ((0, "H"), (0, "V")): 1.0})


def test_zero_probability_gives_empty_state():
    res = project(make_bunched(), coincidence_pattern([0, 1]))
    assert res.probability == 0 and len(res.state) == 0


def test_project_requires_normalized_state():
    with pytest.raises(NotNormalized):
        project(2 * build_w(2), DetectionPattern())


def test_probability_is_squared_norm_of_kept_branch():
    rng = np.random.default_rng(1)
    keys = [occ((0, "H"), (1, "H")), occ((0, "H", 2)), occ((0, "V"), (1, "H")), occ((1, "V", 2))]
    for _ in range(20):
        s = normalize(StateVector({k: complex(*rng.normal(size=2)) for k in keys}))
        res = project(s, coincidence_pattern([0, 1]))
        assert abs(res.probability - (abs(s[keys[0]]) ** 2 + abs(s[keys[2]]) ** 2)) < 1e-12
