from fractions import Fraction

import numpy as np
import pytest

from fusionassoc.heisenberg import Momenta, closed_form_4pt, closed_form_5pt
from fusionassoc.pipeline import (
    RegionError,
    check_associativity,
    check_pentagon,
    evaluate_abc_modes,
    evaluate_abc_pipeline,
    in_D2,
    in_D3,
    pentagon_values,
    sample_points,
)

F = Fraction
UNIT = Momenta.of(1, 1, 1)


def test_sample_points_stay_in_domain():
    rng = np.random.default_rng(0)
    pts = sample_points(rng, 25)
    assert len(pts) == 25
    assert all(in_D2(x, y) for x, y in pts)
    assert all(abs(x - 7) <= 0.4 * 2 ** 0.5 + 1e-12 for x, _ in pts)


def test_pipeline_value_unit_momenta():
    out = evaluate_abc_pipeline(UNIT, 7.1 + 0.1j, 4.05, G_max=8, order=16)
    ref = closed_form_4pt(1, 1, 1, 7.1 + 0.1j, 4.05)
    assert abs(out["value"] - ref) <= 1e-9 * abs(ref)
    assert out["match_consistency"] <= 1e-8
    assert out["size"] == 8


def test_modes_side_unit_momenta():
    val, _ = evaluate_abc_modes(UNIT, 7, 4, 12)
    assert val == pytest.approx(84, rel=1e-12)


def test_associativity_report_shape():
    rep = check_associativity(UNIT, [(7, 4), (7.2 - 0.1j, 3.9 + 0.05j)], G_max=8, order=16)
    assert rep["passed"]
    assert len(rep["points"]) == 2
    assert rep["max_relative_deviation"] <= 1e-6
    for row in rep["points"]:
        assert row["pipeline_vs_closed_form"] <= 1e-6
        assert row["modes_vs_closed_form"] <= 1e-6


def test_associativity_rejects_outside_points():
    with pytest.raises(RegionError):
        check_associativity(UNIT, [(7, 2)])
    with pytest.raises(ValueError):
        check_associativity(UNIT, [])


def test_pentagon_small_momenta_sum():
    vals = pentagon_values(1, 1, 1, 0, 7, 6, 4, G=6)
    for v in vals.values():
        assert v == pytest.approx(6, rel=1e-10)


def test_pentagon_bracketings_converge():
    coarse = pentagon_values(1, 1, 1, 1, 7, 6, 4, G=4)
    exact = closed_form_5pt(1, 1, 1, 1, 7, 6, 4)
    for v in coarse.values():
        assert abs(v - exact) <= 1e-8 * abs(exact)


def test_pentagon_report_and_region():
    rep = check_pentagon((1, 1, 1, 1), (7, 6, 4), G=4)
    assert rep["passed"]
    assert len(rep["pairwise_relative_deviation"]) == 10
    assert not in_D3(7, 4, 6)
    with pytest.raises(RegionError):
        check_pentagon((1, 1, 1, 1), (7, 4, 6))
