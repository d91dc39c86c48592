import cmath
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusionassoc.logseries import (
    BranchCutError,
    ExponentSet,
    LogPowerSeries,
    SeriesError,
    binom,
    gauss,
    double_binomial_xmy_sides,
    double_binomial_xy_sides,
    laurent_eval,
    laurent_mul,
    lps_add,
    lps_mul,
    principal_log,
    principal_power,
    to_complex,
)

F = Fraction


def test_binom_generalized():
    assert binom(5, 2) == 10
    assert binom(-1, 3) == -1
    assert binom(F(1, 2), 2) == F(-1, 8)
    assert binom(4, 0) == 1
    assert binom(3, 5) == 0


def test_exponent_set_merges_integer_ladders():
    es = ExponentSet.from_values([F(5, 2), F(1, 2), F(1, 3)])
    assert len(es) == 2
    assert sorted(to_complex(b).real for b in es.bases) == pytest.approx([1 / 3, 1 / 2])
    assert es.contains_mod_z(F(-3, 2))
    assert not es.contains_mod_z(0.25)


def test_from_exponents_anchors_lowest_member():
    s = LogPowerSeries.from_exponents("z", {(F(3, 2), 0): 1, (F(1, 2), 1): 2}, M_max=4)
    assert s.exact
    assert len(s.bases) == 1
    assert s.bases[0] == gauss(F(1, 2))
    assert s.terms[(0, 1, 0)] == gauss(1)
    assert s.terms[(0, 0, 1)] == gauss(2)


def test_terms_past_horizon_are_dropped_and_flagged():
    s = LogPowerSeries.from_exponents("z", {(0, 0): 1, (5, 0): 1}, M_max=3)
    assert s.truncated
    assert (0, 5, 0) not in s.terms


def test_log_power_cap():
    with pytest.raises(SeriesError):
        LogPowerSeries.from_exponents("z", {(0, 9): 1}, M_max=1, K_max=2)


def test_eval_matches_closed_form():
    # (1 + z)^(1/2) on |z| < 1, times z^(1/3) log z
    coeffs = [binom(F(1, 2), k) for k in range(40)]
    s = LogPowerSeries.from_coefficients("z", F(1, 3), coeffs, logpow=1)
    z = 0.3 + 0.2j
    val, tail = s.eval(z)
    ref = (1 + z) ** 0.5 * principal_power(z, 1 / 3) * principal_log(z)
    assert abs(val - ref) < 1e-12
    assert tail < 1e-15


def test_derive_and_shift():
    s = LogPowerSeries.from_exponents("z", {(F(1, 2), 1): 1}, M_max=2)
    d = s.derive()
    # d/dz z^(1/2) log z = 1/2 z^(-1/2) log z + z^(-1/2)
    z = 0.7
    val, _ = d.eval(z)
    ref = 0.5 * z ** -0.5 * cmath.log(z) + z ** -0.5
    assert abs(val - ref) < 1e-14
    sh = s.shift(2)
    assert abs(sh.eval(z)[0] - z ** 2.5 * cmath.log(z)) < 1e-14


def test_mul_and_add_agree_with_values():
    a = LogPowerSeries.from_coefficients("z", F(1, 4), [1, 2, 3], K_max=4)
    b = LogPowerSeries.from_exponents("z", {(F(1, 4), 1): F(1, 2), (F(5, 4), 0): -1}, M_max=2)
    z = 0.2 - 0.1j
    va, vb = a.eval(z)[0], b.eval(z)[0]
    assert abs(lps_add(a, b).eval(z)[0] - (va + vb)) < 1e-14
    prod = lps_mul(a, b)
    assert prod.truncated
    assert abs(prod.eval(z)[0] - va * vb) < 0.05 * abs(va * vb)


def test_branch_cut():
    with pytest.raises(BranchCutError):
        principal_log(-2.0)
    with pytest.raises(BranchCutError):
        principal_log(0)


def test_json_round_trip_exact_and_float():
    s = LogPowerSeries.from_exponents("z", {(F(1, 3), 0): F(2, 7), (F(4, 3), 2): -1}, M_max=3)
    back = LogPowerSeries.from_json(s.to_json())
    assert back == s
    f = s.to_float()
    back = LogPowerSeries.from_json_dict(json.loads(f.to_json()))
    assert abs(back.eval(0.4)[0] - s.eval(0.4)[0]) < 1e-15


@pytest.mark.parametrize("n", range(-3, 4))
@pytest.mark.parametrize("ell", range(0, 9))
def test_double_binomial_identities(n, ell):
    lhs, rhs = double_binomial_xy_sides(n, ell, M=12)
    assert lhs.terms == rhs.terms
    lhs, rhs = double_binomial_xmy_sides(n, ell)
    assert lhs.terms == rhs.terms


@settings(max_examples=40, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4),
       st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4))
def test_laurent_mul_is_pointwise(i1, j1, k1, i2, j2, k2):
    p = {(i1, j1, k1): F(3, 2)}
    q = {(i2, j2, k2): F(-1, 5), (0, 0, 0): F(1)}
    x, y = F(7), F(4)
    assert laurent_eval(laurent_mul(p, q), x, y) == laurent_eval(p, x, y) * laurent_eval(q, x, y)
