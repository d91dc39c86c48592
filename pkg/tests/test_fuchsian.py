import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from fusionassoc.fuchsian import (
    DegradedPrecisionWarning,
    FuchsianError,
    FundamentalSolutionSet,
    MatrixSeries,
    dunford,
    euler_fundamental,
    fuchsian_solve,
    gauge_residual,
    residual,
    series_inverse,
    series_mul,
    solution_set_equal,
    to_levelt,
)
from fusionassoc.logseries import gauss, to_complex

F = Fraction


def jordan_cell(s, a):
    return [[a if i == j else (1 if j == i + 1 else 0) for j in range(s)] for i in range(s)]


def random_system(rng, r=3, order=6, resonance=True):
    eig = list(rng.uniform(-1, 1, r))
    if resonance and r >= 2:
        eig[1] = eig[0] + 1
    P = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    A0 = P @ np.diag(eig) @ np.linalg.inv(P)
    mats = [A0] + [0.3 * rng.normal(size=(r, r)) for _ in range(order)]
    return MatrixSeries.from_matrices(mats, radius=1.0)


def test_series_inverse_round_trip():
    rng = np.random.default_rng(1)
    P = MatrixSeries.from_matrices([np.eye(3) + 0.1 * rng.normal(size=(3, 3))]
                                   + [rng.normal(size=(3, 3)) for _ in range(5)])
    prod = series_mul(P, series_inverse(P))
    assert np.allclose(prod.coeff(0), np.eye(3))
    for k in range(1, 6):
        assert np.max(np.abs(prod.coeff(k))) < 1e-10


def test_dunford_exact_jordan():
    A = sp.Matrix([[2, 1, 0], [0, 2, 0], [0, 0, F(1, 3)]])
    d = dunford(A)
    assert d.exact
    assert d.check() == {"commutator": 0.0, "nilpotency": 0.0}
    assert sorted(d.eigenvalues, key=lambda v: to_complex(v).real) == [gauss(F(1, 3)), gauss(2), gauss(2)]


def test_dunford_float_clusters_nearby_eigenvalues():
    A = np.array([[1.0, 1.0], [1e-14, 1.0]])
    d = dunford(A)
    assert len(d.clusters) == 1
    assert d.check()["commutator"] < 1e-12
    assert np.allclose(d.S + d.N, A)


def test_dunford_warns_when_ill_conditioned():
    A = np.array([[0.0, 1.0], [1e-24, 0.0]])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        dunford(A, cluster_tol=1e-14)
    assert any(issubclass(w.category, DegradedPrecisionWarning) for w in rec)


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_euler_columns_exact(s):
    a = F(2, 3)
    A0 = jordan_cell(s, a)
    Y = euler_fundamental(A0)
    assert Y.exact
    A = MatrixSeries.constant(A0)
    assert residual(A, Y) == 0
    # the last column carries log^(s-1)/(s-1)! in its top entry
    top = Y.columns[s - 1][0]
    assert top.terms[(0, 0, s - 1)] == gauss(F(1, math.factorial(s - 1)))
    z = 0.4 + 0.1j
    Phi = Y.evaluate(z)
    ref = np.array(sp.exp(sp.Matrix(A0) * sp.log(sp.nsimplify(z))).evalf(), dtype=complex)
    assert np.allclose(Phi, ref, atol=1e-12)


def test_levelt_float_random():
    rng = np.random.default_rng(3)
    for _ in range(5):
        A = random_system(rng)
        lev = to_levelt(A)
        assert lev.levelt_defect() < 1e-10
        assert lev.gauge_defect(A) < 1e-10
        assert sorted(np.linalg.eigvals(lev.B.coeff(0)), key=lambda z: (z.real, z.imag)) == pytest.approx(
            sorted(np.linalg.eigvals(A.coeff(0)), key=lambda z: (z.real, z.imag)), abs=1e-8)


def test_levelt_exact_keeps_resonant_term():
    A0 = [[1, 0], [0, 0]]
    A1 = [[0, 0], [1, 0]]
    A1b = [[0, 1], [0, 0]]
    A = MatrixSeries.from_matrices([A0, A1b, A1], exact=True)
    lev = to_levelt(A)
    assert lev.levelt_defect() == 0
    assert lev.gauge_defect(A) == 0
    # eigenvalue gap 1 in the (0,1) position: the order-1 block survives
    assert lev.B.coeff(1)[0, 1] != 0


def test_gauge_residual_detects_wrong_gauge():
    rng = np.random.default_rng(4)
    A = random_system(rng, resonance=False)
    lev = to_levelt(A)
    bad = MatrixSeries.from_matrices([lev.Delta.coeff(0) * 1.01] + list(lev.Delta.coeffs[1:]))
    assert gauge_residual(A, lev.B, bad) > 1e-4


def test_solve_float_residual_and_resonance():
    rng = np.random.default_rng(5)
    A = random_system(rng, r=3, order=8)
    Y = fuchsian_solve(A, 12)
    assert residual(A, Y) < 1e-10
    z = 0.05 + 0.02j
    Phi = Y.evaluate(z)
    assert abs(np.linalg.det(Phi)) > 0


def test_solve_exact_resonant():
    A = MatrixSeries.from_matrices([[[1, 0], [0, 0]], [[0, 1], [1, 0]]], exact=True)
    Y = fuchsian_solve(A, 6)
    assert Y.exact
    assert residual(A, Y) == 0
    assert any(t > 0 for col in Y.columns for s in col for (_, _, t) in s.terms)


def test_solution_is_independent_of_levelt_gauge():
    rng = np.random.default_rng(6)
    A = random_system(rng, r=2, order=5, resonance=False)
    Y1 = fuchsian_solve(A, 8)
    Y2 = fuchsian_solve(A, 8, to_levelt(A.truncate(8)))
    assert solution_set_equal(Y1, Y2)


def test_radius_bound_scalar():
    mats = [[[0.3]]] + [[[1.0]] for _ in range(200)]
    A = MatrixSeries.from_matrices(mats, radius=1.0)
    Y = fuchsian_solve(A, 200)
    assert Y.coefficient_band(200) ** (1 / 200) <= 1.05


def test_matrix_series_json():
    A = MatrixSeries.from_matrices([[[F(1, 2), 0], [1, 0]], [[0, 1], [0, 0]]], exact=True)
    back = MatrixSeries.from_json(A.to_json())
    assert back.exact
    assert back.coeffs == A.coeffs
    flat = {"r": 2, "coeffs": [[["1/2", 0], [0, 0], [1, 0], [0, 0]]]}
    fl = MatrixSeries.from_json_dict(flat)
    assert fl.coeff(0)[0, 0] == 0.5
    with pytest.raises(FuchsianError):
        MatrixSeries.from_json_dict({"r": 3, "coeffs": [[[[0, 0]]]]})


def test_solution_json_round_trip():
    A = MatrixSeries.from_matrices([[[F(1, 2), 1], [0, F(1, 2)]], [[0, 0], [1, 0]]], exact=True)
    Y = fuchsian_solve(A, 4)
    back = FundamentalSolutionSet.from_json_dict(json.loads(Y.to_json()))
    assert solution_set_equal(Y, back)


def test_negative_order_rejected():
    with pytest.raises(FuchsianError):
        fuchsian_solve(MatrixSeries.constant([[0]]), -1)
