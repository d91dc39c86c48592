from fractions import Fraction

import pytest

from fusionassoc.heisenberg import (
    OMEGA,
    CutoffError,
    FockModule,
    IntertwinerTruncation,
    Momenta,
    Quadruple,
    axiom_violations,
    closed_form_4pt,
    closed_form_5pt,
    correlator_value,
    direct_mode_sum,
    in_domain_4pt,
    in_domain_5pt,
    osc,
    partitions,
    wick_polynomial,
)
from fusionassoc.logseries import BranchCutError

F = Fraction


def test_partition_counts():
    assert [len(partitions(n)) for n in range(8)] == [1, 1, 2, 3, 5, 7, 11, 15]
    assert all(sum(p) == 6 for p in partitions(6))


def test_virasoro_zero_mode_is_weight():
    A = FockModule(F(1, 2), grade_cutoff=8)
    for g in range(5):
        for lam in partitions(g):
            out = A.act(OMEGA, 1, {lam: F(1)})
            assert out == {lam: A.weight(lam)}
    assert A.act(OMEGA, 1, {(2, 1): F(1)}) == {(2, 1): F(25, 8)}


def test_heisenberg_commutator():
    # [a_m, a_n] = m delta_{m+n,0}
    A = FockModule(F(1, 3), grade_cutoff=10)
    v = {(2, 1, 1): F(1)}
    for m in (-2, -1, 1, 2):
        left = A.act(osc(1), m, A.act(osc(1), -m, v))
        right = A.act(osc(1), -m, A.act(osc(1), m, v))
        diff = dict(left)
        for k, c in right.items():
            diff[k] = diff.get(k, 0) - c
        diff = {k: c for k, c in diff.items() if c}
        assert diff == ({k: m * c for k, c in v.items()} if m else {})


def test_cutoff_enforced():
    A = FockModule(1, grade_cutoff=2)
    with pytest.raises(CutoffError):
        A.act(osc(1), -3, {(): F(1)})
    assert A.act(osc(1), -3, {(): F(1)}, enforce_cutoff=False) == {(3,): F(1)}


def test_dual_action_is_transpose():
    A = FockModule(F(2, 5), grade_cutoff=10)
    for alpha in (osc(1), osc(2), OMEGA):
        for m in range(-2, 3):
            for mu in partitions(3):
                theta = {mu: F(1)}
                dual = A.dual_act(alpha, m, theta)
                target = 3 - (alpha.weight - m - 1)
                for nu in partitions(target) if target >= 0 else ():
                    img = A.act(alpha, m, {nu: F(1)}, enforce_cutoff=False)
                    assert dual.get(nu, 0) == img.get(mu, 0)


def test_complements():
    A = FockModule(1, complement_scale=F(5, 2), enlarged_cap=1)
    assert A.complement() == [{(): F(5, 2)}]
    assert A.enlarged_complement() == [{(): F(5, 2)}, {(1,): F(1)}]
    assert A.c1_rewrite(()) == []
    assert A.c1_rewrite((3, 1)) == [(F(1), osc(3), (1,))]
    with pytest.raises(ValueError):
        FockModule(1, complement_scale=0)


def test_intertwiner_highest_weight():
    Y = IntertwinerTruncation(F(1, 2), F(1, 3))
    assert Y.image((), (), 0) == {(): F(1)}
    # a_{-1} component: Y(1, z) u contains a z^(ab+1) coefficient a
    assert Y.image((), (), 1) == {(1,): F(1, 2)}
    assert Y.exponent(2, 1, 0) == F(1, 6) + 1


def test_axioms_low_grade():
    Y = IntertwinerTruncation(F(1, 2), F(-1, 3))
    assert axiom_violations(Y, [osc(1), osc(2), OMEGA], 3, range(-2, 3)) == []


def test_axioms_catch_wrong_coefficient():
    class Broken(IntertwinerTruncation):
        def image(self, v, u, grade):
            out = dict(super().image(v, u, grade))
            if v == (1,) and u == () and grade == 0:
                out[()] = out.get((), 0) + 1
            return out

    bad = axiom_violations(Broken(F(1, 2), F(1, 3)), [osc(1)], 2, range(-1, 2), stop_after=1)
    assert bad


def test_closed_forms():
    assert closed_form_4pt(1, 1, 1, 7, 4) == pytest.approx(84)
    assert closed_form_5pt(1, 1, 1, 1, 7, 6, 4) == pytest.approx(1008)
    with pytest.raises(BranchCutError):
        closed_form_4pt(1, 1, 1, 4, 7)


def test_domains():
    assert in_domain_4pt(7, 4)
    assert not in_domain_4pt(7, 2)
    assert in_domain_5pt(7, 6, 4)
    assert not in_domain_5pt(7, 4, 6)


def test_wick_highest_weight_is_one():
    M = Momenta.of(F(1, 2), F(1, 3), F(2, 5))
    assert wick_polynomial((), (), (), (), M) == {(0, 0, 0): F(1)}


@pytest.mark.parametrize("chart", ["A(BC)", "(AB)C"])
def test_mode_sum_backends_agree(chart):
    M = Momenta.of(F(1, 2), F(1, 3), F(2, 5))
    xi = Quadruple.basis((1,), (1,), (), (2,))
    w, _ = direct_mode_sum(xi, M, 7, 4, 12, backend="wick", chart=chart)
    s, _ = direct_mode_sum(xi, M, 7, 4, 12, backend="states", chart=chart)
    assert abs(w - s) <= 1e-12 * abs(w)


def test_mode_sum_converges_to_correlator():
    M = Momenta.of(F(1, 2), F(1, 3), F(2, 5))
    xi = Quadruple.of({(2,): F(1)}, {(1,): F(2)}, {(1, 1): F(1)}, {(): F(1)})
    ref = correlator_value(xi.slot(0), xi.slot(1), xi.slot(2), xi.slot(3), M, 7, 4)
    val, tail = direct_mode_sum(xi, M, 7, 4, 120)
    assert abs(val - ref) <= 1e-12 * abs(ref)
    assert tail < 1e-15


def test_mode_sum_rejects_wrong_region():
    M = Momenta.of(1, 1, 1)
    with pytest.raises(BranchCutError):
        direct_mode_sum(Quadruple.basis(), M, 4, 7, 10)
    with pytest.raises(BranchCutError):
        direct_mode_sum(Quadruple.basis(), M, 7, 2, 10, chart="(AB)C")


def test_quadruple_json():
    xi = Quadruple.of({(2,): F(1, 3)}, {(1,): F(2)}, {(): F(1)}, {(1, 1): F(-1)})
    assert Quadruple.from_json(xi.to_json()) == xi
    assert xi.grades == (2, 1, 0, 2)
