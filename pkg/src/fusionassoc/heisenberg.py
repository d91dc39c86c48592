"""Rank-one free boson testbed.

Fock modules F_b are spanned by ``t^lam = a_{-lam_1} ... a_{-lam_k} |b>``
for partitions ``lam``.  Vectors are dicts ``partition -> Fraction`` with
partitions stored as descending tuples; dual vectors use the same shape,
``theta_mu`` being the functional that reads off the coefficient of ``t^mu``.

Everything here is exact (``Fraction``) except the evaluation helpers, which
return complex floats on principal branches.
"""

from __future__ import annotations

import cmath
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping

from .logseries import (
    BranchCutError,
    binom,
    laurent_add_into,
    laurent_mul,
    principal_log,
    principal_power,
)

Partition = tuple
Vector = dict

DEFAULT_GRADE_CUTOFF = 12


class CutoffError(ValueError):
    """A mode action left the configured grade window."""


# ---------------------------------------------------------------------------
# partitions


@lru_cache(maxsize=None)
def partitions(n: int, max_part: int | None = None) -> tuple:
    """Partitions of ``n`` as descending tuples, largest first part first."""
    if n < 0:
        return ()
    if n == 0:
        return ((),)
    if max_part is None or max_part > n:
        max_part = n
    out = []
    for first in range(max_part, 0, -1):
        for rest in partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def partitions_upto(n: int) -> list:
    return [p for g in range(n + 1) for p in partitions(g)]


def add_part(lam: Partition, k: int) -> Partition:
    return tuple(sorted(lam + (k,), reverse=True))


def remove_part(lam: Partition, k: int) -> Partition:
    idx = lam.index(k)
    return lam[:idx] + lam[idx + 1:]


def z_factor(mu: Partition) -> int:
    """``prod_n n^(m_n) m_n!``, the norm of ``t^mu`` under a_n = n d/dt_n."""
    out = 1
    for n, m in Counter(mu).items():
        out *= n ** m * math.factorial(m)
    return out


def vec_add_into(acc: dict, vec: Mapping, scale=1) -> None:
    for key, c in vec.items():
        v = acc.get(key, 0) + c * scale
        if v == 0:
            acc.pop(key, None)
        else:
            acc[key] = v


def vec_grade(vec: Mapping) -> int | None:
    """Common grade of a homogeneous vector, ``None`` for the zero vector."""
    grades = {sum(p) for p in vec}
    if not grades:
        return None
    if len(grades) > 1:
        raise ValueError("vector is not homogeneous")
    return grades.pop()


def basis_vector(lam: Iterable[int]) -> dict:
    return {tuple(sorted(lam, reverse=True)): Fraction(1)}


# ---------------------------------------------------------------------------
# VOA elements


@dataclass(frozen=True)
class VOAElement:
    """One of the vacuum, ``a_{-n} 1`` (weight n) or the conformal vector."""

    kind: str
    n: int = 0

    @property
    def weight(self) -> int:
        if self.kind == "vacuum":
            return 0
        if self.kind == "osc":
            return self.n
        if self.kind == "omega":
            return 2
        raise ValueError(self.kind)

    def __str__(self) -> str:
        if self.kind == "osc":
            return f"a_-{self.n}1"
        return self.kind


VACUUM = VOAElement("vacuum")
OMEGA = VOAElement("omega")


def osc(n: int) -> VOAElement:
    if n < 1:
        raise ValueError("oscillator generators need n >= 1")
    return VOAElement("osc", n)


# ---------------------------------------------------------------------------
# raw oscillator algebra on polynomial vectors


def _osc_on_partition(k: int, lam: Partition, momentum: Fraction) -> dict:
    if k < 0:
        return {add_part(lam, -k): Fraction(1)}
    if k == 0:
        return {lam: Fraction(momentum)} if momentum != 0 else {}
    m = lam.count(k)
    if m == 0:
        return {}
    return {remove_part(lam, k): Fraction(k * m)}


def oscillator(k: int, vec: Mapping, momentum: Fraction) -> dict:
    """Apply ``a_k`` (``a_0`` acts by ``momentum``)."""
    out: dict = {}
    for lam, c in vec.items():
        vec_add_into(out, _osc_on_partition(k, lam, momentum), c)
    return out


def virasoro(k: int, vec: Mapping, momentum: Fraction) -> dict:
    """``L(k) = 1/2 sum_i :a_{k-i} a_i:`` with annihilators to the right."""
    out: dict = {}
    for lam, c in vec.items():
        g = sum(lam)
        for i in range(k - g - 2, g + 3):
            p, q = k - i, i
            lo, hi = min(p, q), max(p, q)
            step = _osc_on_partition(hi, lam, momentum)
            if not step:
                continue
            res = oscillator(lo, step, momentum)
            vec_add_into(out, res, c * Fraction(1, 2))
    return out


def _act_raw(alpha: VOAElement, m: int, vec: Mapping, momentum: Fraction) -> dict:
    if alpha.kind == "vacuum":
        return dict(vec) if m == -1 else {}
    if alpha.kind == "osc":
        n = alpha.n
        coeff = binom(n - m - 2, n - 1)
        if coeff == 0:
            return {}
        res = oscillator(m + 1 - n, vec, momentum)
        return {k: v * coeff for k, v in res.items()}
    if alpha.kind == "omega":
        return virasoro(m - 1, vec, momentum)
    raise ValueError(alpha.kind)


# ---------------------------------------------------------------------------
# Fock module


@dataclass(frozen=True)
class FockModule:
    """The Fock module of a rational momentum with a grade window.

    ``complement_scale`` rescales the single complement vector and
    ``enlarged_cap`` sets the enlarged complement to all partitions of grade
    at most the cap.  Both only change coordinates, never the module.
    """

    momentum: Fraction
    grade_cutoff: int = DEFAULT_GRADE_CUTOFF
    complement_scale: Fraction = Fraction(1)
    enlarged_cap: int = 1

    def __post_init__(self):
        object.__setattr__(self, "momentum", Fraction(self.momentum))
        object.__setattr__(self, "complement_scale", Fraction(self.complement_scale))
        if self.grade_cutoff < 0:
            raise ValueError("grade cutoff must be nonnegative")
        if self.complement_scale == 0:
            raise ValueError("complement scale must be nonzero")

    # grading ------------------------------------------------------------

    def basis(self, grade: int) -> tuple:
        return partitions(grade)

    def dim(self, grade: int) -> int:
        return len(partitions(grade))

    @staticmethod
    def grade(lam: Partition) -> int:
        return sum(lam)

    def weight(self, lam: Partition) -> Fraction:
        return self.momentum ** 2 / 2 + sum(lam)

    @property
    def lowest_weight(self) -> Fraction:
        return self.momentum ** 2 / 2

    # complements --------------------------------------------------------

    def complement(self) -> list:
        """Basis of the chosen complement of C_1: the scaled highest weight vector."""
        return [{(): self.complement_scale}]

    def enlarged_complement(self) -> list:
        out = list(self.complement())
        for g in range(1, self.enlarged_cap + 1):
            for lam in partitions(g):
                out.append({lam: Fraction(1)})
        return out

    def complement_coords(self, lam: Partition) -> dict:
        """Coordinates of a complement-span basis vector on ``complement()``."""
        if lam != ():
            raise ValueError(f"{lam} is not in the complement span")
        return {0: 1 / self.complement_scale}

    def c1_rewrite(self, lam: Partition) -> list:
        """Write ``t^lam`` as a sum of ``alpha_{-1}`` images of lower vectors.

        Returns ``[(coeff, alpha, lower_partition)]``; empty for the
        complement vector.
        """
        if lam == ():
            return []
        return [(Fraction(1), osc(lam[0]), lam[1:])]

    # actions ------------------------------------------------------------

    def act(self, alpha: VOAElement, m: int, vec: Mapping, enforce_cutoff: bool = True) -> dict:
        """Mode ``alpha_m`` on a vector; lands in grade ``g + wt(alpha) - m - 1``."""
        g = vec_grade(vec)
        if g is None:
            return {}
        target = g + alpha.weight - m - 1
        if target < 0:
            return {}
        if enforce_cutoff and target > self.grade_cutoff:
            raise CutoffError(f"mode {alpha}_{m} leaves grade window ({target} > {self.grade_cutoff})")
        return _act_raw(alpha, m, vec, self.momentum)

    def dual_act(self, alpha: VOAElement, m: int, theta: Mapping) -> dict:
        """The functional ``theta o alpha_m``."""
        g = vec_grade(theta)
        if g is None:
            return {}
        target = g - (alpha.weight - m - 1)
        if target < 0:
            return {}
        if alpha.kind == "osc":
            return self._dual_osc(alpha.n, m, theta)
        out: dict = {}
        for nu in partitions(target):
            img = _act_raw(alpha, m, {nu: Fraction(1)}, self.momentum)
            val = sum((theta.get(mu, 0) * c for mu, c in img.items()), Fraction(0))
            if val:
                out[nu] = val
        return out

    def _dual_osc(self, n: int, m: int, theta: Mapping) -> dict:
        coeff = binom(n - m - 2, n - 1)
        if coeff == 0:
            return {}
        k = m + 1 - n
        out: dict = {}
        for mu, c in theta.items():
            if k < 0:
                if -k in mu:
                    vec_add_into(out, {remove_part(mu, -k): c * coeff})
            elif k == 0:
                vec_add_into(out, {mu: c * coeff * self.momentum})
            else:
                vec_add_into(out, {add_part(mu, k): c * coeff * k * (mu.count(k) + 1)})
        return out

    def to_json(self) -> dict:
        return {"type": "fock", "momentum": str(self.momentum), "grade_cutoff": self.grade_cutoff}

    @classmethod
    def from_json(cls, doc: Mapping) -> "FockModule":
        if doc.get("type", "fock") != "fock":
            raise ValueError(f"unsupported module type {doc.get('type')!r}")
        return cls(Fraction(str(doc["momentum"])), int(doc.get("grade_cutoff", DEFAULT_GRADE_CUTOFF)),
                   Fraction(str(doc.get("complement_scale", 1))), int(doc.get("enlarged_cap", 1)))


def mode_action(alpha: VOAElement, j: int, w: Mapping, module: FockModule) -> dict:
    return module.act(alpha, j, w)


# ---------------------------------------------------------------------------
# explicit intertwining operator


def _shift_poly(poly: Mapping, a: Fraction) -> dict:
    """Substitute ``t_k -> t_k - a`` for every k."""
    out: dict = {}
    for lam, c in poly.items():
        terms = {(): c}
        for k, m in Counter(lam).items():
            factor = {}
            for i in range(m + 1):
                factor[(k,) * i] = Fraction(math.comb(m, i)) * (-a) ** (m - i)
            nxt: dict = {}
            for p1, c1 in terms.items():
                for p2, c2 in factor.items():
                    if c2 == 0:
                        continue
                    key = tuple(sorted(p1 + p2, reverse=True))
                    nxt[key] = nxt.get(key, 0) + c1 * c2
            terms = nxt
        vec_add_into(out, terms)
    return out


def _mul_trunc(p: Mapping, q: Mapping, max_grade: int) -> dict:
    out: dict = {}
    for l1, c1 in p.items():
        g1 = sum(l1)
        for l2, c2 in q.items():
            if g1 + sum(l2) > max_grade:
                continue
            key = tuple(sorted(l1 + l2, reverse=True))
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}


@lru_cache(maxsize=None)
def _exp_minus(a: Fraction, max_grade: int) -> tuple:
    """``exp(a sum_m t_m / m)`` through ``max_grade`` as (partition, coeff) pairs."""
    out = []
    for lam in partitions_upto(max_grade):
        c = Fraction(1)
        for m, k in Counter(lam).items():
            c *= Fraction(a / m) ** k / math.factorial(k)
        if c:
            out.append((lam, c))
    return tuple(out)


def _a0plus(n: int, poly: Mapping, b: Fraction) -> dict:
    """Non-creation part of the field ``d^(n-1) a / (n-1)!`` at z = 1."""
    sign = -1 if (n - 1) % 2 else 1
    out: dict = {}
    for lam, c in poly.items():
        if b:
            vec_add_into(out, {lam: c * b * sign})
        for k, m in Counter(lam).items():
            coeff = sign * math.comb(k + n - 1, n - 1) * k * m
            vec_add_into(out, {remove_part(lam, k): c * coeff})
    return out


def _aminus(n: int, poly: Mapping, max_grade: int) -> dict:
    """Multiply by the creation part ``sum_{m>=n} C(m-1, n-1) t_m`` at z = 1."""
    out: dict = {}
    for lam, c in poly.items():
        g = sum(lam)
        for m in range(n, max_grade - g + 1):
            vec_add_into(out, {add_part(lam, m): c * math.comb(m - 1, n - 1)})
    return out


class IntertwinerTruncation:
    """Matrix coefficients of the vertex operator ``F_a x F_b -> F_{a+b}``.

    ``<theta_mu, Y(t^v, z) t^u> = C z^(ab + |mu| - |v| - |u|)`` where the
    field of ``t^v`` is the normal ordered product of derivative fields with
    ``E^-(a,z) E^+(a,z) z^(ab)``.  The coefficient ``C`` is read off at z = 1
    and the highest weight vectors are matched with coefficient 1.
    """

    def __init__(self, a, b, grade_cutoff: int = DEFAULT_GRADE_CUTOFF):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.grade_cutoff = grade_cutoff
        self._cache: dict = {}

    def exponent(self, theta_grade: int, v_grade: int, u_grade: int) -> Fraction:
        return self.a * self.b + theta_grade - v_grade - u_grade

    def image(self, v: Partition, u: Partition, grade: int) -> dict:
        """``{mu: C(theta_mu, t^v, t^u)}`` over partitions ``mu`` of ``grade``."""
        key = (v, u, grade)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out: dict = {}
        if grade >= 0:
            counts = sorted(Counter(v).items())
            for choice in product(*[range(m + 1) for _, m in counts]):
                weight = 1
                creation = []
                poly = {u: Fraction(1)}
                for (n, m), k in zip(counts, choice):
                    weight *= math.comb(m, k)
                    creation += [n] * k
                    for _ in range(m - k):
                        poly = _a0plus(n, poly, self.b)
                if not poly:
                    continue
                room = grade - sum(creation)
                if room < 0:
                    continue
                poly = _shift_poly(poly, self.a)
                poly = {p: c for p, c in poly.items() if sum(p) <= room}
                poly = _mul_trunc(dict(_exp_minus(self.a, room)), poly, room)
                for n in creation:
                    poly = _aminus(n, poly, grade)
                for lam, c in poly.items():
                    if sum(lam) == grade:
                        vec_add_into(out, {lam: c * weight})
        self._cache[key] = out
        return out

    def coefficient(self, theta: Mapping, v: Mapping, u: Mapping) -> Fraction:
        """Multilinear matrix coefficient ``C(theta, v, u)``."""
        g = vec_grade(theta)
        if g is None:
            return Fraction(0)
        total = Fraction(0)
        for vp, vc in v.items():
            for up, uc in u.items():
                img = self.image(vp, up, g)
                s = sum((theta.get(mu, 0) * c for mu, c in img.items()), Fraction(0))
                total += vc * uc * s
        return total

    def apply(self, v: Mapping, u: Mapping, grade: int) -> dict:
        """Grade-``grade`` component of ``Y(v, 1) u`` as a vector."""
        out: dict = {}
        for vp, vc in v.items():
            for up, uc in u.items():
                vec_add_into(out, self.image(vp, up, grade), vc * uc)
        return out

    def mode(self, v: Partition, s, u: Partition) -> dict:
        """The mode ``v_s u``; nonzero only for s in the ladder ``-ab - 1 + Z``."""
        g = -Fraction(s) - 1 - self.a * self.b + sum(v) + sum(u)
        if g.denominator != 1 or g < 0:
            return {}
        return self.image(v, u, int(g))


# ---------------------------------------------------------------------------
# axioms (I1)-(I3) on the explicit intertwiner


def axiom_violations(
    Y: IntertwinerTruncation,
    alphas: Iterable[VOAElement],
    max_total_grade: int,
    modes: Iterable[int],
    stop_after: int | None = None,
) -> list:
    """Check commutativity, associativity and the derivative property.

    Each identity is compared as an exact equality of the single coefficient
    multiplying the common power of z.  Returns a list of violation records
    (empty when everything holds).
    """
    A = FockModule(Y.a, grade_cutoff=max_total_grade + 8)
    B = FockModule(Y.b, grade_cutoff=max_total_grade + 8)
    T = FockModule(Y.a + Y.b, grade_cutoff=max_total_grade + 8)
    modes = list(modes)
    alphas = list(alphas)
    bad: list = []
    C = Y.coefficient

    for total in range(max_total_grade + 1):
        for gt in range(total + 1):
            for gv in range(total - gt + 1):
                gu = total - gt - gv
                for mu in partitions(gt):
                    theta = {mu: Fraction(1)}
                    for vl in partitions(gv):
                        v = {vl: Fraction(1)}
                        for ul in partitions(gu):
                            u = {ul: Fraction(1)}
                            # (I3)
                            lhs = C(theta, A.act(OMEGA, 0, v, False), u)
                            rhs = Y.exponent(gt, gv, gu) * C(theta, v, u)
                            if lhs != rhs:
                                bad.append(("I3", mu, vl, ul, None, None, lhs, rhs))
                            for alpha in alphas:
                                for m in modes:
                                    # (I1)
                                    lhs = C(T.dual_act(alpha, m, theta), v, u) - C(theta, v, B.act(alpha, m, u, False))
                                    rhs = Fraction(0)
                                    j = 0
                                    while gv + alpha.weight - j - 1 >= 0:
                                        bj = binom(m, j)
                                        if bj:
                                            rhs += bj * C(theta, A.act(alpha, j, v, False), u)
                                        j += 1
                                    if lhs != rhs:
                                        bad.append(("I1", mu, vl, ul, str(alpha), m, lhs, rhs))
                                    # (I2)
                                    lhs = C(theta, A.act(alpha, m, v, False), u)
                                    rhs = Fraction(0)
                                    sign_m = -1 if m % 2 else 1
                                    j = 0
                                    while True:
                                        th_alive = gt - alpha.weight + (m - j) + 1 >= 0
                                        u_alive = gu + alpha.weight - j - 1 >= 0
                                        if not th_alive and not u_alive:
                                            break
                                        bj = binom(m, j)
                                        if bj:
                                            term = Fraction(0)
                                            if th_alive:
                                                term += C(T.dual_act(alpha, m - j, theta), v, u)
                                            if u_alive:
                                                term -= sign_m * C(theta, v, B.act(alpha, j, u, False))
                                            rhs += bj * (-1) ** j * term
                                        j += 1
                                    if lhs != rhs:
                                        bad.append(("I2", mu, vl, ul, str(alpha), m, lhs, rhs))
                                    if stop_after is not None and len(bad) >= stop_after:
                                        return bad
    return bad


# ---------------------------------------------------------------------------
# closed forms


def closed_form_4pt(a, b, c, x, y) -> complex:
    """``x^(ac) y^(bc) (x-y)^(ab)`` on principal branches."""
    x, y = complex(x), complex(y)
    if not (0 < abs(y) < abs(x)):
        raise BranchCutError("closed_form_4pt needs 0 < |y| < |x|")
    for val in (x, y, x - y):
        principal_log(val)
    a, b, c = (complex(float(t)) for t in (a, b, c))
    return principal_power(x, a * c) * principal_power(y, b * c) * principal_power(x - y, a * b)


def closed_form_5pt(a, b, c, d, x, y, z) -> complex:
    """``x^(ad) y^(bd) z^(cd) (x-y)^(ab) (x-z)^(ac) (y-z)^(bc)``."""
    x, y, z = complex(x), complex(y), complex(z)
    for val in (x, y, z, x - y, x - z, y - z):
        principal_log(val)
    a, b, c, d = (complex(float(t)) for t in (a, b, c, d))
    return (principal_power(x, a * d) * principal_power(y, b * d) * principal_power(z, c * d)
            * principal_power(x - y, a * b) * principal_power(x - z, a * c) * principal_power(y - z, b * c))


def in_domain_4pt(x, y) -> bool:
    """Membership in ``0 < |x-y| < |y| < |x|`` with x, y, x-y off the cut."""
    x, y = complex(x), complex(y)
    if not (0 < abs(x - y) < abs(y) < abs(x)):
        return False
    return all(not (v.imag == 0 and v.real <= 0) for v in (x, y, x - y))


def in_domain_5pt(x, y, z) -> bool:
    """Membership in ``|x| > |y| > |z| > |x-z| > |y-z| > |x-y| > 0`` off the cuts."""
    x, y, z = complex(x), complex(y), complex(z)
    if not (abs(x) > abs(y) > abs(z) > abs(x - z) > abs(y - z) > abs(x - y) > 0):
        return False
    return all(not (v.imag == 0 and v.real <= 0) for v in (x, y, z, x - y, x - z, y - z))


# ---------------------------------------------------------------------------
# Wick contraction oracle for four-point functions


@dataclass(frozen=True)
class Momenta:
    a: Fraction
    b: Fraction
    c: Fraction

    @classmethod
    def of(cls, a, b, c) -> "Momenta":
        return cls(Fraction(a), Fraction(b), Fraction(c))

    @property
    def total(self) -> Fraction:
        return self.a + self.b + self.c


def _site_mean(kind: str, p: int, M: Momenta) -> dict:
    a, b, c = M.a, M.b, M.c
    s = -1 if (p - 1) % 2 else 1
    if kind == "out":
        return {k: v for k, v in {(p, 0, 0): a, (0, p, 0): b}.items() if v}
    if kind == "fx":
        return {k: v for k, v in {(0, 0, -p): s * b, (-p, 0, 0): s * c}.items() if v}
    if kind == "fy":
        return {k: v for k, v in {(0, 0, -p): -a, (0, -p, 0): s * c}.items() if v}
    if kind == "in":
        return {k: v for k, v in {(-p, 0, 0): -a, (0, -p, 0): -b}.items() if v}
    raise ValueError(kind)


def _contraction(k1: str, p: int, k2: str, q: int) -> dict:
    if k1 == "out":
        if k2 == "fx":
            return {(p - q, 0, 0): Fraction(p * math.comb(p - 1, q - 1))} if p >= q else {}
        if k2 == "fy":
            return {(0, p - q, 0): Fraction(p * math.comb(p - 1, q - 1))} if p >= q else {}
        if k2 == "in":
            return {(0, 0, 0): Fraction(p)} if p == q else {}
        return {}
    if k1 == "fx":
        s = -1 if (p - 1) % 2 else 1
        if k2 == "fy":
            return {(0, 0, -p - q): Fraction(s * p * math.comb(p + q - 1, q - 1))}
        if k2 == "in":
            return {(-q - p, 0, 0): Fraction(q * s * math.comb(q + p - 1, p - 1))}
        return {}
    if k1 == "fy" and k2 == "in":
        s = -1 if (p - 1) % 2 else 1
        return {(0, -q - p, 0): Fraction(q * s * math.comb(q + p - 1, p - 1))}
    return {}


def wick_polynomial(mu: Partition, v: Partition, u: Partition, w: Partition, M: Momenta) -> dict:
    """Laurent factor ``P`` with ``F(theta_mu, v, u, w) = P * x^(ac) y^(bc) (x-y)^(ab)``.

    ``P`` is a sparse dict over monomials ``x^i y^j (x-y)^k`` and already
    includes the ``1/z_mu`` normalization of the dual basis.
    """
    sites = ([("out", n) for n in mu] + [("fx", p) for p in v]
             + [("fy", q) for q in u] + [("in", m) for m in w])
    n = len(sites)
    means = [_site_mean(k, p, M) for k, p in sites]
    contr = {}
    for i in range(n):
        for j in range(i + 1, n):
            cval = _contraction(sites[i][0], sites[i][1], sites[j][0], sites[j][1])
            if cval:
                contr[(i, j)] = cval
    memo: dict = {0: {(0, 0, 0): Fraction(1)}}

    def rec(mask: int) -> dict:
        hit = memo.get(mask)
        if hit is not None:
            return hit
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        out: dict = {}
        if means[i]:
            laurent_add_into(out, laurent_mul(means[i], rec(rest)))
        j_mask = rest
        while j_mask:
            j = (j_mask & -j_mask).bit_length() - 1
            j_mask &= ~(1 << j)
            cval = contr.get((i, j))
            if cval:
                laurent_add_into(out, laurent_mul(cval, rec(rest & ~(1 << j))))
        memo[mask] = out
        return out

    poly = rec((1 << n) - 1)
    zf = z_factor(mu)
    return {k: c / zf for k, c in poly.items()}


def correlator_polynomial(theta: Mapping, v: Mapping, u: Mapping, w: Mapping, M: Momenta) -> dict:
    """Multilinear extension of :func:`wick_polynomial`."""
    out: dict = {}
    for mu, ct in theta.items():
        for vp, cv in v.items():
            for up, cu in u.items():
                for wp, cw in w.items():
                    laurent_add_into(out, wick_polynomial(mu, vp, up, wp, M), ct * cv * cu * cw)
    return out


def correlator_value(theta, v, u, w, M: Momenta, x, y) -> complex:
    """Principal-branch value of the four-point function from the Wick form."""
    from .logseries import laurent_eval

    poly = correlator_polynomial(theta, v, u, w, M)
    if not poly:
        return 0j
    return laurent_eval(poly, x, y) * closed_form_4pt(M.a, M.b, M.c, x, y)


# ---------------------------------------------------------------------------
# direct mode sums


@dataclass(frozen=True)
class Quadruple:
    """``(theta, v, u, w)`` with each slot a homogeneous (dual) vector."""

    theta: tuple
    v: tuple
    u: tuple
    w: tuple

    @classmethod
    def of(cls, theta: Mapping, v: Mapping, u: Mapping, w: Mapping) -> "Quadruple":
        def freeze(d):
            return tuple(sorted((tuple(k), Fraction(c)) for k, c in d.items() if c))
        return cls(freeze(theta), freeze(v), freeze(u), freeze(w))

    @classmethod
    def basis(cls, mu=(), v=(), u=(), w=()) -> "Quadruple":
        return cls.of(basis_vector(mu), basis_vector(v), basis_vector(u), basis_vector(w))

    def slot(self, i: int) -> dict:
        return dict((self.theta, self.v, self.u, self.w)[i])

    @property
    def grades(self) -> tuple:
        return tuple(vec_grade(self.slot(i)) or 0 for i in range(4))

    @property
    def gr234(self) -> int:
        g = self.grades
        return g[1] + g[2] + g[3]

    @property
    def total_grade(self) -> int:
        return sum(self.grades)

    def is_zero(self) -> bool:
        return not (self.theta and self.v and self.u and self.w)

    def scaled(self, slot: int, factor) -> "Quadruple":
        slots = [self.slot(i) for i in range(4)]
        slots[slot] = {k: c * Fraction(factor) for k, c in slots[slot].items()}
        return Quadruple.of(*slots)

    def to_json(self) -> dict:
        def enc(vec):
            return [{"partition": list(p), "coeff": str(c)} for p, c in vec]
        return {"theta": enc(self.theta), "v": enc(self.v), "u": enc(self.u), "w": enc(self.w)}

    @classmethod
    def from_json(cls, doc: Mapping) -> "Quadruple":
        def dec(x):
            if isinstance(x, list) and all(isinstance(t, int) for t in x):
                return basis_vector(x)
            if isinstance(x, str):
                return basis_vector(int(t) for t in x.split(",") if t.strip())
            out = {}
            for item in x:
                out[tuple(sorted(item["partition"], reverse=True))] = Fraction(str(item.get("coeff", 1)))
            return out
        return cls.of(dec(doc["theta"]), dec(doc["v"]), dec(doc["u"]), dec(doc["w"]))


def _iota_tail_sum(s, ratio: complex, upto: int) -> list:
    """Partial terms ``C(s, l) (-ratio)^l`` for l = 0..upto."""
    terms = []
    cur = 1.0 + 0j
    sc = complex(float(s.real), float(s.imag)) if isinstance(s, complex) else complex(float(s))
    for l in range(upto + 1):
        if l > 0:
            cur *= (sc - (l - 1)) / l * (-ratio)
        terms.append(cur)
    return terms


def direct_mode_sum(xi: Quadruple, M: Momenta, x, y, G: int, backend: str = "wick",
                    chart: str = "A(BC)") -> tuple[complex, float]:
    """Truncated double mode expansion of the four-point function.

    ``chart="A(BC)"`` sums ``<theta, Y(v,x) pi_g Y(u,y) w>`` over
    intermediate grades ``g <= G`` (needs |y| < |x|).  ``chart="(AB)C"``
    sums ``<theta, Y(pi_g Y(v,x-y) u, y) w>`` (needs |x-y| < |y|).  Returns
    the partial sum and the magnitude of the last retained band.
    """
    x, y = complex(x), complex(y)
    if chart == "A(BC)" and not abs(y) < abs(x):
        raise BranchCutError("A(BC) expansion needs |y| < |x|")
    if chart == "(AB)C" and not abs(x - y) < abs(y):
        raise BranchCutError("(AB)C expansion needs |x - y| < |y|")
    if chart not in ("A(BC)", "(AB)C"):
        raise ValueError(f"unknown chart {chart!r}")
    if xi.is_zero():
        return 0j, 0.0
    if backend == "wick":
        return _mode_sum_wick(xi, M, x, y, G, chart)
    if backend == "states":
        return _mode_sum_states(xi, M, x, y, G, chart)
    raise ValueError(f"unknown backend {backend!r}")


def _mode_sum_wick(xi: Quadruple, M: Momenta, x, y, G, chart):
    a, b, c = M.a, M.b, M.c
    _, gv, gu, gw = xi.grades
    poly = correlator_polynomial(xi.slot(0), xi.slot(1), xi.slot(2), xi.slot(3), M)
    bands = [0j] * (G + 1)
    if chart == "A(BC)":
        # x^(ac+i) y^(bc+j) (x-y)^(ab+k) with (x-y)^s = x^s sum C(s,l) (-y/x)^l
        ratio = y / x
        lx, ly = principal_log(x), principal_log(y)
        for (i, j, k), coeff in poly.items():
            s = a * b + k
            base = float(coeff) * cmath.exp((float(a * c + i) + float(s)) * lx + float(b * c + j) * ly)
            g0 = j + gu + gw
            if g0 > G:
                continue
            upto = G - g0
            for l, t in enumerate(_iota_tail_sum(s, ratio, upto)):
                g = g0 + l
                if g >= 0:
                    bands[g] += base * t
    else:
        # x^(ac+i) = y^(ac+i) sum C(ac+i, l) ((x-y)/y)^l
        d = x - y
        ratio = -d / y
        ly, ld = principal_log(y), principal_log(d)
        for (i, j, k), coeff in poly.items():
            s = a * c + i
            base = float(coeff) * cmath.exp(float(b * c + j + s) * ly + float(a * b + k) * ld)
            g0 = k + gv + gu
            if g0 > G:
                continue
            upto = G - g0
            for l, t in enumerate(_iota_tail_sum(s, ratio, upto)):
                g = g0 + l
                if g >= 0:
                    bands[g] += base * t
    total = sum(bands)
    return total, abs(bands[G])


def _mode_sum_states(xi: Quadruple, M: Momenta, x, y, G, chart):
    a, b, c = M.a, M.b, M.c
    theta, v, u, w = (xi.slot(i) for i in range(4))
    gt, gv, gu, gw = xi.grades
    bands = [0j] * (G + 1)
    if chart == "A(BC)":
        Y1 = IntertwinerTruncation(a, b + c)
        Y2 = IntertwinerTruncation(b, c)
        lx, ly = principal_log(x), principal_log(y)
        for g in range(G + 1):
            mid = Y2.apply(u, w, g)
            if not mid:
                continue
            acc = Fraction(0)
            for s, cs in mid.items():
                acc += cs * _coef_vs(Y1, theta, v, s)
            if acc:
                ex = float(Y1.exponent(gt, gv, g))
                ey = float(Y2.exponent(g, gu, gw))
                bands[g] = float(acc) * cmath.exp(ex * lx + ey * ly)
    else:
        Y4 = IntertwinerTruncation(a, b)
        Y3 = IntertwinerTruncation(a + b, c)
        d = x - y
        ly, ld = principal_log(y), principal_log(d)
        for g in range(G + 1):
            mid = Y4.apply(v, u, g)
            if not mid:
                continue
            acc = Fraction(0)
            for s, cs in mid.items():
                acc += cs * Y3.coefficient(theta, {s: Fraction(1)}, w)
            if acc:
                ed = float(Y4.exponent(g, gv, gu))
                ey = float(Y3.exponent(gt, g, gw))
                bands[g] = float(acc) * cmath.exp(ed * ld + ey * ly)
    return sum(bands), abs(bands[G])


def _coef_vs(Y: IntertwinerTruncation, theta: Mapping, v: Mapping, s: Partition) -> Fraction:
    return Y.coefficient(theta, v, {s: Fraction(1)})
