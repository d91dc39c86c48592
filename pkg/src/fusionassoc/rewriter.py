"""Reduction of four-point correlator symbols to a finite basis.

A correlator symbol ``F(theta, v, u, w)`` is rewritten with the Borcherds
identities until ``v``, ``u`` and ``w`` are complement vectors.  Every
coefficient that appears is a Laurent polynomial in ``x``, ``y`` and
``x - y``, stored as ``{(i, j, k): Fraction}`` (see ``logseries``).

Atoms are basis quadruples ``(mu, v, u, w)`` of partitions: ``theta_mu`` in
the dual of the target module and basis vectors of the three sources.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Protocol

import numpy as np
import sympy as sp

from .fuchsian import MatrixSeries
from .heisenberg import (
    OMEGA,
    FockModule,
    Momenta,
    Quadruple,
    VOAElement,
    partitions,
    vec_add_into,
)
from .logseries import ExponentSet, binom, laurent_add_into, laurent_eval, laurent_mul

FLAVOR_Y = "y"
FLAVOR_XMY = "xmy"
_FLAVORS = (FLAVOR_Y, FLAVOR_XMY)

SIDE_A = "A"
SIDE_B = "B"


class ReductionError(RuntimeError):
    """The rewrite oracle failed or a grade-descent assertion fired."""


class RingDisciplineError(ValueError):
    """A normalized coefficient left the coefficient ring of its flavor."""


class GradedModule(Protocol):
    """What the reduction engine needs from a module."""

    grade_cutoff: int

    def basis(self, grade: int) -> tuple: ...

    def act(self, alpha: VOAElement, m: int, vec: Mapping, enforce_cutoff: bool = True) -> dict: ...

    def dual_act(self, alpha: VOAElement, m: int, theta: Mapping) -> dict: ...

    def c1_rewrite(self, lam) -> list: ...

    def complement(self) -> list: ...

    def enlarged_complement(self) -> list: ...


def _check_flavor(flavor: str) -> str:
    if flavor not in _FLAVORS:
        raise ValueError(f"flavor must be one of {_FLAVORS}, got {flavor!r}")
    return flavor


def atom_grade(atom) -> int:
    return sum(sum(p) for p in atom)


def atom_gr234(atom) -> int:
    return sum(atom[1]) + sum(atom[2]) + sum(atom[3])


def is_basis_atom(atom) -> bool:
    return atom[1] == () and atom[2] == () and atom[3] == ()


def _mono(i=0, j=0, k=0, c=1) -> dict:
    return {(i, j, k): Fraction(c)}


# ---------------------------------------------------------------------------
# linear combinations


@dataclass(frozen=True)
class LinearCombination:
    """``sum_key coeff[key] * F_{h,k}(atom)`` for ``key = (atom, h, k)``.

    Coefficients are raw (unnormalized) Laurent polynomials.  ``source_gr234``
    is the grade sum of the quadruple being expressed; it fixes the
    normalization power of ``y`` or ``x - y`` for the flavor.
    """

    terms: Mapping
    flavor: str
    source_gr234: int
    side: str = SIDE_A

    def keys(self) -> list:
        return sorted(self.terms)

    def normalized(self) -> dict:
        """Coefficients of ``G(source) = sum c * G(atom)`` for the flavor."""
        out = {}
        for key, poly in self.terms.items():
            shift = self.source_gr234 - atom_gr234(key[0])
            if self.flavor == FLAVOR_XMY:
                out[key] = {(i, j, k + shift): c for (i, j, k), c in poly.items()}
            else:
                out[key] = {(i, j + shift, k): c for (i, j, k), c in poly.items()}
        return out

    def check_ring(self) -> None:
        """No negative powers of the normalizing variable after normalization."""
        for key, poly in self.normalized().items():
            for (i, j, k) in poly:
                bad = k < 0 if self.flavor == FLAVOR_XMY else j < 0
                if bad:
                    raise RingDisciplineError(
                        f"term {key} has monomial x^{i} y^{j} (x-y)^{k} outside the {self.flavor} ring")

    def residue(self, basepoint) -> dict:
        """Normalized coefficients reduced mod the normalizing variable.

        For ``xmy`` the class mod ``(x - y0)`` keeps monomials with no
        ``x - y`` factor and sets ``x = y = y0``; for ``y`` it keeps
        monomials without ``y`` and sets ``x = x0``.
        """
        self.check_ring()
        out = {}
        b = Fraction(basepoint) if isinstance(basepoint, (int, Fraction)) else complex(basepoint)
        for key, poly in self.normalized().items():
            acc = 0
            for (i, j, k), c in poly.items():
                if self.flavor == FLAVOR_XMY and k == 0:
                    acc += c * b ** (i + j)
                elif self.flavor == FLAVOR_Y and j == 0:
                    acc += c * b ** i * (b ** k)
            if acc != 0:
                out[key] = acc
        return out

    def evaluate(self, x, y, values: Mapping) -> complex:
        """``sum coeff(x, y) * values[atom]`` with raw coefficients."""
        total = 0j
        for (atom, h, k), poly in self.terms.items():
            val = values.get((atom, h, k), values.get(atom))
            if val is None:
                raise KeyError(f"no value supplied for {atom}")
            total += laurent_eval(poly, x, y) * complex(val)
        return total

    def scaled(self, c) -> "LinearCombination":
        c = Fraction(c)
        return LinearCombination({k: {m: v * c for m, v in p.items()} for k, p in self.terms.items() if c},
                                 self.flavor, self.source_gr234, self.side)

    def to_json_dict(self) -> dict:
        terms = []
        for (atom, h, k) in self.keys():
            poly = self.terms[(atom, h, k)]
            terms.append({
                "theta": list(atom[0]), "v": list(atom[1]), "u": list(atom[2]), "w": list(atom[3]),
                "h": h, "k": k,
                "coeff": [{"x": i, "y": j, "xmy": kk, "c": str(c)} for (i, j, kk), c in sorted(poly.items())],
            })
        return {"flavor": self.flavor, "side": self.side, "source_gr234": self.source_gr234, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "LinearCombination":
        terms = {}
        for t in doc["terms"]:
            atom = tuple(tuple(t[s]) for s in ("theta", "v", "u", "w"))
            terms[(atom, int(t.get("h", 0)), int(t.get("k", 0)))] = {
                (c["x"], c["y"], c["xmy"]): Fraction(c["c"]) for c in t["coeff"]}
        return cls(terms, doc["flavor"], int(doc["source_gr234"]), doc.get("side", SIDE_A))


# ---------------------------------------------------------------------------
# context


@dataclass
class ReductionContext:
    """Modules, caps and caches for one reduction problem.

    ``target`` is the module whose dual carries ``theta``; ``sources`` are
    the modules of ``v``, ``u`` and ``w``.  ``log_caps`` bounds ``(h, k)``.
    """

    target: GradedModule
    sources: tuple
    N: int = 4
    log_caps: tuple = (0, 0)
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def fock(cls, momenta: Momenta, grade_cutoff: int = 12, N: int = 4, enlarged_cap: int = 1,
             complement_scales: tuple = (1, 1, 1)) -> "ReductionContext":
        a, b, c = momenta.a, momenta.b, momenta.c
        A = FockModule(a, grade_cutoff, Fraction(complement_scales[0]), enlarged_cap)
        B = FockModule(b, grade_cutoff, Fraction(complement_scales[1]), enlarged_cap)
        C = FockModule(c, grade_cutoff, Fraction(complement_scales[2]), enlarged_cap)
        T = FockModule(a + b + c, grade_cutoff + N)
        return cls(T, (A, B, C), N)

    def module(self, slot: int) -> GradedModule:
        return self.target if slot == 1 else self.sources[slot - 2]

    def check_quadruple(self, atom) -> None:
        if sum(atom[0]) > self.N:
            raise ReductionError(f"dual grade {sum(atom[0])} exceeds N={self.N}")


def _dual_terms(ctx: ReductionContext, alpha: VOAElement, m: int, atom) -> dict:
    """``theta_mu o alpha_m`` as ``{atom': coeff}``."""
    out = {}
    for nu, c in ctx.target.dual_act(alpha, m, {atom[0]: Fraction(1)}).items():
        out[(nu,) + atom[1:]] = c
    return out


def _act_terms(ctx: ReductionContext, slot: int, alpha: VOAElement, m: int, atom) -> dict:
    mod = ctx.module(slot)
    out = {}
    for lam, c in mod.act(alpha, m, {atom[slot - 1]: Fraction(1)}, enforce_cutoff=False).items():
        new = list(atom)
        new[slot - 1] = lam
        out[tuple(new)] = c
    return out


def _alive_modes(ctx: ReductionContext, slot: int, alpha: VOAElement, atom):
    """Modes j >= 0 for which alpha_j on the slot can be nonzero."""
    g = sum(atom[slot - 1])
    return range(0, g + alpha.weight)


def borcherds_expand(ctx: ReductionContext, slot: int, n: int, alpha: VOAElement, atom,
                     side: str = SIDE_A, flavor: str = FLAVOR_XMY) -> LinearCombination:
    """Right-hand side of the Borcherds identity that isolates ``alpha_n`` in ``slot``.

    ``slot`` 1 expresses ``F((alpha_n)^* theta, v, u, w)``; slots 2-4 express
    ``F`` with ``alpha_n`` applied to ``v``, ``u`` or ``w`` of ``atom``.  The
    returned terms use the atom's remaining entries.  Side ``B`` carries the
    same coefficients, to be expanded in ``y`` and ``x - y``.
    """
    _check_flavor(flavor)
    if side not in (SIDE_A, SIDE_B):
        raise ValueError(f"unknown side {side!r}")
    terms: dict = {}

    def add(child_terms: Mapping, poly: Mapping, scale) -> None:
        if scale == 0:
            return
        for child, c in child_terms.items():
            acc = terms.setdefault((child, 0, 0), {})
            laurent_add_into(acc, poly, c * scale)

    if slot == 1:
        for j in _alive_modes(ctx, 2, alpha, atom):
            add(_act_terms(ctx, 2, alpha, j, atom), _mono(i=n - j), binom(n, j))
        for j in _alive_modes(ctx, 3, alpha, atom):
            add(_act_terms(ctx, 3, alpha, j, atom), _mono(j=n - j), binom(n, j))
        add(_act_terms(ctx, 4, alpha, n, atom), _mono(), 1)
    elif slot == 2:
        j = 0
        while sum(atom[0]) - (alpha.weight - (n - j) - 1) >= 0:
            add(_dual_terms(ctx, alpha, n - j, atom), _mono(i=j), binom(n, j) * (-1) ** j)
            j += 1
        for i in _alive_modes(ctx, 3, alpha, atom):
            add(_act_terms(ctx, 3, alpha, i, atom), _mono(k=n - i), -binom(n, i) * (-1) ** ((n - i) % 2))
        for j in _alive_modes(ctx, 4, alpha, atom):
            add(_act_terms(ctx, 4, alpha, j, atom), _mono(i=n - j), -binom(n, j) * (-1) ** ((n - j) % 2))
    elif slot == 3:
        j = 0
        while sum(atom[0]) - (alpha.weight - (n - j) - 1) >= 0:
            add(_dual_terms(ctx, alpha, n - j, atom), _mono(j=j), binom(n, j) * (-1) ** j)
            j += 1
        for j in _alive_modes(ctx, 2, alpha, atom):
            add(_act_terms(ctx, 2, alpha, j, atom), _mono(k=n - j), -binom(n, j))
        for j in _alive_modes(ctx, 4, alpha, atom):
            add(_act_terms(ctx, 4, alpha, j, atom), _mono(j=n - j), -binom(n, j) * (-1) ** ((j + n) % 2))
    elif slot == 4:
        add(_dual_terms(ctx, alpha, n, atom), _mono(), 1)
        for j in _alive_modes(ctx, 2, alpha, atom):
            add(_act_terms(ctx, 2, alpha, j, atom), _mono(i=n - j), -binom(n, j))
        for j in _alive_modes(ctx, 3, alpha, atom):
            add(_act_terms(ctx, 3, alpha, j, atom), _mono(j=n - j), -binom(n, j))
    else:
        raise ValueError(f"slot must be 1..4, got {slot}")
    terms = {k: v for k, v in terms.items() if v}
    src = atom_gr234(atom)
    if slot in (2, 3, 4):
        src += alpha.weight - n - 1
    return LinearCombination(terms, flavor, src, side)


# ---------------------------------------------------------------------------
# reduction


def _expand_quadruple(xi) -> dict:
    """Multilinear expansion of a Quadruple (or a bare atom) into atoms."""
    if isinstance(xi, Quadruple):
        out: dict = {}
        for mu, ct in xi.theta:
            for v, cv in xi.v:
                for u, cu in xi.u:
                    for w, cw in xi.w:
                        key = (mu, v, u, w)
                        out[key] = out.get(key, 0) + ct * cv * cu * cw
        return {k: c for k, c in out.items() if c}
    return {tuple(tuple(p) for p in xi): Fraction(1)}


def _rewrite_step(ctx: ReductionContext, atom) -> dict:
    """One C1 rewrite at the first non-complement slot among 2, 3, 4.

    Returns ``{child_atom: laurent}`` with ``F(atom) = sum laurent * F(child)``.
    """
    for slot in (2, 3, 4):
        lam = atom[slot - 1]
        if lam == ():
            continue
        rewrite = ctx.module(slot).c1_rewrite(lam)
        if not rewrite:
            raise ReductionError(f"module in slot {slot} cannot rewrite {lam}")
        out: dict = {}
        for coeff, alpha, lower in rewrite:
            if alpha.weight < 1:
                raise ReductionError("C1 rewrite must use generators of positive weight")
            parent = list(atom)
            parent[slot - 1] = tuple(lower)
            lc = borcherds_expand(ctx, slot, -1, alpha, tuple(parent))
            for (child, _h, _k), poly in lc.terms.items():
                acc = out.setdefault(child, {})
                laurent_add_into(acc, poly, coeff)
        return {k: v for k, v in out.items() if v}
    return {}


def reduce_to_basis(ctx: ReductionContext, xi, flavor: str = FLAVOR_XMY, trace: list | None = None,
                    hk: tuple = (0, 0)) -> LinearCombination:
    """Express ``F_{h,k}(xi)`` over basis quadruples (complement vectors in slots 2-4).

    Quadruples are processed highest total grade first; every child of a
    rewrite must have strictly smaller total grade, otherwise
    :class:`ReductionError` is raised.  ``trace`` collects
    ``(parent_grade, child_grade)`` pairs when given.
    """
    _check_flavor(flavor)
    start = _expand_quadruple(xi)
    grades234 = {atom_gr234(a) for a in start}
    if len(grades234) > 1:
        raise ReductionError("quadruple is not homogeneous in gr234")
    src = grades234.pop() if grades234 else 0
    pending: dict = {}
    heap: list = []
    for atom, c in start.items():
        ctx.check_quadruple(atom)
        pending[atom] = _mono(c=c)
        heapq.heappush(heap, (-atom_grade(atom), atom))
    result: dict = {}
    while heap:
        _, atom = heapq.heappop(heap)
        coeff = pending.pop(atom, None)
        if not coeff:
            continue
        if is_basis_atom(atom):
            acc = result.setdefault((atom,) + tuple(hk), {})
            laurent_add_into(acc, coeff)
            continue
        children = ctx._cache.get(atom)
        if children is None:
            children = _rewrite_step(ctx, atom)
            ctx._cache[atom] = children
        g = atom_grade(atom)
        for child, poly in children.items():
            cg = atom_grade(child)
            if trace is not None:
                trace.append((g, cg))
            if not cg < g:
                raise ReductionError(f"grade did not decrease: {atom} -> {child}")
            if child not in pending:
                pending[child] = {}
                heapq.heappush(heap, (-cg, child))
            laurent_add_into(pending[child], laurent_mul(coeff, poly))
    result = {k: v for k, v in result.items() if v}
    return LinearCombination(result, flavor, src)


def reduce_with_l_minus_one(ctx: ReductionContext, atom, slot: int, flavor: str,
                            hk: tuple = (0, 0)) -> LinearCombination:
    """Reduction of ``F_{h,k}`` with ``L(-1)`` applied in slot 2 or 3."""
    vec = ctx.module(slot).act(OMEGA, 0, {atom[slot - 1]: Fraction(1)}, enforce_cutoff=False)
    theta, v, u, w = ({atom[0]: Fraction(1)}, {atom[1]: Fraction(1)}, {atom[2]: Fraction(1)},
                      {atom[3]: Fraction(1)})
    slots = [theta, v, u, w]
    slots[slot - 1] = vec
    if not vec:
        return LinearCombination({}, flavor, atom_gr234(atom) + 1)
    return reduce_to_basis(ctx, Quadruple.of(*slots), flavor, hk=hk)


def derivative_recursion(ctx: ReductionContext, h: int, k: int, atom, flavor: str) -> LinearCombination:
    """The derivative of ``F_{h,k}(atom)`` in y (flavor y) or x (flavor xmy).

    Uses ``d/dy F_{h,k} = F_{h,k}(L(-1)^[3] xi) - (k+1)/y F_{h,k+1}`` and its
    x-version with ``L(-1)^[2]`` and ``(h+1)/x``.  Log indices past the caps
    carry no correlator and drop out.
    """
    _check_flavor(flavor)
    h_cap, k_cap = ctx.log_caps
    if h > h_cap or k > k_cap:
        raise ReductionError(f"log index ({h}, {k}) exceeds caps {ctx.log_caps}")
    slot = 3 if flavor == FLAVOR_Y else 2
    main = reduce_with_l_minus_one(ctx, atom, slot, flavor, hk=(h, k))
    terms = {key: dict(p) for key, p in main.terms.items()}
    if flavor == FLAVOR_Y and k + 1 <= k_cap:
        extra = reduce_to_basis(ctx, atom, flavor, hk=(h, k + 1))
        for key, p in extra.terms.items():
            laurent_add_into(terms.setdefault(key, {}), laurent_mul(p, _mono(j=-1)), -(k + 1))
    if flavor == FLAVOR_XMY and h + 1 <= h_cap:
        extra = reduce_to_basis(ctx, atom, flavor, hk=(h + 1, k))
        for key, p in extra.terms.items():
            laurent_add_into(terms.setdefault(key, {}), laurent_mul(p, _mono(i=-1)), -(h + 1))
    return LinearCombination({k_: v for k_, v in terms.items() if v}, flavor, main.source_gr234)


# ---------------------------------------------------------------------------
# index sets and connection matrices


def dual_basis(ctx: ReductionContext) -> list:
    return [mu for g in range(ctx.N + 1) for mu in partitions(g)]


def index_set(ctx: ReductionContext) -> list:
    """Rows of the connection matrix: dual basis x enlarged complements x log pairs.

    Slot entries of the index are partitions in the standard basis; the
    complement vector is the empty partition.
    """
    tilde = []
    for mod in ctx.sources:
        elems = []
        for vec in mod.enlarged_complement():
            (lam,) = vec.keys()
            elems.append(lam)
        tilde.append(elems)
    hk = list(itertools.product(range(ctx.log_caps[0] + 1), range(ctx.log_caps[1] + 1)))
    out = []
    for mu in dual_basis(ctx):
        for v, u, w in itertools.product(*tilde):
            for h, k in hk:
                out.append(((mu, v, u, w), h, k))
    return out


def basis_indices(ctx: ReductionContext) -> list:
    """Positions of rows whose atom has complement vectors in slots 2-4."""
    return [i for i, (atom, _h, _k) in enumerate(index_set(ctx)) if is_basis_atom(atom)]


def connection_rows(ctx: ReductionContext, flavor: str) -> dict:
    """Exact Laurent entries of ``Lambda`` before expansion.

    Returns ``{(row, col): laurent}`` such that the normalizing-variable
    derivative of ``G`` is ``Lambda / N * G`` with ``N`` equal to ``x - y0``
    (flavor xmy) or ``y`` (flavor y).
    """
    _check_flavor(flavor)
    idx = index_set(ctx)
    pos = {key: i for i, key in enumerate(idx)}
    entries: dict = {}
    for r, (atom, h, k) in enumerate(idx):
        g = atom_gr234(atom)
        deriv = derivative_recursion(ctx, h, k, atom, flavor)
        deriv.check_ring()
        # N * d/dN (N^g F) = N^(g+1) dF + g N^g F
        for key, poly in deriv.normalized().items():
            laurent_add_into(entries.setdefault((r, pos[key]), {}), poly)
        if g:
            base = reduce_to_basis(ctx, atom, flavor, hk=(h, k))
            for key, poly in base.normalized().items():
                laurent_add_into(entries.setdefault((r, pos[key]), {}), poly, g)
    return {k: v for k, v in entries.items() if v}


def _expand_monomial(i: int, j: int, k: int, flavor: str, base, M: int, exact: bool) -> list:
    """Series coefficients of ``x^i y^j (x-y)^k`` in the local variable."""
    out = [Fraction(0) if exact else 0j for _ in range(M + 1)]
    if flavor == FLAVOR_XMY:
        # y = y0, x = y0 + t: y0^j t^k (y0 + t)^i
        if k < 0:
            raise ValueError("negative power of x - y in an x - y expansion")
        lead = base ** j
        for l in range(0, M + 1 - k):
            out[l + k] += lead * binom(i, l) * base ** (i - l)
    else:
        # x = x0: x0^i y^j (x0 - y)^k
        if j < 0:
            raise ValueError("negative power of y in a y expansion")
        lead = base ** i
        for l in range(0, M + 1 - j):
            out[l + j] += lead * binom(k, l) * (-1) ** l * base ** (k - l)
    return out


def connection_matrix(ctx: ReductionContext, flavor: str, basepoint, M: int,
                      dual_change: Mapping | None = None, complement_scale=None) -> MatrixSeries:
    """``Lambda`` as a matrix series in ``x - y0`` (flavor xmy) or ``y`` (flavor y).

    ``dual_change`` maps a dual grade to an invertible matrix giving a new
    basis of that graded piece (rows are new vectors in the standard basis);
    ``complement_scale`` rescales the complement vector of the third source.
    Both act by the similarity ``S Lambda S^-1`` on the standard result.
    """
    _check_flavor(flavor)
    if basepoint == 0:
        raise ValueError("basepoint must be nonzero")
    exact = isinstance(basepoint, (int, Fraction))
    if not exact:
        bp = complex(basepoint)
        if bp.imag == 0 and bp.real <= 0:
            raise ValueError("basepoint lies on the branch cut")
        base = bp
    else:
        base = Fraction(basepoint)
        if base <= 0:
            raise ValueError("basepoint lies on the branch cut")
    idx = index_set(ctx)
    r = len(idx)
    rows = connection_rows(ctx, flavor)
    mats = [[[Fraction(0) if exact else 0j for _ in range(r)] for _ in range(r)] for _ in range(M + 1)]
    for (a, b), poly in rows.items():
        for (i, j, k), c in poly.items():
            coeffs = _expand_monomial(i, j, k, flavor, base, M, exact)
            for m, v in enumerate(coeffs):
                if v:
                    mats[m][a][b] += c * v
    S = change_of_basis(ctx, dual_change, complement_scale)
    if S is not None:
        Sm = sp.Matrix(S)
        Sinv = Sm.inv()
        mats = [(Sm * sp.Matrix(m) * Sinv).tolist() if exact else
                (np.array(S, dtype=complex) @ np.array(m, dtype=complex)
                 @ np.array(Sinv.evalf(), dtype=complex)).tolist() for m in mats]
        if exact:
            mats = [[[Fraction(int(sp.Rational(v).p), int(sp.Rational(v).q)) for v in row] for row in m] for m in mats]
    radius = abs(base)
    z0 = complex(base) if flavor == FLAVOR_XMY else 0
    return MatrixSeries.from_matrices(mats, z0=z0, radius=radius, exact=exact)


def change_of_basis(ctx: ReductionContext, dual_change: Mapping | None, complement_scale) -> list | None:
    """Matrix ``S`` with ``G_new = S G_standard`` on the index set, or None."""
    if not dual_change and complement_scale in (None, 1):
        return None
    idx = index_set(ctx)
    pos = {key: i for i, key in enumerate(idx)}
    r = len(idx)
    S = [[Fraction(0)] * r for _ in range(r)]
    scale = Fraction(complement_scale) if complement_scale is not None else Fraction(1)
    for row, (atom, h, k) in enumerate(idx):
        mu = atom[0]
        g = sum(mu)
        w_factor = scale if atom[3] == () else Fraction(1)
        block = (dual_change or {}).get(g)
        if block is None:
            S[row][row] = w_factor
            continue
        basis = partitions(g)
        new_index = basis.index(mu)
        for old_index, nu in enumerate(basis):
            c = Fraction(block[new_index][old_index])
            if c:
                S[row][pos[((nu,) + atom[1:], h, k)]] = c * w_factor
    return S


def exponent_set(Lambda0) -> ExponentSet:
    """Eigenvalues of the constant term, merged into ladders mod Z."""
    if isinstance(Lambda0, sp.MatrixBase):
        vals = [complex(sp.N(v)) for v, m in Lambda0.eigenvals().items() for _ in range(m)]
    else:
        vals = list(np.linalg.eigvals(np.asarray(Lambda0, dtype=complex)))
    return ExponentSet.from_values(vals, exact=False)


def constant_term(Lam: MatrixSeries) -> np.ndarray:
    return np.array(Lam.to_float().coeff(0), dtype=complex)


def random_quadruple(ctx: ReductionContext, rng, max_theta: int = 4, max_source: int = 3) -> Quadruple:
    """Random homogeneous quadruple of basis vectors with small integer weights."""
    def pick(g):
        basis = partitions(g)
        return basis[int(rng.integers(len(basis)))]

    gt = int(rng.integers(0, min(max_theta, ctx.N) + 1))
    mu = pick(gt)
    theta = {mu: Fraction(int(rng.integers(1, 4)))}
    slots = []
    for _ in range(3):
        g = int(rng.integers(0, max_source + 1))
        slots.append({pick(g): Fraction(int(rng.integers(1, 4)))})
    return Quadruple.of(theta, *slots)
