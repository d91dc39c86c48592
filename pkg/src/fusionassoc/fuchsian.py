"""Fuchsian systems ``dY/dz = A(z)/(z - z0) Y`` with a regular singular point.

The solver works in the variable ``z - z0`` throughout.  Float mode uses
numpy/scipy; exact mode uses sympy matrices over the Gaussian rationals and
is meant for small systems with rational spectra.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla
import sympy as sp
from sympy.polys.domains import QQ_I

from .logseries import (
    DEFAULT_K_MAX,
    LogPowerSeries,
    gauss,
    gauss_parts,
    is_exact,
    principal_log,
    to_complex,
)

CLUSTER_TOL = 1e-6
RESONANCE_TOL = 1e-9
CONDITION_LIMIT = 1e10


class FuchsianError(ValueError):
    """Invalid system or a failed internal consistency check."""


class DegradedPrecisionWarning(UserWarning):
    """The eigenvalue split is poorly resolved in float arithmetic."""


# ---------------------------------------------------------------------------
# scalar and matrix plumbing


def _sym(v):
    """Exact scalar (int, Fraction, QQ_I, "p/q") to a sympy number."""
    if isinstance(v, sp.Basic):
        return v
    if isinstance(v, str):
        return sp.Rational(v)
    if isinstance(v, (int, Fraction)):
        v = Fraction(v)
        return sp.Rational(v.numerator, v.denominator)
    re, im = gauss_parts(gauss(v))
    return sp.Rational(re.numerator, re.denominator) + sp.I * sp.Rational(im.numerator, im.denominator)


def _sym_to_gauss(expr):
    re, im = sp.expand(expr).as_real_imag()
    if not (re.is_Rational and im.is_Rational):
        raise FuchsianError(f"{expr} is not a Gaussian rational")
    return QQ_I(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))


def _matrix(rows, exact: bool):
    if exact:
        return sp.Matrix([[_sym(v) for v in row] for row in rows])
    return np.array([[to_complex(v) for v in row] for row in rows], dtype=complex)


def _zeros(r: int, exact: bool):
    return sp.zeros(r, r) if exact else np.zeros((r, r), dtype=complex)


def _eye(r: int, exact: bool):
    return sp.eye(r) if exact else np.eye(r, dtype=complex)


def _inv(m, exact: bool):
    return m.inv() if exact else np.linalg.inv(m)


def _clean(m, exact: bool):
    return m.applyfunc(sp.expand) if exact else m


def _norm(m, exact: bool) -> float:
    if exact:
        return max((abs(complex(sp.N(v))) for v in m), default=0.0)
    return float(np.max(np.abs(m))) if m.size else 0.0


def _entry(m, i: int, j: int, exact: bool):
    return _sym_to_gauss(m[i, j]) if exact else complex(m[i, j])


def _sort_key(z: complex):
    return (-z.real, -z.imag)


# ---------------------------------------------------------------------------
# MatrixSeries


def _real(t) -> float:
    """Accept numbers and numeric strings, including ``p/q``."""
    if isinstance(t, str) and "/" in t:
        return float(Fraction(t))
    return float(t)


@dataclass(frozen=True)
class MatrixSeries:
    """``A(z) = sum_k A_k (z - z0)^k`` truncated at ``order``."""

    r: int
    z0: complex
    coeffs: tuple
    radius: float = math.inf
    exact: bool = False

    def __post_init__(self):
        if not self.coeffs:
            raise FuchsianError("a matrix series needs at least A_0")
        for a in self.coeffs:
            if a.shape != (self.r, self.r):
                raise FuchsianError(f"coefficient shape {a.shape} does not match r={self.r}")
            if not self.exact and not np.all(np.isfinite(a)):
                raise FuchsianError("non-finite coefficient")
        if not self.radius > 0:
            raise FuchsianError("declared radius must be positive")

    @classmethod
    def from_matrices(cls, mats: Sequence, z0=0, radius=math.inf, exact: bool | None = None) -> "MatrixSeries":
        mats = [list(map(list, m)) if not isinstance(m, np.ndarray) else m.tolist() for m in mats]
        if exact is None:
            exact = all(is_exact(v) for m in mats for row in m for v in row)
        coeffs = tuple(_matrix(m, exact) for m in mats)
        return cls(len(mats[0]), complex(z0), coeffs, float(radius), exact)

    @classmethod
    def constant(cls, A0, z0=0, exact: bool | None = None) -> "MatrixSeries":
        return cls.from_matrices([A0], z0=z0, exact=exact)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return _zeros(self.r, self.exact)

    def truncate(self, M: int) -> "MatrixSeries":
        coeffs = tuple(self.coeff(k) for k in range(M + 1))
        return MatrixSeries(self.r, self.z0, coeffs, self.radius, self.exact)

    def to_float(self) -> "MatrixSeries":
        if not self.exact:
            return self
        coeffs = tuple(np.array(a.evalf(), dtype=complex) for a in self.coeffs)
        return MatrixSeries(self.r, self.z0, coeffs, self.radius, False)

    def value(self, z) -> np.ndarray:
        t = complex(z) - self.z0
        out = np.zeros((self.r, self.r), dtype=complex)
        for a in reversed(self.to_float().coeffs):
            out = out * t + a
        return out

    def sum(self):
        """``A(1)`` in the local variable, i.e. the sum of all coefficients."""
        out = _zeros(self.r, self.exact)
        for a in self.coeffs:
            out = out + a
        return _clean(out, self.exact)

    # -- JSON -------------------------------------------------------------

    def to_json_dict(self) -> dict:
        def enc(v):
            if self.exact:
                re, im = gauss_parts(_sym_to_gauss(v))
                return [str(re), str(im)]
            v = complex(v)
            return [v.real, v.imag]

        return {
            "r": self.r,
            "z0": [self.z0.real, self.z0.imag],
            "radius": self.radius if math.isfinite(self.radius) else "inf",
            "mode": "exact" if self.exact else "float",
            "coeffs": [[[enc(a[i, j]) for j in range(self.r)] for i in range(self.r)] for a in self.coeffs],
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping, exact: bool | None = None) -> "MatrixSeries":
        try:
            r = int(doc["r"])
            z0 = complex(*[_real(t) for t in doc.get("z0", [0, 0])])
            radius = float(doc.get("radius", "inf"))
            raw = doc["coeffs"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FuchsianError(f"malformed system JSON: {exc}") from exc
        if exact is None:
            exact = doc.get("mode", "float") == "exact"
        mats = []
        for a in raw:
            if len(a) == r * r and all(isinstance(p, list) and len(p) == 2 and not isinstance(p[0], list) for p in a):
                a = [a[i * r:(i + 1) * r] for i in range(r)]
            if len(a) != r or any(len(row) != r for row in a):
                raise FuchsianError("coefficient matrix has the wrong shape")
            rows = []
            for row in a:
                vals = []
                for re, im in row:
                    if exact:
                        vals.append(QQ_I(Fraction(str(re)), Fraction(str(im))))
                    else:
                        vals.append(complex(_real(re), _real(im)))
                rows.append(vals)
            mats.append(rows)
        return cls(r, z0, tuple(_matrix(m, exact) for m in mats), radius, exact)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str, exact: bool | None = None) -> "MatrixSeries":
        return cls.from_json_dict(json.loads(text), exact)


def series_mul(P: MatrixSeries, Q: MatrixSeries, M: int | None = None) -> MatrixSeries:
    if M is None:
        M = min(P.order, Q.order)
    exact = P.exact and Q.exact
    if P.exact != Q.exact:
        P, Q = P.to_float(), Q.to_float()
    coeffs = []
    for k in range(M + 1):
        acc = _zeros(P.r, exact)
        for j in range(k + 1):
            acc = acc + P.coeff(j) @ Q.coeff(k - j)
        coeffs.append(_clean(acc, exact))
    return MatrixSeries(P.r, P.z0, tuple(coeffs), min(P.radius, Q.radius), exact)


def series_inverse(P: MatrixSeries, M: int | None = None) -> MatrixSeries:
    if M is None:
        M = P.order
    inv0 = _inv(P.coeff(0), P.exact)
    out = [inv0]
    for k in range(1, M + 1):
        acc = _zeros(P.r, P.exact)
        for j in range(1, k + 1):
            acc = acc + P.coeff(j) @ out[k - j]
        out.append(_clean(-(inv0 @ acc), P.exact))
    return MatrixSeries(P.r, P.z0, tuple(out), P.radius, P.exact)


def gauge_transform(A: MatrixSeries, Delta: MatrixSeries, M: int | None = None) -> MatrixSeries:
    """The system ``B = Delta^-1 (A Delta - z Delta')`` satisfied by ``Delta^-1 Y``."""
    if M is None:
        M = min(A.order, Delta.order)
    AD = series_mul(A, Delta, M)
    coeffs = []
    for k in range(M + 1):
        coeffs.append(AD.coeff(k) - Delta.coeff(k) * k)
    rhs = MatrixSeries(A.r, A.z0, tuple(coeffs), A.radius, AD.exact)
    return series_mul(series_inverse(Delta, M), rhs, M)


def gauge_residual(A: MatrixSeries, B: MatrixSeries, Delta: MatrixSeries, M: int | None = None) -> float:
    """Max entry of ``z Delta' - (A Delta - Delta B)`` through order M."""
    if M is None:
        M = min(A.order, B.order, Delta.order)
    AD = series_mul(A, Delta, M)
    DB = series_mul(Delta, B, M)
    worst = 0.0
    for k in range(M + 1):
        d = Delta.coeff(k) * k - (AD.coeff(k) - DB.coeff(k))
        worst = max(worst, _norm(_clean(d, AD.exact), AD.exact))
    return worst


# ---------------------------------------------------------------------------
# Dunford decomposition


@dataclass(frozen=True)
class DunfordPair:
    """``A0 = S + N`` with S semisimple, N nilpotent, SN = NS.

    ``basis`` has the generalized eigenvectors as columns, grouped by
    ``clusters`` (eigenvalue, start, stop) in descending real part.
    """

    S: object
    N: object
    basis: object
    clusters: tuple
    exact: bool = False
    condition: float = 1.0

    def check(self) -> dict:
        """Defects of the defining identities (zero in exact mode)."""
        e = self.exact
        r = self.S.shape[0]
        Nr = self.N
        for _ in range(r - 1):
            Nr = Nr @ self.N
        return {
            "commutator": _norm(_clean(self.S @ self.N - self.N @ self.S, e), e),
            "nilpotency": _norm(_clean(Nr, e), e),
        }

    @property
    def eigenvalues(self) -> list:
        out = []
        for lam, a, b in self.clusters:
            out += [lam] * (b - a)
        return out


def _cluster(values: Sequence[complex], tol: float) -> list:
    """Group nearly equal eigenvalues; return [[members], ...] sorted."""
    groups: list = []
    for v in sorted(values, key=_sort_key):
        for g in groups:
            if abs(v - np.mean(g)) <= tol:
                g.append(v)
                break
        else:
            groups.append([v])
    return sorted(groups, key=lambda g: _sort_key(complex(np.mean(g))))


def dunford(A0, cluster_tol: float = CLUSTER_TOL, exact: bool | None = None) -> DunfordPair:
    """Split a square matrix into semisimple and nilpotent commuting parts."""
    if exact is None:
        exact = isinstance(A0, sp.MatrixBase) or (
            not isinstance(A0, np.ndarray) and all(is_exact(v) for row in A0 for v in row))
    if exact:
        return _dunford_exact(A0 if isinstance(A0, sp.MatrixBase) else _matrix(A0, True))
    A0 = np.asarray(A0, dtype=complex)
    if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
        raise FuchsianError("dunford needs a square matrix")
    r = A0.shape[0]
    scale = max(1.0, float(np.max(np.abs(A0))) if r else 1.0)
    groups = _cluster(list(np.linalg.eigvals(A0)), cluster_tol * scale)
    cols = []
    clusters = []
    start = 0
    for g in groups:
        m = len(g)
        lam = complex(np.mean(g))
        T = np.linalg.matrix_power(A0 - lam * np.eye(r), m)
        _, _, vh = np.linalg.svd(T)
        block = vh[r - m:].conj().T
        cols.append(block)
        clusters.append((lam, start, start + m))
        start += m
    V = np.hstack(cols) if cols else np.zeros((0, 0), dtype=complex)
    cond = float(np.linalg.cond(V)) if r else 1.0
    if cond > CONDITION_LIMIT:
        warnings.warn(f"generalized eigenbasis is ill-conditioned (cond={cond:.2e})", DegradedPrecisionWarning)
    Vinv = np.linalg.inv(V)
    D = Vinv @ A0 @ V
    diag = np.zeros((r, r), dtype=complex)
    refined = []
    for lam, a, b in clusters:
        lam = complex(np.trace(D[a:b, a:b]) / (b - a))
        diag[a:b, a:b] = lam * np.eye(b - a)
        refined.append((lam, a, b))
    S = V @ diag @ Vinv
    return DunfordPair(S, A0 - S, V, tuple(refined), False, cond)


def _dunford_exact(A0: sp.Matrix) -> DunfordPair:
    P, J = A0.jordan_form()
    r = A0.shape[0]
    blocks = []
    i = 0
    while i < r:
        j = i + 1
        while j < r and J[j - 1, j] == 1 and J[j, j] == J[i, i]:
            j += 1
        blocks.append((J[i, i], i, j))
        i = j
    # group blocks by eigenvalue and order by descending real part
    def key(b):
        z = complex(sp.N(b[0]))
        return _sort_key(z)
    blocks.sort(key=key)
    perm = []
    clusters = []
    start = 0
    eig_order: list = []
    for lam, _, _ in blocks:
        if all(sp.simplify(lam - e) != 0 for e in eig_order):
            eig_order.append(lam)
    for lam in eig_order:
        a = start
        for mu, i, j in blocks:
            if sp.simplify(mu - lam) == 0:
                perm += list(range(i, j))
                start += j - i
        clusters.append((_sym_to_gauss(lam), a, start))
    V = P[:, perm]
    diag = sp.zeros(r, r)
    for lam, a, b in clusters:
        for k in range(a, b):
            diag[k, k] = _sym(lam)
    S = _clean(V * diag * V.inv(), True)
    return DunfordPair(S, _clean(A0 - S, True), V, tuple(clusters), True, 1.0)


def _floor_re(lam, exact: bool, tol: float = RESONANCE_TOL) -> int:
    if exact:
        re, _ = gauss_parts(gauss(lam))
        return math.floor(re)
    return math.floor(complex(lam).real + tol)


def shift_L(B0s, exact: bool | None = None):
    """Integer-spectrum matrix commuting with B0s with Re spec(B0s - L) in [0, 1)."""
    d = dunford(B0s, exact=exact)
    r = d.S.shape[0]
    diag = _zeros(r, d.exact)
    for lam, a, b in d.clusters:
        for k in range(a, b):
            diag[k, k] = _floor_re(lam, d.exact)
    if d.exact:
        return _clean(d.basis * diag * d.basis.inv(), True)
    L = d.basis @ diag @ np.linalg.inv(d.basis)
    return np.round(L.real, 12) + 1j * np.round(L.imag, 12)


# ---------------------------------------------------------------------------
# Levelt normal form


@dataclass(frozen=True)
class LeveltSystem:
    """``B`` in Levelt normal form, the gauge ``Delta`` and the shift ``L``.

    The ``_v*`` fields hold the same data in the generalized eigenbasis of
    ``A(0)``, where ``B_{0,s}`` and ``L`` are diagonal.
    """

    B: MatrixSeries
    Delta: MatrixSeries
    L: object
    B0s: object
    _vbasis: object = field(repr=False, default=None)
    _vclusters: tuple = field(repr=False, default=())
    _vB: tuple = field(repr=False, default=())
    _vDelta: tuple = field(repr=False, default=())

    @property
    def exact(self) -> bool:
        return self.B.exact

    def levelt_defect(self) -> float:
        """Max entry of ``ad(B_{0,s}) B_k - k B_k`` over all k."""
        e = self.exact
        worst = 0.0
        for k, Bk in enumerate(self.B.coeffs):
            d = self.B0s @ Bk - Bk @ self.B0s - Bk * k
            worst = max(worst, _norm(_clean(d, e), e))
        return worst

    def gauge_defect(self, A: MatrixSeries) -> float:
        return gauge_residual(A, self.B, self.Delta)


def _sylvester(Aop, Bop, Q, exact: bool):
    """Solve ``Aop X + X Bop = Q``."""
    if not exact:
        return sla.solve_sylvester(Aop, Bop, Q)
    m, n = Q.shape
    K = sp.kronecker_product(sp.eye(n), Aop) + sp.kronecker_product(Bop.T, sp.eye(m))
    vec = sp.Matrix([Q[i, j] for j in range(n) for i in range(m)])
    x = K.LUsolve(vec)
    return sp.Matrix(m, n, lambda i, j: sp.expand(x[j * m + i]))


def to_levelt(A: MatrixSeries, resonance_tol: float = RESONANCE_TOL,
              cluster_tol: float = CLUSTER_TOL) -> LeveltSystem:
    """Holomorphic gauge to Levelt normal form, order by order.

    At order k the defect block between eigenvalue clusters i and j is
    absorbed into the gauge when ``lam_i - lam_j != k`` and kept in ``B_k``
    otherwise.
    """
    e = A.exact
    r = A.r
    M = A.order
    d = dunford(A.coeff(0), cluster_tol=cluster_tol, exact=e)
    V = d.basis
    Vinv = _inv(V, e)
    At = [_clean(Vinv @ A.coeff(k) @ V, e) for k in range(M + 1)]
    lam = [c[0] for c in d.clusters]
    blocks = [(c[1], c[2]) for c in d.clusters]
    Nblk = []
    for (a, b), l in zip(blocks, lam):
        lv = _sym(l) if e else l
        Nblk.append(_clean(At[0][a:b, a:b] - _eye(b - a, e) * lv, e))

    Bt = [At[0]]
    Dt = [_eye(r, e)]
    for k in range(1, M + 1):
        R = At[k]
        for j in range(1, k):
            R = R + At[j] @ Dt[k - j] - Dt[k - j] @ Bt[j]
        R = _clean(R, e)
        Bk = _zeros(r, e)
        Dk = _zeros(r, e)
        for i, (a, b) in enumerate(blocks):
            for jj, (c0, c1) in enumerate(blocks):
                rblk = R[a:b, c0:c1]
                if e:
                    gap = gauss(lam[i]) - gauss(lam[jj]) - QQ_I(k, 0)
                    resonant = gap.x == 0 and gap.y == 0
                    cval = _sym(gauss(lam[i]) - gauss(lam[jj]))
                else:
                    cval = lam[i] - lam[jj]
                    resonant = abs(cval - k) <= resonance_tol
                if resonant:
                    Bk[a:b, c0:c1] = rblk
                    continue
                if _norm(rblk, e) == 0:
                    continue
                op = _eye(b - a, e) * (k - cval) - Nblk[i]
                Dk[a:b, c0:c1] = _sylvester(op, Nblk[jj], rblk, e)
        Bt.append(Bk)
        Dt.append(Dk)

    def back(m):
        return _clean(V @ m @ Vinv, e)

    Bs = MatrixSeries(r, A.z0, tuple(back(m) for m in Bt), A.radius, e)
    Ds = MatrixSeries(r, A.z0, tuple(back(m) for m in Dt), A.radius, e)
    Ldiag = _zeros(r, e)
    Sdiag = _zeros(r, e)
    for l, (a, b) in zip(lam, blocks):
        for k in range(a, b):
            Ldiag[k, k] = _floor_re(l, e)
            Sdiag[k, k] = _sym(l) if e else l
    det0 = Ds.coeff(0).det() if e else np.linalg.det(Ds.coeff(0))
    if det0 == 0:
        raise FuchsianError("gauge is singular at the base point")
    return LeveltSystem(Bs, Ds, back(Ldiag), back(Sdiag), V, tuple(d.clusters),
                        tuple(Bt), tuple(Dt))


# ---------------------------------------------------------------------------
# fundamental solutions


@dataclass(frozen=True)
class FundamentalSolutionSet:
    """``r`` solution columns, each a vector of log-power series in ``z - z0``.

    ``exponents[j]`` is the ladder base of column j: every component of that
    column lives in ``z^(exponents[j] + m) log^t z``.
    """

    z0: complex
    columns: tuple
    exponents: tuple
    radius: float = math.inf
    exact: bool = False

    @property
    def r(self) -> int:
        return len(self.columns)

    @property
    def M_max(self) -> int:
        return min((s.M_max for col in self.columns for s in col), default=0)

    def evaluate(self, z, tail: bool = False):
        """Matrix ``Phi(z)`` on the principal branch of ``log(z - z0)``."""
        t = complex(z) - self.z0
        principal_log(t)
        out = np.zeros((self.r, self.r), dtype=complex)
        worst = 0.0
        for j, col in enumerate(self.columns):
            for i, s in enumerate(col):
                val, band = s.eval(t)
                out[i, j] = val
                worst = max(worst, band)
        return (out, worst) if tail else out

    def leading_matrix(self) -> np.ndarray:
        """Coefficients of the lowest exponent and highest log power per column."""
        out = np.zeros((self.r, self.r), dtype=complex)
        for j, col in enumerate(self.columns):
            keys = [k for s in col for k in s.terms]
            if not keys:
                continue
            m0 = min(k[1] for k in keys)
            t0 = max(k[2] for k in keys if k[1] == m0)
            for i, s in enumerate(col):
                out[i, j] = to_complex(s.terms.get((0, m0, t0), 0))
        return out

    def coefficient_band(self, offset: int) -> float:
        """Max coefficient magnitude at a fixed offset over all columns."""
        worst = 0.0
        for col in self.columns:
            for s in col:
                for (i, m, t), c in s.terms.items():
                    if m == offset:
                        worst = max(worst, abs(to_complex(c)))
        return worst

    def to_json_dict(self) -> dict:
        exps = []
        for e in self.exponents:
            if self.exact:
                re, im = gauss_parts(gauss(e))
                exps.append([str(re), str(im)])
            else:
                exps.append([complex(e).real, complex(e).imag])
        return {
            "z0": [self.z0.real, self.z0.imag],
            "r": self.r,
            "radius": self.radius if math.isfinite(self.radius) else "inf",
            "mode": "exact" if self.exact else "float",
            "exponents": exps,
            "columns": [[s.to_json_dict() for s in col] for col in self.columns],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "FundamentalSolutionSet":
        exact = doc.get("mode", "float") == "exact"
        if exact:
            exps = tuple(QQ_I(Fraction(a), Fraction(b)) for a, b in doc["exponents"])
        else:
            exps = tuple(complex(_real(a), _real(b)) for a, b in doc["exponents"])
        cols = tuple(tuple(LogPowerSeries.from_json_dict(s) for s in col) for col in doc["columns"])
        return cls(complex(*[_real(t) for t in doc["z0"]]), cols, exps, float(doc.get("radius", "inf")), exact)


def _column(base, entries: dict, r: int, M: int, exact: bool) -> tuple:
    """``entries[(offset, logpow)]`` is a length-r vector."""
    comps = []
    K = max(DEFAULT_K_MAX, r)
    for i in range(r):
        terms = {}
        for (m, t), vec in entries.items():
            if m > M:
                continue
            c = vec[i]
            if exact:
                c = gauss(c) if not isinstance(c, sp.Basic) else _sym_to_gauss(c)
                if c.x == 0 and c.y == 0:
                    continue
            else:
                c = complex(c)
                if c == 0:
                    continue
            terms[(0, m, t)] = c
        comps.append(LogPowerSeries("z", (base,), terms, M, K, exact, False))
    return tuple(comps)


def euler_fundamental(A0, z0=0, exact: bool | None = None) -> FundamentalSolutionSet:
    """Fundamental solution of the constant system ``z Y' = A0 Y``.

    Each Jordan block ``J_s(a)`` contributes columns
    ``z^a (log^t/t!, ..., log, 1, 0, ..., 0)`` for t = 0..s-1.
    """
    if exact is None:
        exact = isinstance(A0, sp.MatrixBase) or (
            not isinstance(A0, np.ndarray) and all(is_exact(v) for row in A0 for v in row))
    if exact:
        A = A0 if isinstance(A0, sp.MatrixBase) else _matrix(A0, True)
        P, J = A.jordan_form()
        r = A.shape[0]
        cols, exps = [], []
        i = 0
        while i < r:
            j = i + 1
            while j < r and J[j - 1, j] == 1 and J[j, j] == J[i, i]:
                j += 1
            a = _sym_to_gauss(J[i, i])
            for t in range(j - i):
                entries = {}
                for p in range(t + 1):
                    # component i + t - p carries log^p / p!
                    vec = [sp.Rational(1, math.factorial(p)) * P[row, i + t - p] for row in range(r)]
                    entries[(0, p)] = vec
                cols.append(_column(a, entries, r, 0, True))
                exps.append(a)
            i = j
        return FundamentalSolutionSet(complex(z0), tuple(cols), tuple(exps), math.inf, True)
    A = np.asarray(A0, dtype=complex)
    d = dunford(A, exact=False)
    V = d.basis
    Nt = np.linalg.inv(V) @ d.N @ V
    r = A.shape[0]
    cols, exps = [], []
    for lam, a, b in d.clusters:
        Nc = Nt[a:b, a:b]
        for j in range(a, b):
            entries = {}
            vec = np.zeros(b - a, dtype=complex)
            vec[j - a] = 1
            for t in range(b - a):
                if np.max(np.abs(vec)) == 0:
                    break
                full = np.zeros(r, dtype=complex)
                full[a:b] = vec / math.factorial(t)
                entries[(0, t)] = V @ full
                vec = Nc @ vec
            cols.append(_column(lam, entries, r, 0, False))
            exps.append(lam)
    return FundamentalSolutionSet(complex(z0), tuple(cols), tuple(exps), math.inf, False)


def fuchsian_solve(A: MatrixSeries, M: int, levelt: LeveltSystem | None = None) -> FundamentalSolutionSet:
    """Log-power fundamental solution ``Delta(z) z^L z^(B(1) - L)`` through order M.

    Column j lives on the ladder ``mu_j + min(l) + N``, with ``mu_j`` the
    eigenvalues of ``B(1) - L`` (real parts in [0, 1)).
    """
    if M < 0:
        raise FuchsianError("order must be nonnegative")
    A = A.truncate(max(M, A.order)) if A.order < M else A.truncate(M)
    lev = levelt if levelt is not None else to_levelt(A)
    e = lev.exact
    r = A.r
    V = lev._vbasis
    blocks = [(c[1], c[2]) for c in lev._vclusters]
    ell = [0] * r
    for (lam, a, b) in lev._vclusters:
        for k in range(a, b):
            ell[k] = _floor_re(lam, e)
    Lt = _zeros(r, e)
    for k in range(r):
        Lt[k, k] = ell[k]
    B1 = _zeros(r, e)
    for m in lev._vB:
        B1 = B1 + m
    C = _clean(B1 - Lt, e)
    if e:
        W, J = C.jordan_form()
        chains = []
        i = 0
        while i < r:
            j = i + 1
            while j < r and J[j - 1, j] == 1 and J[j, j] == J[i, i]:
                j += 1
            chains.append((_sym_to_gauss(J[i, i]), i, j))
            i = j
        Jn = _clean(J - sp.diag(*[J[k, k] for k in range(r)]), True)
    else:
        dc = dunford(C, exact=False)
        W = dc.basis
        chains = list(dc.clusters)
        Jn = np.linalg.inv(W) @ dc.N @ W
    lmin = min(ell) if ell else 0
    Dt = lev._vDelta
    cols, exps = [], []
    for mu, a, b in chains:
        base = (gauss(mu) + QQ_I(lmin, 0)) if e else complex(mu) + lmin
        for j in range(a, b):
            # u_t = W Jn^t e_j, the constant part of the column at log^t / t!
            if e:
                vec = sp.zeros(r, 1)
            else:
                vec = np.zeros(r, dtype=complex)
            vec[j] = 1
            entries: dict = {}
            for t in range(b - a):
                u = W @ vec if not e else W * vec
                if _norm(u, e) == 0:
                    break
                inv_fact = sp.Rational(1, math.factorial(t)) if e else 1.0 / math.factorial(t)
                for k in range(r):
                    uk = u[k]
                    if (uk == 0) if e else (abs(uk) == 0):
                        continue
                    shift = ell[k] - lmin
                    for m in range(0, M - shift + 1):
                        if m >= len(Dt):
                            break
                        colv = Dt[m][:, k]
                        contrib = (V @ colv) * uk * inv_fact if not e else (V * colv) * uk * inv_fact
                        key = (m + shift, t)
                        if key in entries:
                            entries[key] = entries[key] + contrib
                        else:
                            entries[key] = contrib
                vec = Jn @ vec if not e else Jn * vec
            if e:
                entries = {k: [sp.expand(x) for x in v] for k, v in entries.items()}
            else:
                entries = {k: np.ravel(v) for k, v in entries.items()}
            cols.append(_column(base, entries, r, M, e))
            exps.append(base)
    return FundamentalSolutionSet(A.z0, tuple(cols), tuple(exps), A.radius, e)


def residual(A: MatrixSeries, Y: FundamentalSolutionSet) -> float:
    """Max coefficient of ``z Y' - A Y`` through each column's horizon."""
    worst = 0.0
    exact = A.exact and Y.exact
    Af = A if exact else A.to_float()
    r = A.r
    for col in Y.columns:
        # group every component by (base class, offset, logpow); offsets are
        # measured from the first base seen in each class
        bases: list = []
        horizon: dict = {}
        data: dict = {}

        def locate(b):
            for idx, known in enumerate(bases):
                gap = _gap(b, known, exact)
                if gap is not None:
                    return idx, gap
            bases.append(b)
            return len(bases) - 1, 0

        for i, s in enumerate(col):
            gaps = [locate(b) for b in s.bases]
            for idx, gap in gaps:
                h = gap + s.M_max
                horizon[idx] = min(horizon.get(idx, h), h)
            for (bi, m, t), c in s.terms.items():
                idx, gap = gaps[bi]
                key = (idx, m + gap, t)
                vec = data.setdefault(key, [0] * r)
                vec[i] = vec[i] + (gauss(c) if exact else to_complex(c))
        for idx, b in enumerate(bases):
            lo = min((k[1] for k in data if k[0] == idx), default=0)
            tmax = max((k[2] for k in data if k[0] == idx), default=0)
            for m in range(lo, horizon[idx] + 1):
                for t in range(tmax + 1):
                    s_exp = (gauss(b) + QQ_I(m, 0)) if exact else complex(to_complex(b)) + m
                    y = data.get((idx, m, t), [0] * r)
                    y1 = data.get((idx, m, t + 1), [0] * r)
                    for i in range(r):
                        val = s_exp * y[i] + (t + 1) * y1[i] if not exact else (
                            s_exp * gauss(y[i]) + QQ_I(t + 1, 0) * gauss(y1[i]))
                        for j in range(m - lo + 1):
                            yy = data.get((idx, m - j, t))
                            if yy is None:
                                continue
                            Aj = Af.coeff(j)
                            for kk in range(r):
                                if exact:
                                    val = val - _sym_to_gauss(Aj[i, kk]) * gauss(yy[kk])
                                else:
                                    val -= complex(Aj[i, kk]) * yy[kk]
                        worst = max(worst, abs(to_complex(val)))
    return worst


def _gap(b1, b2, exact: bool):
    if exact:
        re, im = gauss_parts(gauss(b1) - gauss(b2))
        return int(re) if im == 0 and re.denominator == 1 else None
    d = complex(to_complex(b1)) - complex(to_complex(b2))
    n = round(d.real)
    return n if abs(d.imag) <= RESONANCE_TOL and abs(d.real - n) <= RESONANCE_TOL else None


def solution_set_equal(Y1: FundamentalSolutionSet, Y2: FundamentalSolutionSet) -> bool:
    return Y1.columns == Y2.columns and Y1.exponents == Y2.exponents
