"""Truncated log-power series in one variable and monomial series in two.

A :class:`LogPowerSeries` is a finite sum of ``c * z**(d + m) * log(z)**t``
where each base ``d`` is a complex exponent, ``m`` a bounded natural
offset and ``t`` a bounded log power.  Bases that differ by an integer are
merged so that ladder membership ``d + m`` is decidable.

Two scalar modes are supported.  Float mode stores coefficients and bases as
Python ``complex``.  Exact mode stores them as Gaussian rationals
(``sympy.polys.domains.QQ_I`` elements), which is what the identity checks
use.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from sympy.polys.domains import QQ_I

GaussianRational = type(QQ_I(0, 0))

FLOAT_MERGE_TOL = 1e-9
DEFAULT_K_MAX = 8

FLAVOR_NONE = "none"
FLAVOR_XY = "iota_xy"
FLAVOR_Y_XMY = "iota_y_xmy"
_FLAVORS = (FLAVOR_NONE, FLAVOR_XY, FLAVOR_Y_XMY)


class SeriesError(ValueError):
    """Raised on invalid series operations (tag mismatch, overflow)."""


class BranchCutError(ValueError):
    """Raised when a principal-branch evaluation hits the cut z <= 0."""


# ---------------------------------------------------------------------------
# scalars


def is_exact(v) -> bool:
    return isinstance(v, (int, Fraction, GaussianRational)) and not isinstance(v, bool)


def gauss(v) -> GaussianRational:
    """Coerce an int, Fraction, ``"p/q"`` string or Gaussian rational to QQ_I."""
    if isinstance(v, GaussianRational):
        return v
    if isinstance(v, str):
        return QQ_I(Fraction(v), 0)
    if isinstance(v, (int, Fraction)):
        return QQ_I(Fraction(v), 0)
    if isinstance(v, complex) or isinstance(v, float):
        raise TypeError(f"cannot represent float {v!r} exactly")
    raise TypeError(f"unsupported scalar {v!r}")


def _mpq_to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def gauss_parts(v: GaussianRational) -> tuple[Fraction, Fraction]:
    return _mpq_to_fraction(v.x), _mpq_to_fraction(v.y)


def to_complex(v) -> complex:
    if isinstance(v, GaussianRational):
        return complex(float(v.x), float(v.y))
    return complex(v)


def scalar_is_zero(v) -> bool:
    if isinstance(v, GaussianRational):
        return v.x == 0 and v.y == 0
    return v == 0


def binom(s, j: int):
    """Generalized binomial coefficient C(s, j) for j >= 0.

    Exact inputs give exact output (Fraction or Gaussian rational); complex
    inputs give a complex result.
    """
    if j < 0:
        return 0
    if isinstance(s, int) and s >= 0:
        return math.comb(s, j) if j <= s else 0
    if isinstance(s, (int, Fraction)):
        num = Fraction(1)
        for i in range(j):
            num *= s - i
        return num / math.factorial(j)
    if isinstance(s, GaussianRational):
        num = QQ_I(1, 0)
        for i in range(j):
            num = num * (s - QQ_I(i, 0))
        return num * QQ_I(Fraction(1, math.factorial(j)), 0)
    num = complex(1.0)
    for i in range(j):
        num *= s - i
    return num / math.factorial(j)


def _exp_key(e):
    """Hashable, comparable identity of an exponent."""
    if isinstance(e, GaussianRational):
        return ("q", gauss_parts(e))
    return ("f", complex(e))


def _integer_gap(d1, d2, exact: bool) -> int | None:
    """Return d1 - d2 if it is an integer (within tolerance in float mode)."""
    if exact:
        diff = d1 - d2
        re, im = gauss_parts(diff)
        if im == 0 and re.denominator == 1:
            return int(re)
        return None
    diff = complex(d1) - complex(d2)
    n = round(diff.real)
    if abs(diff.imag) <= FLOAT_MERGE_TOL and abs(diff.real - n) <= FLOAT_MERGE_TOL:
        return int(n)
    return None


def _shift(d, n: int, exact: bool):
    return d + QQ_I(n, 0) if exact else complex(d) + n


# ---------------------------------------------------------------------------
# ExponentSet


@dataclass(frozen=True)
class ExponentSet:
    """Canonical ladder bases: no two differ by an integer."""

    bases: tuple
    exact: bool = False

    @classmethod
    def from_values(cls, values: Iterable, exact: bool | None = None) -> "ExponentSet":
        values = list(values)
        if exact is None:
            exact = all(is_exact(v) for v in values) and bool(values)
        if exact:
            values = [gauss(v) for v in values]
        else:
            values = [complex(to_complex(v)) for v in values]
        bases: list = []
        for v in values:
            for idx, b in enumerate(bases):
                gap = _integer_gap(v, b, exact)
                if gap is not None:
                    if gap < 0:
                        bases[idx] = v
                    break
            else:
                bases.append(v)
        return cls(tuple(bases), exact)

    def contains_mod_z(self, value, tol: float = 1e-8) -> bool:
        """True if ``value`` lies in some ladder ``d + Z``."""
        for b in self.bases:
            diff = to_complex(value) - to_complex(b)
            if abs(diff.imag) <= tol and abs(diff.real - round(diff.real)) <= tol:
                return True
        return False

    def __len__(self) -> int:
        return len(self.bases)


# ---------------------------------------------------------------------------
# LogPowerSeries


@dataclass(frozen=True)
class LogPowerSeries:
    """Immutable truncated sum of ``c z^(d+m) log^t z``.

    ``terms`` maps ``(base_index, offset, logpow)`` to a nonzero coefficient.
    Every stored offset is at most ``M_max`` and every log power at most
    ``K_max``.  ``truncated`` records that some operation dropped terms.
    """

    variable: str
    bases: tuple
    terms: Mapping
    M_max: int
    K_max: int = DEFAULT_K_MAX
    exact: bool = False
    truncated: bool = False
    _frozen_terms: tuple = field(default=(), repr=False, compare=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_exponents(
        cls,
        variable: str,
        data: Mapping,
        M_max: int,
        K_max: int = DEFAULT_K_MAX,
        exact: bool | None = None,
        strict_logs: bool = True,
    ) -> "LogPowerSeries":
        """Build from ``{(exponent, logpow): coeff}``.

        The base of each integer class is its smallest exponent; terms more
        than ``M_max`` above the base are dropped and flagged.
        """
        items = [(s, t, c) for (s, t), c in data.items()]
        if exact is None:
            exact = bool(items) and all(is_exact(s) and is_exact(c) for s, _, c in items)
        bases: list = []
        raw: list = []
        for s, t, c in items:
            s = gauss(s) if exact else complex(to_complex(s))
            c = gauss(c) if exact else complex(to_complex(c))
            raw.append((s, t, c))
            for idx, b in enumerate(bases):
                gap = _integer_gap(s, b, exact)
                if gap is not None:
                    if gap < 0:
                        bases[idx] = s
                    break
            else:
                bases.append(s)
        terms: dict = {}
        truncated = False
        for s, t, c in raw:
            if t > K_max:
                if strict_logs:
                    raise SeriesError(f"log power {t} exceeds K_max={K_max}")
                truncated = True
                continue
            for idx, b in enumerate(bases):
                gap = _integer_gap(s, b, exact)
                if gap is not None:
                    break
            if gap > M_max:
                truncated = True
                continue
            key = (idx, gap, t)
            terms[key] = terms.get(key, 0) + c
        return cls._canonical(variable, tuple(bases), terms, M_max, K_max, exact, truncated)

    @classmethod
    def _canonical(cls, variable, bases, terms, M_max, K_max, exact, truncated):
        clean = {k: v for k, v in terms.items() if not scalar_is_zero(v)}
        obj = cls(variable, tuple(bases), clean, M_max, K_max, exact, truncated)
        return obj

    @classmethod
    def zero(cls, variable: str, M_max: int, K_max: int = DEFAULT_K_MAX, exact: bool = False):
        return cls(variable, (), {}, M_max, K_max, exact, False)

    @classmethod
    def monomial(cls, variable: str, exponent, coeff=1, logpow: int = 0, M_max: int = 0,
                 K_max: int = DEFAULT_K_MAX, exact: bool | None = None):
        return cls.from_exponents(variable, {(exponent, logpow): coeff}, M_max, K_max, exact)

    @classmethod
    def from_coefficients(cls, variable: str, base, coeffs, logpow: int = 0,
                          K_max: int = DEFAULT_K_MAX, exact: bool | None = None):
        """Power series ``sum_m coeffs[m] z^(base+m) log^logpow z`` with M_max = len-1."""
        data = {}
        for m, c in enumerate(coeffs):
            if not scalar_is_zero(c):
                data[(base + m if not isinstance(base, GaussianRational) else base + QQ_I(m, 0), logpow)] = c
        M = len(coeffs) - 1
        if exact is None:
            exact = is_exact(base) and all(is_exact(c) for c in coeffs)
        if not data:
            b = gauss(base) if exact else complex(base)
            return cls(variable, (b,), {}, M, K_max, exact, False)
        out = cls.from_exponents(variable, data, M + _base_gap(base, data, exact), K_max, exact)
        # re-anchor at the requested base so the horizon is base + M
        return out.rebase(gauss(base) if exact else complex(base), M)

    def rebase(self, base, M_max: int) -> "LogPowerSeries":
        """Re-anchor the (single) class at ``base`` with horizon ``base + M_max``."""
        data = {}
        bases = list(self.bases)
        idx_new = None
        for i, b in enumerate(bases):
            if _integer_gap(base, b, self.exact) is not None:
                idx_new = i
        new_bases = list(bases)
        if idx_new is None:
            new_bases.append(base)
            idx_new = len(new_bases) - 1
        else:
            new_bases[idx_new] = base
        terms = {}
        truncated = self.truncated
        for (i, m, t), c in self.terms.items():
            if i == idx_new:
                gap = _integer_gap(bases[i], base, self.exact) + m
                if gap < 0:
                    raise SeriesError("rebase would create a negative offset")
                if gap > M_max:
                    truncated = True
                    continue
                terms[(i, gap, t)] = c
            else:
                terms[(i, m, t)] = c
        return LogPowerSeries._canonical(self.variable, tuple(new_bases), terms,
                                         max(M_max, self.M_max) if len(new_bases) > 1 else M_max,
                                         self.K_max, self.exact, truncated)

    # -- views --------------------------------------------------------------

    def exponent(self, base_index: int, offset: int):
        return _shift(self.bases[base_index], offset, self.exact)

    def items_by_exponent(self):
        """Yield ``(exponent, logpow, coeff)`` triples."""
        for (i, m, t), c in sorted(self.terms.items(), key=lambda kv: kv[0]):
            yield self.exponent(i, m), t, c

    def as_exponent_map(self) -> dict:
        return {(_exp_key(s), t): c for s, t, c in self.items_by_exponent()}

    def horizons(self) -> list:
        return [_shift(b, self.M_max, self.exact) for b in self.bases]

    def exponent_set(self) -> ExponentSet:
        return ExponentSet(tuple(self.bases), self.exact)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogPowerSeries):
            return NotImplemented
        return (self.variable == other.variable and self.as_exponent_map() == other.as_exponent_map())

    def __hash__(self):
        return hash((self.variable, len(self.terms)))

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "LogPowerSeries") -> None:
        if self.variable != other.variable:
            raise SeriesError(f"variable mismatch: {self.variable!r} vs {other.variable!r}")

    def _abs_horizons(self) -> list:
        return [(b, _shift(b, self.M_max, self.exact)) for b in self.bases]

    def __add__(self, other: "LogPowerSeries") -> "LogPowerSeries":
        return lps_add(self, other)

    def __neg__(self) -> "LogPowerSeries":
        return self.scale(-1 if not self.exact else QQ_I(-1, 0))

    def __sub__(self, other: "LogPowerSeries") -> "LogPowerSeries":
        return lps_add(self, -other)

    def __mul__(self, other):
        if isinstance(other, LogPowerSeries):
            return lps_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "LogPowerSeries":
        if self.exact:
            c = gauss(c)
        else:
            c = complex(to_complex(c))
        return LogPowerSeries._canonical(
            self.variable, self.bases, {k: v * c for k, v in self.terms.items()},
            self.M_max, self.K_max, self.exact, self.truncated)

    def shift(self, n) -> "LogPowerSeries":
        """Multiply by ``z**n`` (n may be any exponent)."""
        if self.exact:
            n = gauss(n)
            bases = tuple(b + n for b in self.bases)
        else:
            bases = tuple(complex(b) + complex(to_complex(n)) for b in self.bases)
        return LogPowerSeries._canonical(self.variable, bases, dict(self.terms), self.M_max,
                                         self.K_max, self.exact, self.truncated)

    def to_float(self) -> "LogPowerSeries":
        if not self.exact:
            return self
        return LogPowerSeries(self.variable, tuple(to_complex(b) for b in self.bases),
                              {k: to_complex(v) for k, v in self.terms.items()},
                              self.M_max, self.K_max, False, self.truncated)

    def derive(self) -> "LogPowerSeries":
        return lps_derive(self)

    def eval(self, z) -> tuple[complex, float]:
        return lps_eval(self, z)

    def max_abs_coeff(self) -> float:
        return max((abs(to_complex(c)) for c in self.terms.values()), default=0.0)

    def band(self, offset: int) -> dict:
        """Coefficients at a given offset, keyed ``(base_index, logpow)``."""
        return {(i, t): c for (i, m, t), c in self.terms.items() if m == offset}

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        def part(v):
            return str(v) if isinstance(v, Fraction) else v

        bases = []
        for b in self.bases:
            if self.exact:
                re, im = gauss_parts(b)
                bases.append([str(re), str(im)])
            else:
                bases.append([complex(b).real, complex(b).imag])
        terms = []
        for (i, m, t), c in sorted(self.terms.items()):
            if self.exact:
                re, im = gauss_parts(c)
                terms.append({"base": i, "offset": m, "logpow": t, "re": part(re), "im": part(im)})
            else:
                c = complex(c)
                terms.append({"base": i, "offset": m, "logpow": t, "re": c.real, "im": c.imag})
        return {
            "variable": self.variable,
            "mode": "exact" if self.exact else "float",
            "bases": bases,
            "terms": terms,
            "M_max": self.M_max,
            "K_max": self.K_max,
            "truncated": self.truncated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "LogPowerSeries":
        exact = doc.get("mode", "float") == "exact"
        if exact:
            bases = tuple(QQ_I(Fraction(re), Fraction(im)) for re, im in doc["bases"])
        else:
            bases = tuple(complex(re, im) for re, im in doc["bases"])
        terms = {}
        for t in doc["terms"]:
            key = (int(t["base"]), int(t["offset"]), int(t["logpow"]))
            if exact:
                terms[key] = QQ_I(Fraction(str(t["re"])), Fraction(str(t["im"])))
            else:
                terms[key] = complex(t["re"], t["im"])
        return cls._canonical(doc["variable"], bases, terms, int(doc["M_max"]),
                              int(doc.get("K_max", DEFAULT_K_MAX)), exact,
                              bool(doc.get("truncated", False)))

    @classmethod
    def from_json(cls, text: str) -> "LogPowerSeries":
        return cls.from_json_dict(json.loads(text))


def _base_gap(base, data, exact) -> int:
    """How far the lowest exponent in ``data`` sits above ``base``."""
    gaps = []
    for (s, _t) in data:
        g = _integer_gap(gauss(s) if exact else complex(to_complex(s)),
                         gauss(base) if exact else complex(base), exact)
        gaps.append(g)
    return -min(gaps) if gaps and min(gaps) < 0 else 0


def _merge(variable, pieces, M_max, K_max, exact, truncated, strict_logs=True):
    """Combine ``(exponent, logpow, coeff, horizon)`` pieces into a canonical series.

    Each class gets the lowest exponent seen as its base and the lowest
    horizon seen; the global ``M_max`` is the smallest horizon gap.
    """
    classes: list[list] = []  # [base, horizon]
    for s, t, c, h in pieces:
        for cl in classes:
            if _integer_gap(s, cl[0], exact) is not None:
                if _integer_gap(s, cl[0], exact) < 0:
                    cl[0] = s
                if h is not None and (cl[1] is None or _integer_gap(h, cl[1], exact) < 0):
                    cl[1] = h
                break
        else:
            classes.append([s, h])
    gaps = [_integer_gap(h, b, exact) for b, h in classes if h is not None]
    M = min(gaps) if gaps else M_max
    if M_max is not None:
        M = min(M, M_max) if gaps else M_max
    M = max(M, 0)
    bases = tuple(cl[0] for cl in classes)
    terms: dict = {}
    for s, t, c, _h in pieces:
        if t > K_max:
            if strict_logs:
                raise SeriesError(f"log power {t} exceeds K_max={K_max}")
            truncated = True
            continue
        for idx, b in enumerate(bases):
            gap = _integer_gap(s, b, exact)
            if gap is not None:
                break
        if gap > M:
            if not scalar_is_zero(c):
                truncated = True
            continue
        key = (idx, gap, t)
        terms[key] = terms.get(key, 0) + c
    return LogPowerSeries._canonical(variable, bases, terms, M, K_max, exact, truncated)


def _pieces(a: LogPowerSeries):
    for (i, m, t), c in a.terms.items():
        yield _shift(a.bases[i], m, a.exact), t, c, _shift(a.bases[i], a.M_max, a.exact)


def _horizon_pieces(a: LogPowerSeries):
    """Zero-coefficient pieces carrying each class's horizon."""
    zero = QQ_I(0, 0) if a.exact else 0j
    for b in a.bases:
        yield b, 0, zero, _shift(b, a.M_max, a.exact)


def _coerce_pair(a: LogPowerSeries, b: LogPowerSeries):
    a._check(b)
    if a.exact != b.exact:
        return a.to_float(), b.to_float(), False
    return a, b, a.exact


def lps_add(a: LogPowerSeries, b: LogPowerSeries) -> LogPowerSeries:
    """Coefficient-wise sum, truncated to the common horizon of each class."""
    a, b, exact = _coerce_pair(a, b)
    pieces = list(_horizon_pieces(a)) + list(_horizon_pieces(b)) + list(_pieces(a)) + list(_pieces(b))
    return _merge(a.variable, pieces, None, min(a.K_max, b.K_max), exact,
                  a.truncated or b.truncated)


def lps_mul(a: LogPowerSeries, b: LogPowerSeries, strict_logs: bool = False) -> LogPowerSeries:
    """Distributive product; log powers and offsets add.

    The product of classes ``d`` and ``e`` is known through
    ``d + e + min(M_a, M_b)``.  Terms past that, or with log power above
    ``K_max``, are dropped and flagged; with ``strict_logs`` a log overflow
    raises instead.
    """
    a, b, exact = _coerce_pair(a, b)
    K = min(a.K_max, b.K_max)
    M = min(a.M_max, b.M_max)
    pieces = []
    zero = QQ_I(0, 0) if exact else 0j
    for da in a.bases:
        for db in b.bases:
            base = da + db
            pieces.append((base, 0, zero, _shift(base, M, exact)))
    for (i, m, t), c in a.terms.items():
        for (j, n, u), d in b.terms.items():
            s = _shift(a.bases[i] + b.bases[j], m + n, exact)
            h = _shift(a.bases[i] + b.bases[j], M, exact)
            pieces.append((s, t + u, c * d, h))
    return _merge(a.variable, pieces, None, K, exact, a.truncated or b.truncated,
                  strict_logs=strict_logs)


def lps_derive(a: LogPowerSeries) -> LogPowerSeries:
    """d/dz term by term: z^s log^t -> s z^(s-1) log^t + t z^(s-1) log^(t-1)."""
    exact = a.exact
    one = QQ_I(1, 0) if exact else 1
    terms: dict = {}
    for (i, m, t), c in a.terms.items():
        s = _shift(a.bases[i], m, exact)
        k1 = (i, m, t)
        terms[k1] = terms.get(k1, 0) + c * s
        if t > 0:
            k2 = (i, m, t - 1)
            terms[k2] = terms.get(k2, 0) + c * (QQ_I(t, 0) if exact else t)
    bases = tuple(b - one for b in a.bases)
    return LogPowerSeries._canonical(a.variable, bases, terms, a.M_max, a.K_max, exact, a.truncated)


def principal_log(z) -> complex:
    z = complex(z)
    if z == 0:
        raise BranchCutError("log(0) is undefined")
    if z.imag == 0 and z.real < 0:
        raise BranchCutError(f"{z} lies on the branch cut of the principal logarithm")
    return cmath.log(z)


def principal_power(z, s) -> complex:
    """``z**s`` on the principal branch, ``exp(s Log z)``."""
    s = to_complex(s)
    if s == 0:
        return 1.0 + 0j
    if complex(s).imag == 0 and float(s.real).is_integer() and complex(z) != 0:
        return complex(z) ** int(s.real)
    return cmath.exp(s * principal_log(z))


def lps_eval(a: LogPowerSeries, z) -> tuple[complex, float]:
    """Evaluate on the principal branch.

    Returns ``(value, tail)`` where ``tail`` is the magnitude of the last
    retained band, a heuristic estimate of the truncation error.
    """
    z = complex(z)
    L = principal_log(z)
    total = 0j
    band = 0.0
    for (i, m, t), c in a.terms.items():
        s = to_complex(_shift(a.bases[i], m, a.exact))
        try:
            term = to_complex(c) * cmath.exp(s * L) * (L ** t)
        except OverflowError as exc:
            raise OverflowError(f"overflow evaluating z^{s} at {z}") from exc
        total += term
        if m == a.M_max:
            band += abs(term)
    if not math.isfinite(total.real) or not math.isfinite(total.imag):
        raise OverflowError("non-finite series value")
    return total, band


# ---------------------------------------------------------------------------
# MonomialSeries2


@dataclass(frozen=True)
class MonomialSeries2:
    """Finite sum of ``c x^a y^b (x-y)^e log^h x log^k y log^j (x-y)``.

    ``terms`` maps ``(a, b, e, h, k, j)`` to a nonzero coefficient.  The
    ``flavor`` records which iota-expansion produced any infinite tail.
    """

    terms: Mapping
    flavor: str = FLAVOR_NONE

    def __post_init__(self):
        if self.flavor not in _FLAVORS:
            raise SeriesError(f"unknown flavor {self.flavor!r}")

    @classmethod
    def from_terms(cls, data: Mapping, flavor: str = FLAVOR_NONE) -> "MonomialSeries2":
        clean: dict = {}
        for key, c in data.items():
            key = tuple(key) + (0,) * (6 - len(key))
            clean[key] = clean.get(key, 0) + c
        return cls({k: v for k, v in clean.items() if not scalar_is_zero(v)}, flavor)

    @classmethod
    def one(cls, flavor: str = FLAVOR_NONE) -> "MonomialSeries2":
        return cls({(0, 0, 0, 0, 0, 0): Fraction(1)}, flavor)

    def _join_flavor(self, other: "MonomialSeries2") -> str:
        if self.flavor == FLAVOR_NONE:
            return other.flavor
        if other.flavor in (FLAVOR_NONE, self.flavor):
            return self.flavor
        raise SeriesError(f"flavor mismatch: {self.flavor} vs {other.flavor}")

    def __add__(self, other: "MonomialSeries2") -> "MonomialSeries2":
        data = dict(self.terms)
        for k, v in other.terms.items():
            data[k] = data.get(k, 0) + v
        return MonomialSeries2.from_terms(data, self._join_flavor(other))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MonomialSeries2":
        return MonomialSeries2.from_terms({k: v * c for k, v in self.terms.items()}, self.flavor)

    def __mul__(self, other):
        if not isinstance(other, MonomialSeries2):
            return self.scale(other)
        data: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = tuple(p + q for p, q in zip(k1, k2))
                data[key] = data.get(key, 0) + c1 * c2
        return MonomialSeries2.from_terms(data, self._join_flavor(other))

    __rmul__ = scale

    def with_flavor(self, flavor: str) -> "MonomialSeries2":
        return MonomialSeries2(dict(self.terms), flavor)

    def is_zero(self) -> bool:
        return not self.terms

    def eval(self, x, y) -> complex:
        """Principal-branch value at a point with x, y, x-y off the cut."""
        x, y = complex(x), complex(y)
        lx, ly, lxy = principal_log(x), principal_log(y), principal_log(x - y)
        total = 0j
        for (a, b, e, h, k, j), c in self.terms.items():
            total += (to_complex(c) * principal_power(x, a) * principal_power(y, b)
                      * principal_power(x - y, e) * lx ** h * ly ** k * lxy ** j)
        return total

    def eval_rational(self, x, y) -> complex:
        """Value for integer exponents and no logs; no branch restriction."""
        x, y = complex(x), complex(y)
        total = 0j
        for (a, b, e, h, k, j), c in self.terms.items():
            if h or k or j:
                raise SeriesError("eval_rational needs a log-free series")
            total += to_complex(c) * x ** int(a) * y ** int(b) * (x - y) ** int(e)
        return total

    def negate_y(self) -> "MonomialSeries2":
        """Substitute y -> -y in a polynomial-type series (integer y powers, no (x-y))."""
        data = {}
        for (a, b, e, h, k, j), c in self.terms.items():
            if e != 0 or k != 0 or j != 0 or Fraction(b).denominator != 1:
                raise SeriesError("negate_y needs integer y powers and no (x-y) factors")
            data[(a, b, e, h, k, j)] = c * (-1) ** int(b)
        return MonomialSeries2.from_terms(data, self.flavor)

    def derive_x(self) -> "MonomialSeries2":
        data: dict = {}

        def add(key, c):
            data[key] = data.get(key, 0) + c

        for (a, b, e, h, k, j), c in self.terms.items():
            if a != 0:
                add((a - 1, b, e, h, k, j), c * a)
            if h:
                add((a - 1, b, e, h - 1, k, j), c * h)
            if e != 0:
                add((a, b, e - 1, h, k, j), c * e)
            if j:
                add((a, b, e - 1, h, k, j - 1), c * j)
        return MonomialSeries2.from_terms(data, self.flavor)

    def derive_y(self) -> "MonomialSeries2":
        data: dict = {}

        def add(key, c):
            data[key] = data.get(key, 0) + c

        for (a, b, e, h, k, j), c in self.terms.items():
            if b != 0:
                add((a, b - 1, e, h, k, j), c * b)
            if k:
                add((a, b - 1, e, h, k - 1, j), c * k)
            if e != 0:
                add((a, b, e - 1, h, k, j), -c * e)
            if j:
                add((a, b, e - 1, h, k, j - 1), -c * j)
        return MonomialSeries2.from_terms(data, self.flavor)

    def log_coefficient(self, h: int, k: int) -> "MonomialSeries2":
        """The part multiplying ``log^h x log^k y``."""
        return MonomialSeries2.from_terms(
            {(a, b, e, 0, 0, j): c for (a, b, e, hh, kk, j), c in self.terms.items()
             if hh == h and kk == k}, self.flavor)

    def min_power(self, slot: str):
        idx = {"x": 0, "y": 1, "xmy": 2}[slot]
        vals = [to_complex(key[idx]).real for key in self.terms]
        return min(vals) if vals else None

    def expand_in_xmy(self, y0, M: int):
        """Taylor coefficients in ``t = x - y0`` at fixed ``y = y0``.

        Needs log-free terms with nonnegative integer powers of (x-y).
        Returns a list of ``M + 1`` complex numbers.
        """
        y0 = complex(y0)
        out = [0j] * (M + 1)
        for (a, b, e, h, k, j), c in self.terms.items():
            if h or k or j:
                raise SeriesError("expand_in_xmy needs a log-free series")
            e = int(e)
            if e < 0:
                raise SeriesError("negative power of (x-y) in an (x-y)-flavored expansion")
            pref = to_complex(c) * principal_power(y0, b)
            # x^a = (y0 + t)^a
            for n in range(0, M + 1 - e):
                out[n + e] += pref * complex(to_complex(binom(a, n))) * principal_power(y0, to_complex(a) - n)
        return out

    def expand_in_y(self, x0, M: int):
        """Taylor coefficients in ``y`` at fixed ``x = x0``; needs y powers >= 0."""
        x0 = complex(x0)
        out = [0j] * (M + 1)
        for (a, b, e, h, k, j), c in self.terms.items():
            if h or k or j:
                raise SeriesError("expand_in_y needs a log-free series")
            b = int(b)
            if b < 0:
                raise SeriesError("negative power of y in a y-flavored expansion")
            pref = to_complex(c) * principal_power(x0, a)
            # (x0 - y)^e = sum_n C(e,n) x0^(e-n) (-y)^n
            for n in range(0, M + 1 - b):
                out[n + b] += pref * complex(to_complex(binom(e, n))) * principal_power(x0, to_complex(e) - n) * (-1) ** n
        return out

    def __repr__(self) -> str:
        parts = []
        for (a, b, e, h, k, j), c in sorted(self.terms.items(), key=lambda kv: str(kv[0])):
            parts.append(f"{c}*x^{a}*y^{b}*(x-y)^{e}" + (f"*L{h},{k},{j}" if h or k or j else ""))
        return f"MonomialSeries2[{self.flavor}](" + " + ".join(parts) + ")"


def iota_xy(s, M: int) -> MonomialSeries2:
    """``sum_{j<=M} C(s,j) x^(s-j) (-y)^j``, the |y|<|x| expansion of (x-y)^s."""
    data = {}
    for j in range(M + 1):
        c = binom(s, j)
        if scalar_is_zero(c):
            continue
        data[(s - j, j, 0, 0, 0, 0)] = c * (-1) ** j
    return MonomialSeries2.from_terms(data, FLAVOR_XY)


def iota_y_xmy(s, M: int) -> MonomialSeries2:
    """``sum_{j<=M} C(s,j) y^(s-j) (x-y)^j``, the |x-y|<|y| expansion of x^s."""
    data = {}
    for j in range(M + 1):
        c = binom(s, j)
        if scalar_is_zero(c):
            continue
        data[(0, s - j, j, 0, 0, 0)] = c
    return MonomialSeries2.from_terms(data, FLAVOR_Y_XMY)


def log_x_substitute(M: int) -> MonomialSeries2:
    """Truncation to order M in (x-y) of ``log y + sum (-1)^j/(j+1) ((x-y)/y)^(j+1)``."""
    if M < 1:
        raise SeriesError("log_x_substitute needs M >= 1")
    data = {(0, 0, 0, 0, 1, 0): Fraction(1)}
    for j in range(M):
        data[(0, -(j + 1), j + 1, 0, 0, 0)] = Fraction((-1) ** j, j + 1)
    return MonomialSeries2.from_terms(data, FLAVOR_Y_XMY)


def double_binomial_xy_sides(n: int, ell: int, M: int) -> tuple[MonomialSeries2, MonomialSeries2]:
    """Both sides of the Z^ell coefficient of the double binomial expansion.

    Left: ``sum_j C(n,j) C(j,ell) x^(n-j) y^(j-ell)`` for ``j - ell <= M``.
    Right: ``C(n,ell)`` times the iota_{x,y} expansion of ``(x+y)^(n-ell)``.
    """
    left = {}
    for j in range(ell, ell + M + 1):
        c = Fraction(binom(n, j)) * Fraction(binom(j, ell))
        if c:
            left[(n - j, j - ell, 0, 0, 0, 0)] = c
    lhs = MonomialSeries2.from_terms(left, FLAVOR_XY)
    rhs = iota_xy(n - ell, M).negate_y().scale(Fraction(binom(n, ell)))
    return lhs, rhs


def double_binomial_xmy_sides(n: int, ell: int) -> tuple[MonomialSeries2, MonomialSeries2]:
    """Both sides of the Z^ell coefficient of the (x-y), y double expansion.

    Left: ``sum_{i+j=ell} C(n-j,i) C(n,j) (-1)^(i+j) (x-y)^j y^i``.
    Right: ``C(n,ell) (-1)^ell`` times iota_{y,x-y} of ``x^ell``.
    """
    left = {}
    for j in range(ell + 1):
        i = ell - j
        c = Fraction(binom(n - j, i)) * Fraction(binom(n, j)) * (-1) ** (i + j)
        if c:
            left[(0, i, j, 0, 0, 0)] = c
    lhs = MonomialSeries2.from_terms(left, FLAVOR_Y_XMY)
    rhs = iota_y_xmy(ell, ell).scale(Fraction(binom(n, ell)) * (-1) ** ell)
    return lhs, rhs


# ---------------------------------------------------------------------------
# sparse Laurent polynomials in x, y, (x - y)
#
# A dict ``{(i, j, k): c}`` stands for ``sum c x^i y^j (x-y)^k``.  Monomials
# are kept in product form (no rewriting of x as y + (x-y)) so that the
# power of each factor can be read off term by term.


def laurent_mul(p: Mapping, q: Mapping) -> dict:
    out: dict = {}
    for (i1, j1, k1), c1 in p.items():
        for (i2, j2, k2), c2 in q.items():
            key = (i1 + i2, j1 + j2, k1 + k2)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}


def laurent_add_into(acc: dict, p: Mapping, scale=1) -> None:
    for key, c in p.items():
        v = acc.get(key, 0) + c * scale
        if v == 0:
            acc.pop(key, None)
        else:
            acc[key] = v


def laurent_eval(p: Mapping, x, y):
    """Value at a point; integer exponents only, so no branch is involved.

    Rational ``x``, ``y`` give an exact :class:`Fraction`.
    """
    if isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction)):
        x, y = Fraction(x), Fraction(y)
        d = x - y
        return sum((Fraction(c) * x ** i * y ** j * d ** k for (i, j, k), c in p.items()), Fraction(0))
    x, y = complex(x), complex(y)
    d = x - y
    total = 0j
    for (i, j, k), c in p.items():
        total += float(c) * x ** i * y ** j * d ** k
    return total


def laurent_to_series(p: Mapping, flavor: str = FLAVOR_NONE) -> MonomialSeries2:
    return MonomialSeries2.from_terms({(i, j, k, 0, 0, 0): c for (i, j, k), c in p.items()}, flavor)
