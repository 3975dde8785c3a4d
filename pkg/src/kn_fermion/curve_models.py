"""Curve backends, meromorphic functions and Riemann-Roch bases.

Two backends are supported:

* genus 0: the rational line with ``P+ = 0`` and ``P- = infinity``, local
  parameters ``z`` and ``1/z``.  Functions are exact rational functions.
* genus 1: ``C / L`` for a lattice ``L``; local parameter ``z - p`` at every
  point.  Functions are expression trees over sigma products and zeta sums
  whose local series are computed analytically from the Weierstrass
  recursions, not by numerical differentiation.

Every function exposes ``series(point, n)``: a :class:`LaurentSeries` in the
local parameter whose first exponent is a certified lower bound for the
order of the function at the point and which carries ``n`` known
coefficients.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Number

import numpy as np

from .errors import (
    AbelConditionViolated,
    CoincidentPoints,
    ConfigError,
    DegenerateLattice,
    DegreeMismatch,
    ExpansionOrderExceeded,
    SpecialDivisorUnresolved,
    UnsupportedGenusOperation,
)
from .linalg import numeric_nullity
from .series import LaurentSeries
from .weierstrass import Lattice, sample_points


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()

_PLUS_NAMES = {"+", "p+", "P+", "p_plus", "plus"}
_MINUS_NAMES = {"-", "p-", "P-", "p_minus", "minus"}


@dataclass(frozen=True, eq=False)
class CurveModel:
    genus: int
    omega1: complex | None = None
    omega2: complex | None = None
    p_plus: object = Fraction(0)
    p_minus: object = INFINITY
    tolerance: float = 1e-9
    expansion_order: int = 24

    @cached_property
    def lattice(self) -> Lattice:
        if self.genus != 1:
            raise UnsupportedGenusOperation("the rational curve has no period lattice")
        return Lattice(self.omega1, self.omega2)

    def __repr__(self):
        if self.genus == 0:
            return "CurveModel(genus=0, P+=0, P-=inf)"
        return (f"CurveModel(genus=1, omega=({self.omega1:.6g}, {self.omega2:.6g}), "
                f"P+={self.p_plus:.6g}, P-={self.p_minus:.6g})")


def make_rational_curve(expansion_order: int = 64) -> CurveModel:
    return CurveModel(genus=0, expansion_order=expansion_order)


def make_elliptic_curve(omega1, omega2, p_plus, p_minus, tolerance: float = 1e-9,
                        expansion_order: int = 24) -> CurveModel:
    """Genus-one curve ``C / (Z omega1 + Z omega2)`` with two marked points."""
    omega1, omega2 = complex(omega1), complex(omega2)
    if omega1 == 0 or omega2 == 0:
        raise DegenerateLattice("zero period")
    ratio = omega2 / omega1
    if abs(ratio.imag) <= 1e-10 * max(1.0, abs(ratio)):
        raise DegenerateLattice(f"period ratio {ratio} is real")
    if ratio.imag < 0:
        omega2 = -omega2
    curve = CurveModel(1, omega1, omega2, complex(p_plus), complex(p_minus), tolerance, expansion_order)
    if curve.lattice.congruent(curve.p_plus, curve.p_minus):
        raise CoincidentPoints("P+ and P- are congruent modulo the lattice")
    return curve


def curve_from_dict(doc: dict) -> CurveModel:
    def cplx(v):
        if isinstance(v, (list, tuple)):
            return complex(v[0], v[1])
        return complex(v)

    try:
        genus = int(doc["genus"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"curve document needs an integer 'genus': {exc}") from None
    if genus == 0:
        return make_rational_curve(int(doc.get("expansion_order", 64)))
    if genus != 1:
        raise ConfigError(f"unsupported genus {genus}")
    try:
        return make_elliptic_curve(
            cplx(doc["omega1"]), cplx(doc["omega2"]), cplx(doc["p_plus"]), cplx(doc["p_minus"]),
            float(doc.get("tolerance", 1e-9)), int(doc.get("expansion_order", 24)))
    except KeyError as exc:
        raise ConfigError(f"curve document is missing {exc}") from None


def curve_to_dict(curve: CurveModel) -> dict:
    if curve.genus == 0:
        return {"genus": 0, "expansion_order": curve.expansion_order}
    pair = lambda c: [c.real, c.imag]
    return {"genus": 1, "omega1": pair(curve.omega1), "omega2": pair(curve.omega2),
            "p_plus": pair(curve.p_plus), "p_minus": pair(curve.p_minus),
            "tolerance": curve.tolerance, "expansion_order": curve.expansion_order}


# -- points -------------------------------------------------------------------

def resolve_point(curve: CurveModel, point):
    if isinstance(point, str):
        if point in _PLUS_NAMES:
            return curve.p_plus
        if point in _MINUS_NAMES:
            return curve.p_minus
        if point in ("inf", "infinity", "∞") and curve.genus == 0:
            return INFINITY
        raise ValueError(f"unknown point label {point!r}")
    if curve.genus == 0:
        if point is INFINITY:
            return point
        if isinstance(point, (int, Fraction)):
            return Fraction(point)
        return complex(point)
    if point is INFINITY:
        raise ValueError("infinity is not a point of the torus model")
    return complex(point)


def same_point(curve: CurveModel, a, b) -> bool:
    if curve.genus == 0:
        if a is INFINITY or b is INFINITY:
            return a is b
        return abs(complex(a) - complex(b)) <= 1e-12
    return curve.lattice.congruent(a, b)


def _point_key(curve, p):
    if p is INFINITY:
        return p
    if curve.genus == 1:
        z0, _, _ = curve.lattice.reduce(p)
        z0 = complex(z0)
        return (round(z0.real, 9), round(z0.imag, 9))
    return p


def merge_divisor(curve: CurveModel, divisor):
    """Combine multiplicities of equal (or congruent) points; drop zeros."""
    out: list[list] = []
    for p, m in divisor:
        p = resolve_point(curve, p)
        for item in out:
            if same_point(curve, item[0], p):
                item[1] += int(m)
                break
        else:
            out.append([p, int(m)])
    return [(p, m) for p, m in out if m != 0]


def divisor_degree(divisor) -> int:
    return sum(int(m) for _, m in divisor)


# -- exact polynomial helpers (low to high) ----------------------------------

def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction)) and not isinstance(c, bool)


def _coerce(c):
    return Fraction(c) if _is_exact(c) else complex(c)


def _ptrim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p or [Fraction(0)]


def _padd(a, b):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _ptrim([x + y for x, y in zip(a, b)])


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _ptrim(out)


def _pshift(p, a):
    """Coefficients of ``p(a + t)``."""
    out = [Fraction(0)]
    for c in reversed(p):
        # out = out * (a + t) + c
        nxt = [Fraction(0)] * (len(out) + 1)
        for i, x in enumerate(out):
            nxt[i] += x * a
            nxt[i + 1] += x
        nxt[0] += c
        out = nxt
    return _ptrim(out)


def _pdivmod(a, b):
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = b[-1]
    for k in range(len(a) - len(b), -1, -1):
        c = a[k + len(b) - 1] / lead
        q[k] = c
        for i, y in enumerate(b):
            a[k + i] -= c * y
    return _ptrim(q), _ptrim(a[:len(b) - 1] or [0])


def _pgcd(a, b):
    a, b = _ptrim(a), _ptrim(b)
    while not (len(b) == 1 and b[0] == 0):
        _, r = _pdivmod(a, b)
        a, b = b, r
    return [c / a[-1] for c in a]


def _peval(p, z):
    out = np.zeros_like(np.asarray(z, dtype=complex))
    for c in reversed(p):
        out = out * z + complex(c)
    return out


def _low_order(p) -> int:
    for i, c in enumerate(p):
        if c != 0:
            return i
    return len(p)


# -- meromorphic functions ---------------------------------------------------

class MeromorphicFunction:
    """Meromorphic function on a curve; see the module docstring."""

    backend = "abstract"

    def __init__(self, curve: CurveModel):
        self.curve = curve
        self._cache: dict = {}

    # subclasses implement these three
    def __call__(self, z):
        raise NotImplementedError

    def order_bound(self, point) -> int:
        raise NotImplementedError

    def _series(self, point, n: int) -> LaurentSeries:
        raise NotImplementedError

    def singular_points(self) -> list:
        return []

    def series(self, point, n: int) -> LaurentSeries:
        """``n`` coefficients from the certified order bound at ``point``."""
        point = resolve_point(self.curve, point)
        key = (_point_key(self.curve, point), )
        hit = self._cache.get(key)
        if hit is not None and len(hit) >= n:
            return LaurentSeries(hit.val, hit.coeffs[:n])
        s = self._series(point, n)
        self._cache[key] = s
        return LaurentSeries(s.val, s.coeffs[:n])

    # arithmetic
    def __add__(self, other):
        return add_functions(self, other)

    def __radd__(self, other):
        return add_functions(other, self)

    def __neg__(self):
        return scale_function(self, -1)

    def __sub__(self, other):
        return add_functions(self, scale_function(other, -1) if isinstance(other, MeromorphicFunction) else -other)

    def __rsub__(self, other):
        return add_functions(other, scale_function(self, -1))

    def __mul__(self, other):
        if isinstance(other, Number):
            return scale_function(self, other)
        return multiply_functions(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, Number):
            inv = Fraction(1) / Fraction(other) if _is_exact(other) else 1 / complex(other)
            return scale_function(self, inv)
        return NotImplemented


def _fit(s: LaurentSeries, val: int, n: int) -> LaurentSeries:
    if s.val > val:
        s = s.extended_to(val)
    if s.val < val:
        raise ValueError("series starts below the requested exponent")
    if s.prec < val + n:
        raise ValueError("series does not carry enough coefficients")
    return LaurentSeries(val, s.coeffs[:n])


class RationalFunction(MeromorphicFunction):
    """``num(z) / den(z)`` on the rational line with exact coefficients."""

    backend = "rational"

    def __init__(self, curve: CurveModel, num, den=(1,)):
        super().__init__(curve)
        num = _ptrim([_coerce(c) for c in num])
        den = _ptrim([_coerce(c) for c in den])
        if len(den) == 1 and den[0] == 0:
            raise ZeroDivisionError("zero denominator")
        if all(_is_exact(c) for c in num + den) and not (len(num) == 1 and num[0] == 0):
            g = _pgcd(num, den)
            if len(g) > 1:
                num, _ = _pdivmod(num, g)
                den, _ = _pdivmod(den, g)
        lead = den[-1]
        self.num = tuple(c / lead for c in num)
        self.den = tuple(c / lead for c in den)

    @property
    def exact(self) -> bool:
        return all(_is_exact(c) for c in self.num + self.den)

    def is_zero(self) -> bool:
        return len(self.num) == 1 and self.num[0] == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return _peval(self.num, z) / _peval(self.den, z)

    def __repr__(self):
        return f"RationalFunction(num={list(map(str, self.num))}, den={list(map(str, self.den))})"

    def _local(self, point):
        if point is INFINITY:
            n, d = list(self.num[::-1]), list(self.den[::-1])
            return n, d, (len(self.den) - 1) - (len(self.num) - 1)
        n, d = _pshift(self.num, point), _pshift(self.den, point)
        return n, d, 0

    def order_bound(self, point) -> int:
        point = resolve_point(self.curve, point)
        if self.is_zero():
            return 0
        n, d, shift = self._local(point)
        return shift + _low_order(n) - _low_order(d)

    def _series(self, point, n_terms: int) -> LaurentSeries:
        if self.is_zero():
            return LaurentSeries.constant(0, n_terms, exact=self.exact)
        n, d, shift = self._local(point)
        vn, vd = _low_order(n), _low_order(d)
        n, d = n[vn:], d[vd:]
        pad = lambda p: (list(p) + [0] * n_terms)[:n_terms]
        num_s = LaurentSeries(0, pad(n))
        den_s = LaurentSeries(0, pad(d))
        return (num_s * den_s.inverse()).shift(shift + vn - vd)

    def singular_points(self) -> list:
        pts = []
        if len(self.den) > 1:
            pts.extend(complex(r) for r in np.roots([complex(c) for c in self.den[::-1]]))
        if len(self.num) > len(self.den):
            pts.append(INFINITY)
        return pts

    def _with(self, num, den):
        return RationalFunction(self.curve, num, den)


class ConstantFunction(MeromorphicFunction):
    backend = "constant"

    def __init__(self, curve, value):
        super().__init__(curve)
        self.value = _coerce(value)

    def __call__(self, z):
        return np.full(np.shape(z), complex(self.value))

    def order_bound(self, point) -> int:
        return 0

    def _series(self, point, n):
        return LaurentSeries.constant(self.value, n)

    def __repr__(self):
        return f"ConstantFunction({self.value})"


class SigmaProduct(MeromorphicFunction):
    """``C * exp(c z) * prod sigma(z - a)^m`` with ``sum m = 0``.

    The linear exponent ``c`` is fixed by the Abel condition so that the
    product is exactly doubly periodic.
    """

    backend = "sigma-product"

    def __init__(self, curve: CurveModel, factors, normalization=1.0, abel_tol: float = 1e-8):
        super().__init__(curve)
        lat = curve.lattice
        merged = merge_divisor(curve, factors)
        self.factors = tuple((complex(lat.reduce(p)[0]), m) for p, m in merged)
        if divisor_degree(self.factors) != 0:
            raise DegreeMismatch(f"divisor degree {divisor_degree(self.factors)} is not zero")
        lam = sum(m * a for a, m in self.factors)
        ab = lat.lattice_point(lam, abel_tol)
        if ab is None:
            raise AbelConditionViolated(f"sum of zeros minus poles = {lam} is not a lattice point")
        self.linear = complex(lat.eta(*ab))
        self.normalization = complex(normalization)

    def __repr__(self):
        return f"SigmaProduct({list(self.factors)}, C={self.normalization:.6g})"

    @property
    def zeros(self):
        return [(a, m) for a, m in self.factors if m > 0]

    @property
    def poles(self):
        return [(a, -m) for a, m in self.factors if m < 0]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        lat = self.curve.lattice
        logv = self.linear * z
        for a, m in self.factors:
            logv = logv + m * lat.log_sigma(z - a)
        with np.errstate(over="ignore", invalid="ignore"):
            return self.normalization * np.exp(logv)

    def order_bound(self, point) -> int:
        point = resolve_point(self.curve, point)
        lat = self.curve.lattice
        return sum(m for a, m in self.factors if lat.congruent(point, a))

    def _series(self, point, n):
        lat = self.curve.lattice
        order = 0
        logs = LaurentSeries(0, np.zeros(n, dtype=complex))
        base = cmath.log(self.normalization) + self.linear * point
        for a, m in self.factors:
            o, s = lat.log_sigma_series(point - a, n)
            order += o * m
            logs = logs + s * m
        logs = logs + LaurentSeries(0, [base, self.linear] + [0] * max(n - 2, 0))
        return _fit(logs, 0, n).exp().shift(order)

    def singular_points(self):
        return [a for a, m in self.factors if m < 0]


class ZetaSum(MeromorphicFunction):
    """``const + sum c_i zeta(z - s_i)`` with ``sum c_i = 0``."""

    backend = "zeta-sum"

    def __init__(self, curve: CurveModel, terms, const=0.0):
        super().__init__(curve)
        terms = [(complex(c), complex(s)) for c, s in terms]
        if abs(sum(c for c, _ in terms)) > 1e-9 * max(1.0, max((abs(c) for c, _ in terms), default=1)):
            raise ValueError("zeta coefficients must sum to zero for an elliptic function")
        self.terms = tuple(terms)
        self.const = complex(const)

    def __repr__(self):
        return f"ZetaSum({list(self.terms)}, const={self.const:.6g})"

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        lat = self.curve.lattice
        out = np.full(z.shape, self.const)
        for c, s in self.terms:
            out = out + c * lat.zeta(z - s)
        return out

    def _residue_at(self, point) -> complex:
        lat = self.curve.lattice
        return sum((c for c, s in self.terms if lat.congruent(point, s)), 0j)

    def order_bound(self, point) -> int:
        point = resolve_point(self.curve, point)
        lat = self.curve.lattice
        return -1 if any(lat.congruent(point, s) for _, s in self.terms) else 0

    def _series(self, point, n):
        lat = self.curve.lattice
        val = self.order_bound(point)
        acc = LaurentSeries.constant(self.const, max(n + val, 1))
        for c, s in self.terms:
            if lat.congruent(point, s):
                acc = acc + lat.zeta_series(point - s, n) * c
            else:
                acc = acc + lat.zeta_series(point - s, max(n + val, 1)) * c
        return _fit(acc, val, n)

    def singular_points(self):
        return [s for _, s in self.terms]


class LinearCombination(MeromorphicFunction):
    backend = "combination"

    def __init__(self, curve, terms):
        super().__init__(curve)
        flat = []
        for c, f in terms:
            c = complex(c)
            if isinstance(f, LinearCombination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            else:
                flat.append((c, f))
        self.terms = tuple(flat)

    def __repr__(self):
        return f"LinearCombination({len(self.terms)} terms)"

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for c, f in self.terms:
            out = out + complex(c) * f(z)
        return out

    def order_bound(self, point) -> int:
        if not self.terms:
            return 0
        return min(f.order_bound(point) for _, f in self.terms)

    def _series(self, point, n):
        val = self.order_bound(point)
        acc = LaurentSeries(val, np.zeros(n, dtype=complex))
        for c, f in self.terms:
            k = f.order_bound(point) - val
            if k >= n:
                continue
            acc = acc + f.series(point, n - k) * c
        return _fit(acc, val, n)

    def singular_points(self):
        out = []
        for _, f in self.terms:
            out.extend(f.singular_points())
        return out


class ProductFunction(MeromorphicFunction):
    backend = "product"

    def __init__(self, curve, factors):
        super().__init__(curve)
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, ProductFunction) else [f])
        self.factors = tuple(flat)

    def __repr__(self):
        return f"ProductFunction({list(self.factors)})"

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        for f in self.factors:
            out = out * f(z)
        return out

    def order_bound(self, point) -> int:
        return sum(f.order_bound(point) for f in self.factors)

    def _series(self, point, n):
        acc = None
        for f in self.factors:
            s = f.series(point, n)
            acc = s if acc is None else acc * s
        return acc

    def singular_points(self):
        out = []
        for f in self.factors:
            out.extend(f.singular_points())
        return out


def constant_function(curve: CurveModel, value) -> MeromorphicFunction:
    if curve.genus == 0:
        return RationalFunction(curve, [value])
    return ConstantFunction(curve, value)


def scale_function(f: MeromorphicFunction, c) -> MeromorphicFunction:
    if isinstance(f, RationalFunction):
        return RationalFunction(f.curve, [x * _coerce(c) for x in f.num], f.den)
    return LinearCombination(f.curve, [(c, f)])


def add_functions(f, g) -> MeromorphicFunction:
    if isinstance(f, Number):
        f = constant_function(g.curve, f)
    if isinstance(g, Number):
        g = constant_function(f.curve, g)
    if isinstance(f, RationalFunction) and isinstance(g, RationalFunction):
        num = _padd(_pmul(f.num, g.den), _pmul(g.num, f.den))
        return RationalFunction(f.curve, num, _pmul(f.den, g.den))
    return LinearCombination(f.curve, [(1, f), (1, g)])


def multiply_functions(f, g) -> MeromorphicFunction:
    if isinstance(f, RationalFunction) and isinstance(g, RationalFunction):
        return RationalFunction(f.curve, _pmul(f.num, g.num), _pmul(f.den, g.den))
    return ProductFunction(f.curve, [f, g])


def linear_combination(curve, coeffs, functions) -> MeromorphicFunction:
    """``sum c_i f_i``; stays exact at genus 0."""
    pairs = [(c, f) for c, f in zip(coeffs, functions) if c != 0]
    if curve.genus == 0:
        out = constant_function(curve, 0)
        for c, f in pairs:
            out = out + scale_function(f, c)
        return out
    if not pairs:
        return ConstantFunction(curve, 0)
    return LinearCombination(curve, pairs)


def rational_monomial(curve: CurveModel, k: int) -> RationalFunction:
    if k >= 0:
        return RationalFunction(curve, [0] * k + [1])
    return RationalFunction(curve, [1], [0] * (-k) + [1])


def sigma(curve: CurveModel, z):
    _require_torus(curve)
    return curve.lattice.sigma(z)


def zeta(curve: CurveModel, z):
    _require_torus(curve)
    return curve.lattice.zeta(z)


def wp(curve: CurveModel, z):
    _require_torus(curve)
    return curve.lattice.wp(z)


def _require_torus(curve):
    if curve.genus != 1:
        raise UnsupportedGenusOperation("Weierstrass functions need a genus-one curve")


def check_double_periodicity(f: MeromorphicFunction, n_points: int = 20, seed: int = 7) -> float:
    """Largest relative jump ``|f(z+w) - f(z)|`` over sample points and both periods."""
    lat = f.curve.lattice
    avoid = f.singular_points()
    pts = np.array(sample_points(lat, n_points, seed=seed, avoid=avoid, min_dist=0.08))
    v = f(pts)
    worst = 0.0
    for w in (f.curve.omega1, f.curve.omega2):
        d = np.abs(f(pts + w) - v) / np.maximum(1.0, np.abs(v))
        worst = max(worst, float(np.max(d)))
    return worst


def function_from_divisor(curve: CurveModel, zeros, poles, normalization=1) -> MeromorphicFunction:
    """Function with the given zeros and poles times ``normalization``.

    At genus 0 the function is ``normalization * prod (z - a)^m`` over finite
    points; points at infinity only enter the degree count.
    """
    zeros = [(resolve_point(curve, p), int(m)) for p, m in zeros]
    poles = [(resolve_point(curve, p), int(m)) for p, m in poles]
    if divisor_degree(zeros) != divisor_degree(poles):
        raise DegreeMismatch(f"{divisor_degree(zeros)} zeros against {divisor_degree(poles)} poles")
    if curve.genus == 0:
        num, den = [Fraction(1)], [Fraction(1)]
        for p, m in zeros:
            if p is not INFINITY:
                num = _pmul(num, _ppow([-_coerce(p), 1], m))
        for p, m in poles:
            if p is not INFINITY:
                den = _pmul(den, _ppow([-_coerce(p), 1], m))
        return RationalFunction(curve, [c * _coerce(normalization) for c in num], den)
    f = SigmaProduct(curve, zeros + [(p, -m) for p, m in poles], normalization)
    jump = check_double_periodicity(f)
    if jump > max(curve.tolerance, 1e-9) * 10:
        raise AbelConditionViolated(f"constructed function is not elliptic (jump {jump:.2e})")
    return f


def _ppow(p, m):
    out = [Fraction(1)]
    for _ in range(m):
        out = _pmul(out, p)
    return out


# -- local expansions -------------------------------------------------------

@dataclass(frozen=True)
class LaurentExpansion:
    point: object
    leading_order: int
    coefficients: tuple = field(default_factory=tuple)

    def coefficient(self, k: int):
        i = k - self.leading_order
        if i < 0:
            return 0
        return self.coefficients[i]

    def to_series(self) -> LaurentSeries:
        return LaurentSeries(self.leading_order, list(self.coefficients))

    def evaluate(self, t):
        t = np.asarray(t, dtype=complex)
        out = np.zeros_like(t)
        for k, c in enumerate(self.coefficients):
            out = out + complex(c) * t ** (self.leading_order + k)
        return out


def local_parameter_point(curve: CurveModel, point, t):
    """Curve coordinate ``z`` of the point with local parameter ``t``."""
    point = resolve_point(curve, point)
    if point is INFINITY:
        return 1.0 / np.asarray(t, dtype=complex)
    return complex(point) + np.asarray(t, dtype=complex)


def local_expansion(f: MeromorphicFunction, point, order: int, method: str = "series") -> LaurentExpansion:
    """First ``order`` Laurent coefficients of ``f`` from its true leading order."""
    curve = f.curve
    if order > curve.expansion_order:
        raise ExpansionOrderExceeded(f"order {order} exceeds the cached {curve.expansion_order}")
    point = resolve_point(curve, point)
    slack = 4
    while True:
        n = order + slack
        s = f.series(point, n) if method == "series" else cauchy_expansion(f, point, n)
        if s.exact:
            stripped = s.strip()
        else:
            scale = float(np.max(np.abs(s.coeffs))) if len(s.coeffs) else 0.0
            stripped = s.strip(curve.tolerance * max(scale, 1e-300))
        if len(stripped) >= order or slack > 64:
            break
        slack *= 2
    if len(stripped) < order:
        raise ExpansionOrderExceeded("function vanishes to the working precision")
    return LaurentExpansion(point, stripped.val, tuple(stripped.coeffs[:order]))


def cauchy_expansion(f: MeromorphicFunction, point, n: int, radius: float | None = None,
                     samples: int | None = None) -> LaurentSeries:
    """Coefficients by a discrete Cauchy integral on a circle around ``point``.

    Independent of the analytic series machinery; used as a cross-check.
    The first exponent is ``f.order_bound(point)``.
    """
    curve = f.curve
    point = resolve_point(curve, point)
    val = f.order_bound(point)
    if radius is None:
        radius = _safe_radius(f, point)
    m = samples or max(8 * n, 128)
    theta = 2 * np.pi * np.arange(m) / m
    t = radius * np.exp(1j * theta)
    vals = f(local_parameter_point(curve, point, t))
    coeffs = np.fft.fft(vals) / m
    ks = np.arange(val, val + n)
    out = coeffs[ks % m] / radius ** ks
    return LaurentSeries(val, out)


def _safe_radius(f, point) -> float:
    curve = f.curve
    if curve.genus == 0:
        others = [p for p in f.singular_points() if p is not INFINITY and point is not INFINITY
                  and abs(complex(p) - complex(point)) > 1e-12]
        if point is INFINITY:
            finite = [abs(complex(p)) for p in f.singular_points() if p is not INFINITY]
            return 0.25 / max(finite) if finite else 0.5
        d = min((abs(complex(p) - complex(point)) for p in others), default=1.0)
        return 0.25 * d
    lat = curve.lattice
    dists = [lat.distance(point, p) for p in f.singular_points()]
    dists = [d for d in dists if d > 1e-9 * lat.scale]
    # stay inside the cell so translates of the point itself are excluded
    d = min(dists + [lat.scale])
    return 0.25 * d


# -- Riemann-Roch bases ----------------------------------------------------

def evaluation_matrix(functions, points) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    return np.array([f(pts) for f in functions]).T


def rr_space_basis(curve: CurveModel, divisor, seed: int = 11) -> list:
    """Basis of ``L(D) = {f : (f) + D >= 0}``.

    ``divisor`` lists ``(point, multiplicity)`` pairs; positive multiplicities
    allow poles, negative ones force zeros.
    """
    divisor = merge_divisor(curve, divisor)
    deg = divisor_degree(divisor)
    if curve.genus == 0:
        if deg < 0:
            return []
        zero_part, pole_part = [Fraction(1)], [Fraction(1)]
        for p, m in divisor:
            if p is INFINITY:
                continue
            lin = [-_coerce(p), 1]
            if m > 0:
                pole_part = _pmul(pole_part, _ppow(lin, m))
            else:
                zero_part = _pmul(zero_part, _ppow(lin, -m))
        return [RationalFunction(curve, [0] * i + list(zero_part), pole_part) for i in range(deg + 1)]

    lat = curve.lattice
    if deg < 0:
        return []
    if deg == 0:
        lam = sum(m * p for p, m in divisor)
        if not divisor:
            return [ConstantFunction(curve, 1)]
        if lat.lattice_point(lam, 1e-8) is None:
            return []
        return [SigmaProduct(curve, [(p, -m) for p, m in divisor])]

    support = [p for p, _ in divisor]
    target = sum(m * p for p, m in divisor)
    for attempt in range(20):
        aux = sample_points(lat, deg - 1, seed=seed + attempt, avoid=support, min_dist=0.1)
        last = complex(lat.reduce(target - sum(aux))[0])
        if all(lat.distance(last, s) > 0.05 * lat.scale for s in aux):
            break
    else:
        raise SpecialDivisorUnresolved("could not place auxiliary points generically")
    aux.append(last)
    E = SigmaProduct(curve, [(p, -m) for p, m in divisor] + [(s, 1) for s in aux])
    scale = _typical_size(E)
    E = SigmaProduct(curve, [(p, -m) for p, m in divisor] + [(s, 1) for s in aux], 1.0 / scale)
    basis = [E]
    for s in aux[:-1]:
        h = ZetaSum(curve, [(1, s), (-1, last)])
        basis.append(ProductFunction(curve, [E, h]))
    pts = sample_points(lat, len(basis) + 5, seed=seed + 101, avoid=support + aux, min_dist=0.1)
    nullity, _ = numeric_nullity(evaluation_matrix(basis, pts), 1e-10)
    if nullity:
        raise SpecialDivisorUnresolved(f"basis for degree {deg} divisor is rank deficient")
    return basis


def _typical_size(f) -> float:
    lat = f.curve.lattice
    pts = sample_points(lat, 6, seed=3, avoid=f.singular_points() + [a for a, _ in f.zeros], min_dist=0.15)
    v = np.abs(f(np.array(pts)))
    v = v[np.isfinite(v) & (v > 0)]
    return float(np.exp(np.mean(np.log(v)))) if len(v) else 1.0
