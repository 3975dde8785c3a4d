"""Krichever-Novikov basis ``A_m`` of functions regular outside ``P+`` and ``P-``.

``A_m`` has order ``m`` at ``P+`` with leading coefficient 1 and a pole of
order at most ``m - eps_minus(m)`` at ``P-``.  At genus 0 this is ``z^m``.
At genus 1 the element is found in the Riemann-Roch space of
``-m P+ + (m - eps_minus) P-``; when that space is two-dimensional the extra
freedom is removed by killing the next Taylor coefficient at ``P+``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .curve_models import (
    CurveModel,
    MeromorphicFunction,
    linear_combination,
    rational_monomial,
    rr_space_basis,
)
from .errors import SpecialConfigurationFailure, WindowTooSmall
from .linalg import full_pivot_solve
from .series import LaurentSeries
from .weierstrass import sample_points


def eps_minus(genus: int, m: int) -> int:
    """Shift of the pole order of ``A_m`` at ``P-``."""
    if genus == 0:
        return 0
    if m > 0 or m < -genus:
        return -genus
    return -genus - 1


def band_width(genus: int, m: int) -> int:
    """Number of extra degrees ``A_m`` may push a basis element up by."""
    return -eps_minus(genus, m)


@dataclass(frozen=True)
class ScalarBasisElement:
    index: int
    function: MeromorphicFunction
    eps_minus: int
    alpha_plus: object = 1
    alpha_minus: object = 0

    def series(self, point, n: int) -> LaurentSeries:
        return self.function.series(point, n)

    def __call__(self, z):
        return self.function(z)


def _coefficient(f: MeromorphicFunction, point, k: int):
    lo = f.order_bound(point)
    if k < lo:
        return 0
    return f.series(point, k - lo + 1).coefficient(k)


def kn_scalar_element(curve: CurveModel, m: int) -> ScalarBasisElement:
    m = int(m)
    eps = eps_minus(curve.genus, m)
    if curve.genus == 0:
        return ScalarBasisElement(m, rational_monomial(curve, m), eps, Fraction(1), Fraction(1))
    basis = rr_space_basis(curve, [(curve.p_plus, -m), (curve.p_minus, m - eps)])
    r = len(basis)
    if r == 0:
        raise SpecialConfigurationFailure(f"no function available for A_{m}")
    M = np.array([[complex(_coefficient(f, "+", m + k)) for f in basis] for k in range(r)])
    rhs = np.zeros(r, dtype=complex)
    rhs[0] = 1
    try:
        x, res = full_pivot_solve(M, rhs, rank_tol=1e-10)
    except np.linalg.LinAlgError as exc:
        raise SpecialConfigurationFailure(f"normalization of A_{m} is singular: {exc}") from None
    f = linear_combination(curve, list(x), basis)
    alpha_minus = complex(_coefficient(f, "-", -m + eps))
    return ScalarBasisElement(m, f, eps, 1.0, alpha_minus)


class KNScalarBasis:
    """Memoized family ``m -> A_m`` for one curve."""

    def __init__(self, curve: CurveModel):
        self.curve = curve
        self._memo: dict[int, ScalarBasisElement] = {}
        self._lock = threading.Lock()

    def __getitem__(self, m: int) -> ScalarBasisElement:
        hit = self._memo.get(m)
        if hit is None:
            hit = kn_scalar_element(self.curve, m)
            with self._lock:
                hit = self._memo.setdefault(m, hit)
        return hit

    def function(self, m: int) -> MeromorphicFunction:
        return self[m].function


_BASES: dict[int, KNScalarBasis] = {}


def scalar_basis(curve: CurveModel) -> KNScalarBasis:
    key = id(curve)
    b = _BASES.get(key)
    if b is None or b.curve is not curve:
        b = _BASES[key] = KNScalarBasis(curve)
    return b


def expand_in_basis(curve: CurveModel, F: MeromorphicFunction, lo: int, hi: int, basis=None,
                    tol: float = 1e-7, n_check: int = 12):
    """Write ``F`` as ``sum_{h=lo}^{hi} c_h A_h`` by triangular matching at ``P+``.

    Returns ``(coeffs, residual)`` where ``residual`` is the largest relative
    size of ``F - sum c_h A_h`` over sample points and its ``P-`` expansion.
    """
    basis = basis or scalar_basis(curve)
    if curve.genus == 0:
        v = F.order_bound("+")
        s = F.series("+", max(hi - v + 1, 1))
        coeffs = {}
        for h in range(min(v, lo), hi + 1):
            c = s.coefficient(h) if h < s.prec else 0
            if c != 0:
                coeffs[h] = c
        bad = [h for h in coeffs if not lo <= h <= hi]
        resid = F - linear_combination(curve, [coeffs[h] for h in coeffs],
                                       [basis.function(h) for h in coeffs])
        if bad or not resid.is_zero():
            return coeffs, float("inf")
        return coeffs, 0.0
    lower = F.order_bound("+")
    if lower < lo:
        s = F.series("+", lo - lower)
        scale = max(np.max(np.abs(s.coeffs)), 1e-300)
        if np.max(np.abs(s.coeffs)) > tol * max(1.0, scale):
            return {}, float("inf")
    s = F.series("+", hi - lower + 1)
    coeffs: dict[int, complex] = {}
    # triangular solve against the unit-leading A_h
    work = {k: complex(s.coefficient(k)) for k in range(lo, hi + 1)}
    for h in range(lo, hi + 1):
        c = work[h]
        coeffs[h] = c
        if c == 0:
            continue
        sh = basis.function(h).series("+", hi - h + 1)
        for k in range(h, hi + 1):
            work[k] -= c * complex(sh.coefficient(k))
    combo = linear_combination(curve, [coeffs[h] for h in coeffs], [basis.function(h) for h in coeffs])
    resid = residual_size(curve, F, combo, n_check)
    return coeffs, resid


def residual_size(curve, F, G, n_check: int = 12, seed: int = 5) -> float:
    """Relative size of ``F - G`` at sample points and in the ``P-`` expansion."""
    lat = curve.lattice
    avoid = [curve.p_plus, curve.p_minus] + F.singular_points() + G.singular_points()
    pts = np.array(sample_points(lat, n_check, seed=seed, avoid=avoid, min_dist=0.05))
    fv, gv = F(pts), G(pts)
    worst = float(np.max(np.abs(fv - gv)) / max(np.max(np.abs(fv)), 1.0))
    lo = min(F.order_bound("-"), G.order_bound("-"))
    if lo < 0:
        fs, gs = F.series("-", -lo + 1), G.series("-", -lo + 1)
        d = np.array([complex(fs.coefficient(k)) - complex(gs.coefficient(k)) for k in range(lo, 1)])
        ref = max(max(abs(complex(fs.coefficient(k))) for k in range(lo, 1)), 1.0)
        worst = max(worst, float(np.max(np.abs(d))) / ref)
    return worst


def product_reach(genus: int) -> int:
    """Upper shift that always suffices for ``A_m A_n``; products touching the
    special range ``-g <= m <= 0`` can need ``g + 2`` at genus 1."""
    return 0 if genus == 0 else genus + 2


def scalar_structure_constants(curve: CurveModel, m: int, n: int, window=None,
                               tol: float = 1e-7) -> dict:
    """Coefficients ``c_h`` with ``A_m A_n = sum_h c_h A_h`` over ``window``."""
    basis = scalar_basis(curve)
    if window is None:
        window = (m + n, m + n + product_reach(curve.genus))
    lo, hi = window
    if curve.genus == 0:
        if lo <= m + n <= hi:
            return {m + n: Fraction(1)}
        raise WindowTooSmall(f"window {window} misses degree {m + n}")
    F = basis.function(m) * basis.function(n)
    coeffs, resid = expand_in_basis(curve, F, lo, hi, basis)
    if resid > tol:
        raise WindowTooSmall(f"residual {resid:.2e} after matching A_{m} A_{n} on {window}")
    return coeffs


def residue_pairing(A: MeromorphicFunction, B: MeromorphicFunction, point="+"):
    """``res_point(A dB)`` from the local Laurent coefficients."""
    a, b = A.order_bound(point), B.order_bound(point)
    n = -a - b + 1
    if n <= 0:
        return 0 if B.series(point, 1).exact else 0j
    prod = A.series(point, n) * B.series(point, n + 1).derivative()
    return prod.coefficient(-1)


def trace_form(x, y):
    return np.trace(np.asarray(x) @ np.asarray(y))


def cocycle_gamma(x, A: MeromorphicFunction, y, B: MeromorphicFunction, form=trace_form):
    """Central term of ``[x (x) A, y (x) B]``: ``(x, y) res_{P+}(B dA)``.

    With this orientation ``gamma(x z^n, y z^m) = n delta_{n+m,0} (x, y)``.
    """
    return form(x, y) * residue_pairing(B, A)


@dataclass
class QuasigradingReport:
    lower_shift: int
    upper_shift: int
    table: dict = field(default_factory=dict)
    ok: bool = True

    def as_dict(self):
        return {"R": self.lower_shift, "S": self.upper_shift, "ok": self.ok,
                "table": {f"{m},{n}": sorted(hs) for (m, n), hs in self.table.items()}}


def verify_quasigrading(products: dict, threshold: float = 1e-8) -> QuasigradingReport:
    """Tightest band ``[m+n-R, m+n+S]`` containing every nonzero product term.

    ``products`` maps ``(m, n)`` to ``{h: c_h}``.
    """
    R = S = 0
    table = {}
    ok = True
    for (m, n), coeffs in products.items():
        hs = [h for h, c in coeffs.items() if abs(complex(c)) > threshold]
        if coeffs and not hs and any(c != 0 for c in coeffs.values()):
            ok = False
        table[(m, n)] = hs
        for h in hs:
            R = max(R, (m + n) - h)
            S = max(S, h - (m + n))
    return QuasigradingReport(R, S, table, ok)


def sample_products(curve: CurveModel, m_range, n_range, window_pad: int = 0) -> dict:
    out = {}
    for m in m_range:
        for n in n_range:
            w = (m + n - window_pad, m + n + product_reach(curve.genus) + window_pad)
            out[(m, n)] = scalar_structure_constants(curve, m, n, w)
    return out
