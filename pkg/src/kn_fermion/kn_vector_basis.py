"""Vector-function basis ``psi_{n,j}`` and the structure constants of the ``A_m`` action.

Column ``j`` of ``Psi_n`` is an ``l``-vector of functions, each in the
Riemann-Roch space of ``D + n P- - n P+`` (``D`` the degeneration divisor),
whose residue vectors satisfy the Tyurin constraints.  The remaining
``l``-dimensional freedom is fixed by a triangular normalization: the
``z+^n`` coefficient matrix at ``P+`` is upper unitriangular and the
``z-^(-n)`` coefficient matrix at ``P-`` is lower triangular.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .curve_models import (
    CurveModel,
    constant_function,
    linear_combination,
    rational_monomial,
    rr_space_basis,
)
from .errors import IndexOutOfRange, NonGenericData, ResidualTooLarge
from .framed_bundles import FramedBundleData, KNVectorFunction, tyurin_defects
from .kn_scalar_basis import band_width, residual_size, scalar_basis
from .linalg import full_pivot_solve, nullspace_exact, numeric_nullity, solve_exact


# -- index map ----------------------------------------------------------------

def index_map(n: int, j: int, i: int, l: int) -> int:
    """Position of the symbol ``psi^i_{n,j}``; ``(0, 0, l)`` sits at ``-1``."""
    if not (0 <= j < l and 1 <= i <= l):
        raise IndexOutOfRange(f"need 0 <= j < {l} and 1 <= i <= {l}, got j={j}, i={i}")
    return l * l * n - l * j + i - l - 1


def index_inverse(N: int, l: int) -> tuple[int, int, int]:
    if l < 1:
        raise IndexOutOfRange("rank must be positive")
    u = N + l
    n = (u + l * l - l) // (l * l)
    rest = u - l * l * n + l * (l - 1)
    return n, l - 1 - rest // l, rest % l + 1


def bag_of(N: int, l: int) -> int:
    """Bags are the blocks ``[l*b, l*b + l - 1]`` sharing ``(n, j)``."""
    return N // l


# -- Psi_n ----------------------------------------------------------------

@dataclass
class PsiMatrix:
    n: int
    columns: list
    raw_nullity: int
    normalized_nullity: int
    singular_values: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    residual: float = 0.0

    @property
    def rank(self) -> int:
        return len(self.columns)

    def entry(self, i: int, j: int):
        return self.columns[j].components[i]

    def xi_plus(self, s: int = 0) -> np.ndarray:
        return self._xi("+", self.n + s)

    def xi_minus(self, s: int = 0) -> np.ndarray:
        return self._xi("-", -self.n + s)

    def _xi(self, point, k):
        l = self.rank
        out = np.empty((l, l), dtype=object)
        for j, col in enumerate(self.columns):
            out[:, j] = col.series(point, k, k)[:, 0]
        if self.columns[0].curve.genus == 1:
            return out.astype(complex)
        return out

    def __call__(self, z) -> np.ndarray:
        """Matrix values, shape ``z.shape + (l, l)`` (rows are components)."""
        return np.stack([c(z) for c in self.columns], axis=-1)

    def det(self, z):
        return np.linalg.det(self(z))


def _closed_form_genus0(curve, bundle, n):
    l = bundle.rank
    cols = []
    for j in range(l):
        comps = [rational_monomial(curve, n) if i == j else constant_function(curve, 0) for i in range(l)]
        cols.append(KNVectorFunction(comps, bundle))
    return PsiMatrix(n, cols, raw_nullity=l, normalized_nullity=0)


def _coeff(f, point, k):
    lo = f.order_bound(point)
    if k < lo:
        return 0
    return f.series(point, k - lo + 1).coefficient(k)


def psi_linear_system(curve: CurveModel, bundle: FramedBundleData, n: int):
    """Ansatz basis, Tyurin rows and normalization data for ``Psi_n``.

    Unknown ``x[i*r + a]`` is the coefficient of basis function ``a`` in
    component ``i``.
    """
    l = bundle.rank
    divisor = [(p, 1) for p in bundle.points] + [(curve.p_minus, n), (curve.p_plus, -n)]
    basis = rr_space_basis(curve, divisor)
    r = len(basis)
    rows = []
    for p, alpha in zip(bundle.points, bundle.alphas):
        res = [complex(_coeff(b, p, -1)) for b in basis]
        i0 = next(i for i, a in enumerate(alpha) if abs(a) > 0)
        for k in range(l):
            if k == i0:
                continue
            row = np.zeros(l * r, dtype=complex)
            row[k * r:(k + 1) * r] += np.array(res) * alpha[i0]
            row[i0 * r:(i0 + 1) * r] -= np.array(res) * alpha[k]
            rows.append(row)
    plus = [_coeff(b, "+", n) for b in basis]
    minus = [_coeff(b, "-", -n) for b in basis]
    return basis, rows, plus, minus


def _normalization_rows(l, r, j, plus, minus, exact):
    zero = Fraction(0) if exact else 0j
    rows, rhs = [], []
    for i in range(l):
        row = [zero] * (l * r)
        src = plus if i >= j else minus
        for a in range(r):
            row[i * r + a] = src[a]
        rows.append(row)
        rhs.append((Fraction(1) if exact else 1.0) if i == j else zero)
    return rows, rhs


def build_psi_matrix(curve: CurveModel, bundle: FramedBundleData, n: int, method: str = "auto",
                     rel_tol: float = 1e-8) -> PsiMatrix:
    """Solve for ``Psi_n``; genus 0 uses the closed form ``z^n Id`` unless ``method='solve'``."""
    l = bundle.rank
    if curve.genus == 0 and method != "solve":
        return _closed_form_genus0(curve, bundle, n)
    basis, trows, plus, minus = psi_linear_system(curve, bundle, n)
    r = len(basis)
    exact = curve.genus == 0
    cols, coeffs = [], []
    if exact:
        raw_nullity = len(nullspace_exact([list(map(Fraction, t)) for t in trows], l * r))
        sv = None
        norm_nullity = 0
        for j in range(l):
            nrows, rhs = _normalization_rows(l, r, j, plus, minus, True)
            try:
                x = solve_exact(nrows, rhs)
            except np.linalg.LinAlgError as exc:
                raise NonGenericData(f"Psi_{n} normalization is singular: {exc}") from None
            coeffs.append(x)
        resid = 0.0
    else:
        T = np.array(trows, dtype=complex).reshape(len(trows), l * r)
        raw_nullity, sv = numeric_nullity(T, rel_tol) if len(trows) else (l * r, np.zeros(0))
        norm_nullity = 0
        resid = 0.0
        for j in range(l):
            nrows, rhs = _normalization_rows(l, r, j, plus, minus, False)
            full = np.vstack([T, np.array(nrows, dtype=complex)]) if len(trows) else np.array(nrows)
            b = np.concatenate([np.zeros(len(trows), dtype=complex), np.array(rhs, dtype=complex)])
            nul, _ = numeric_nullity(full, rel_tol)
            norm_nullity = max(norm_nullity, nul)
            if nul:
                raise NonGenericData(f"Psi_{n} column {j}: normalized system has nullity {nul}")
            x, res = full_pivot_solve(full, b)
            resid = max(resid, res)
            coeffs.append(x)
    for j in range(l):
        x = coeffs[j]
        comps = [linear_combination(curve, list(x[i * r:(i + 1) * r]), basis) for i in range(l)]
        cols.append(KNVectorFunction(comps, bundle))
    return PsiMatrix(n, cols, raw_nullity, norm_nullity, sv, np.array(coeffs, dtype=object if exact else complex),
                     resid)


def psi_diagnostics(psi: PsiMatrix, bundle: FramedBundleData) -> dict:
    defects = [max(tyurin_defects(c, bundle), default=0.0) for c in psi.columns]
    return {"n": psi.n, "raw_nullity": psi.raw_nullity, "normalized_nullity": psi.normalized_nullity,
            "tyurin_defect": max(defects, default=0.0), "solve_residual": psi.residual}


class KNVectorBasis:
    """Memoized ``Psi_n`` and action constants for a curve and a bundle."""

    def __init__(self, curve: CurveModel, bundle: FramedBundleData, method: str = "auto"):
        self.curve = curve
        self.bundle = bundle
        self.method = method
        self._psi: dict[int, PsiMatrix] = {}
        self._act: dict[tuple, dict] = {}
        self._lock = threading.Lock()

    @property
    def rank(self) -> int:
        return self.bundle.rank

    def psi(self, n: int) -> PsiMatrix:
        hit = self._psi.get(n)
        if hit is None:
            hit = build_psi_matrix(self.curve, self.bundle, n, self.method)
            with self._lock:
                hit = self._psi.setdefault(n, hit)
        return hit

    def action(self, m: int, n: int, widen: int = 1, tol: float = 1e-6) -> dict:
        key = (m, n, widen)
        hit = self._act.get(key)
        if hit is None:
            hit = _action_slice(self, m, n, widen, tol)
            with self._lock:
                hit = self._act.setdefault(key, hit)
        return hit


@dataclass
class ActionConstants:
    """Sparse ``(m, n, j, k, j') -> C`` with the band width of each ``m``."""

    rank: int
    genus: int
    table: dict = field(default_factory=dict)

    def gbar(self, m: int) -> int:
        return band_width(self.genus, m)

    def get(self, m, n, j, k, jp):
        return self.table.get((m, n, j, k, jp), 0)

    def update(self, other: "ActionConstants"):
        self.table.update(other.table)
        self.__dict__.pop("_index", None)

    def slice(self, m: int, n: int) -> dict | None:
        """``{(j, k, j'): C}`` for one ``(m, n)``, or ``None`` when absent."""
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {}
            for (mm, nn, j, k, jp), c in self.table.items():
                idx.setdefault((mm, nn), {})[(j, k, jp)] = c
            self.__dict__["_index"] = idx
        return idx.get((m, n))

    def band_violations(self, threshold: float = 1e-8) -> list:
        bad = []
        for (m, n, j, k, jp), c in self.table.items():
            if abs(complex(c)) > threshold and not (m + n <= k <= m + n + self.gbar(m)):
                bad.append((m, n, j, k, jp, c))
        return bad

    def nonzero(self, threshold: float = 0.0):
        return {key: c for key, c in self.table.items() if abs(complex(c)) > threshold}


def _solve_unit_upper(X, v):
    l = len(v)
    c = [0] * l
    for jp in range(l - 1, -1, -1):
        acc = v[jp]
        for q in range(jp + 1, l):
            acc = acc - X[jp][q] * c[q]
        c[jp] = acc / X[jp][jp]
    return c


def _action_slice(vb: KNVectorBasis, m: int, n: int, widen: int, tol: float) -> dict:
    curve = vb.curve
    l = vb.rank
    exact = curve.genus == 0
    A = scalar_basis(curve).function(m)
    lo = m + n - widen
    hi = m + n + band_width(curve.genus, m) + widen
    psi_n = vb.psi(n)
    out = {}
    for j in range(l):
        F = [A * comp for comp in psi_n.columns[j].components]
        work = np.array([[_coeff(f, "+", k) for k in range(lo, hi + 1)] for f in F],
                        dtype=object if exact else complex)
        terms = []
        for k in range(lo, hi + 1):
            pk = vb.psi(k)
            X = pk.xi_plus(0)
            c = _solve_unit_upper(X, list(work[:, k - lo]))
            for jp in range(l):
                out[(j, k, jp)] = c[jp]
                if c[jp] == 0:
                    continue
                terms.append((c[jp], pk.columns[jp]))
                coeffs = pk.columns[jp].series("+", k, hi)
                work[:, k - lo:] = work[:, k - lo:] - c[jp] * coeffs
        # residual F - sum C psi must vanish identically
        for i in range(l):
            G = linear_combination(curve, [c for c, _ in terms], [col.components[i] for _, col in terms])
            if exact:
                if not (F[i] - G).is_zero():
                    raise ResidualTooLarge(f"A_{m} psi_{n},{j} is not spanned on [{lo}, {hi}]")
            else:
                r = residual_size(curve, F[i], G)
                if r > tol:
                    raise ResidualTooLarge(f"A_{m} psi_{n},{j} component {i}: residual {r:.2e}")
    return out


_VBASES: dict = {}


def vector_basis(curve: CurveModel, bundle: FramedBundleData, method: str = "auto") -> KNVectorBasis:
    key = (id(curve), bundle, method)
    vb = _VBASES.get(key)
    if vb is None or vb.curve is not curve:
        vb = _VBASES[key] = KNVectorBasis(curve, bundle, method)
    return vb


def action_structure_constants(curve: CurveModel, bundle: FramedBundleData, m: int, n: int,
                               widen: int = 1, tol: float = 1e-6, basis: KNVectorBasis | None = None
                               ) -> ActionConstants:
    """Constants ``C^{k,j'}_{m,n,j}`` over the widened window ``[m+n-w, m+n+gbar+w]``."""
    vb = basis or vector_basis(curve, bundle)
    sl = vb.action(m, n, widen, tol)
    table = {(m, n, j, k, jp): c for (j, k, jp), c in sl.items()}
    return ActionConstants(bundle.rank, curve.genus, table)


def action_table(curve, bundle, m_range, n_range, widen: int = 1, basis=None) -> ActionConstants:
    out = ActionConstants(bundle.rank, curve.genus)
    for m in m_range:
        for n in n_range:
            out.update(action_structure_constants(curve, bundle, m, n, widen, basis=basis))
    return out


def _encode_scalar(c):
    if isinstance(c, (int, Fraction)):
        return str(Fraction(c))
    c = complex(c)
    return [float(c.real), float(c.imag)]


def _decode_scalar(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return v


def constants_to_dict(table: ActionConstants) -> dict:
    """Exact constants become ``"p/q"`` strings, numeric ones ``[re, im]`` pairs."""
    rows = [{"m": m, "n": n, "j": j, "k": k, "jp": jp, "value": _encode_scalar(c)}
            for (m, n, j, k, jp), c in sorted(table.table.items())]
    return {"rank": table.rank, "genus": table.genus, "entries": rows}


def constants_from_dict(doc: dict) -> ActionConstants:
    out = ActionConstants(int(doc["rank"]), int(doc["genus"]))
    for r in doc["entries"]:
        out.table[(int(r["m"]), int(r["n"]), int(r["j"]), int(r["k"]), int(r["jp"]))] = _decode_scalar(r["value"])
    return out
