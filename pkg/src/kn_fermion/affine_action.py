"""Affine algebra elements, representations of the finite part, and banded operators.

Symbols ``psi^i_{n,j}`` are flattened to integers ``N`` by
:func:`~kn_fermion.kn_vector_basis.index_map`.  The element ``x (x) A_m``
acts on them through the structure constants ``C^{k,j'}_{m,n,j}`` tensored
with ``tau(x)`` and is represented by a :class:`BandedOperator`: a column
rule ``N -> [(N', c), ...]`` together with a certified band
``lo <= N' - N <= hi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import RankMismatch, WindowTooSmall
from .kn_scalar_basis import band_width, cocycle_gamma, product_reach, scalar_basis, scalar_structure_constants
from .kn_vector_basis import ActionConstants, KNVectorBasis, index_inverse, index_map
from .linalg import nullspace_exact, numeric_nullity


def _is_exact_array(a) -> bool:
    a = np.asarray(a)
    return a.dtype == object and all(isinstance(v, (int, Fraction)) for v in a.ravel())


def exact_matrix(rows) -> np.ndarray:
    return np.array([[Fraction(v) for v in r] for r in rows], dtype=object)


# -- Lie algebra and representations -----------------------------------------

@dataclass
class LieAlgebra:
    """Matrix Lie algebra given by a basis of its defining representation."""

    name: str
    basis: dict

    def bracket(self, x, y):
        x, y = np.asarray(x), np.asarray(y)
        return x @ y - y @ x

    def form(self, x, y):
        """Trace form in the defining representation."""
        return np.trace(np.asarray(x) @ np.asarray(y))

    def coordinates(self, x) -> dict:
        names = list(self.basis)
        A = [[self.basis[b][r][c] for b in names] for r in range(len(x)) for c in range(len(x))]
        rhs = [np.asarray(x)[r][c] for r in range(len(x)) for c in range(len(x))]
        if _is_exact_array(np.asarray(x)) and all(_is_exact_array(self.basis[b]) for b in names):
            aug = [list(row) + [v] for row, v in zip(A, rhs)]
            from .linalg import rref
            R, piv = rref(aug)
            if len(names) in piv:
                raise ValueError("element is not in the algebra")
            sol = {names[p]: R[i][-1] for i, p in enumerate(piv)}
            return {b: sol.get(b, Fraction(0)) for b in names}
        sol, *_ = np.linalg.lstsq(np.array(A, dtype=complex), np.array(rhs, dtype=complex), rcond=None)
        return dict(zip(names, sol))


def sl2() -> LieAlgebra:
    e = exact_matrix([[0, 1], [0, 0]])
    f = exact_matrix([[0, 0], [1, 0]])
    h = exact_matrix([[1, 0], [0, -1]])
    return LieAlgebra("sl2", {"e": e, "f": f, "h": h})


class GRepresentation:
    """``tau``: generator matrices for each basis element of the algebra."""

    def __init__(self, algebra: LieAlgebra, matrices: dict, irreducible: bool | None = None):
        self.algebra = algebra
        self.matrices = {k: np.asarray(v) for k, v in matrices.items()}
        self.dim = next(iter(self.matrices.values())).shape[0]
        self.irreducible = irreducible

    def __call__(self, x) -> np.ndarray:
        if isinstance(x, str):
            return self.matrices[x]
        coords = self.algebra.coordinates(x)
        out = None
        for b, c in coords.items():
            if c == 0:
                continue
            term = self.matrices[b] * c
            out = term if out is None else out + term
        if out is None:
            out = self.matrices[next(iter(self.matrices))] * 0
        return out

    @property
    def exact(self) -> bool:
        return all(_is_exact_array(m) for m in self.matrices.values())

    def conjugated(self, gamma) -> "GRepresentation":
        """``x -> gamma tau(x) gamma^-1``."""
        g = np.asarray(gamma)
        ginv = _inverse(g)
        return GRepresentation(self.algebra, {k: g @ m @ ginv for k, m in self.matrices.items()},
                               self.irreducible)

    def relation_defect(self) -> float:
        """Largest entry of ``[tau a, tau b] - tau [a, b]`` over basis pairs."""
        worst = 0.0
        names = list(self.matrices)
        for a in names:
            for b in names:
                lhs = self.matrices[a] @ self.matrices[b] - self.matrices[b] @ self.matrices[a]
                rhs = self(self.algebra.bracket(self.algebra.basis[a], self.algebra.basis[b]))
                d = lhs - rhs
                worst = max(worst, max((abs(complex(v)) for v in np.ravel(d)), default=0.0))
        return worst


def _inverse(g):
    g = np.asarray(g)
    if _is_exact_array(g):
        from .linalg import solve_exact
        n = g.shape[0]
        cols = [solve_exact(g.tolist(), [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
        return np.array(cols, dtype=object).T
    return np.linalg.inv(g.astype(complex))


def sl2_irrep(l: int) -> GRepresentation:
    """Irreducible ``l``-dimensional sl(2) module; slot ``l`` carries the highest weight.

    With ``lam = l - 1`` and ``v_k`` (k = 0..lam) stored in slot ``l - k``:
    ``h v_k = (lam - 2k) v_k``, ``f v_k = v_{k+1}``, ``e v_k = k (lam - k + 1) v_{k-1}``.
    """
    lam = l - 1
    z = lambda: np.array([[Fraction(0)] * l for _ in range(l)], dtype=object)
    e, f, h = z(), z(), z()
    for k in range(l):
        s = l - 1 - k  # zero-based slot of v_k
        h[s, s] = Fraction(lam - 2 * k)
        if k + 1 < l:
            f[s - 1, s] = Fraction(1)
        if k >= 1:
            e[s + 1, s] = Fraction(k * (lam - k + 1))
    return GRepresentation(sl2(), {"e": e, "f": f, "h": h}, irreducible=True)


def direct_sum(*reps: GRepresentation) -> GRepresentation:
    names = list(reps[0].matrices)
    mats = {}
    for b in names:
        blocks = [r.matrices[b] for r in reps]
        n = sum(m.shape[0] for m in blocks)
        out = np.array([[Fraction(0)] * n for _ in range(n)], dtype=object)
        o = 0
        for m in blocks:
            k = m.shape[0]
            out[o:o + k, o:o + k] = m
            o += k
        mats[b] = out
    return GRepresentation(reps[0].algebra, mats, irreducible=False)


# -- affine elements ----------------------------------------------------------

@dataclass
class AffineElement:
    """``sum_m x_m (x) A_m + a c`` with ``x_m`` given in the defining representation."""

    parts: dict = field(default_factory=dict)
    central: object = 0

    @classmethod
    def of(cls, x, m: int) -> "AffineElement":
        return cls({int(m): np.asarray(x)}, 0)

    @classmethod
    def central_unit(cls) -> "AffineElement":
        return cls({}, 1)

    def __add__(self, other):
        parts = {m: x.copy() for m, x in self.parts.items()}
        for m, x in other.parts.items():
            parts[m] = parts[m] + x if m in parts else x.copy()
        return AffineElement(parts, self.central + other.central)

    def scaled(self, c):
        return AffineElement({m: x * c for m, x in self.parts.items()}, self.central * c)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def pruned(self, tol: float = 0.0):
        parts = {m: x for m, x in self.parts.items()
                 if any(abs(complex(v)) > tol for v in np.ravel(x))}
        return AffineElement(parts, self.central)

    def max_deviation(self, other) -> float:
        d = (self - other).pruned()
        worst = abs(complex(d.central))
        for x in d.parts.values():
            worst = max(worst, max(abs(complex(v)) for v in np.ravel(x)))
        return worst


def affine_bracket(X: AffineElement, Y: AffineElement, curve, algebra: LieAlgebra | None = None,
                   window_pad: int = 0) -> AffineElement:
    """``[x A_m, y A_n] = [x, y] (x) A_m A_n + gamma(x A_m, y A_n) c``; ``c`` is central."""
    algebra = algebra or sl2()
    basis = scalar_basis(curve)
    out = AffineElement({}, 0)
    for m, x in X.parts.items():
        for n, y in Y.parts.items():
            xy = algebra.bracket(x, y)
            hi = m + n + product_reach(curve.genus) + window_pad
            prods = scalar_structure_constants(curve, m, n, (m + n - window_pad, hi))
            for h, c in prods.items():
                if c != 0:
                    out = out + AffineElement.of(xy * c, h)
            g = cocycle_gamma(x, basis.function(m), y, basis.function(n), algebra.form)
            out = out + AffineElement({}, g)
    return out


# -- banded operators ---------------------------------------------------------

class BandedOperator:
    """Element of a-infinity: a column rule with a certified band.

    ``rule(N)`` returns the nonzero entries ``(N', c)`` of column ``N``.
    Every emitted entry is checked against the band.
    """

    def __init__(self, rule, lo: int, hi: int, name: str = "", exact: bool = True):
        self._rule = rule
        self.lo, self.hi = int(lo), int(hi)
        self.name = name
        self.exact = exact
        self._cols: dict[int, tuple] = {}

    def __repr__(self):
        return f"BandedOperator({self.name or 'rule'}, band=[{self.lo}, {self.hi}])"

    def column(self, N: int) -> tuple:
        hit = self._cols.get(N)
        if hit is None:
            entries = {}
            for Np, c in self._rule(N):
                if c == 0:
                    continue
                entries[Np] = entries.get(Np, 0) + c
            for Np in entries:
                if not self.lo <= Np - N <= self.hi:
                    raise ValueError(f"{self!r}: entry ({Np}, {N}) escapes the certified band")
            hit = tuple(sorted((k, v) for k, v in entries.items() if v != 0))
            self._cols[N] = hit
        return hit

    def entry(self, I: int, J: int):
        for Np, c in self.column(J):
            if Np == I:
                return c
        return 0

    def diagonal(self, N: int):
        return self.entry(N, N)

    def materialize(self, rows, cols) -> np.ndarray:
        rows, cols = list(rows), list(cols)
        pos = {r: a for a, r in enumerate(rows)}
        out = np.zeros((len(rows), len(cols)), dtype=object if self.exact else complex)
        if self.exact:
            out[:] = Fraction(0)
        for b, N in enumerate(cols):
            for Np, c in self.column(N):
                if Np in pos:
                    out[pos[Np], b] = c
        return out

    def observed_band(self, cols) -> tuple[int, int] | None:
        lo = hi = None
        for N in cols:
            for Np, _ in self.column(N):
                d = Np - N
                lo = d if lo is None else min(lo, d)
                hi = d if hi is None else max(hi, d)
        return None if lo is None else (lo, hi)

    # algebra
    def __add__(self, other: "BandedOperator") -> "BandedOperator":
        return BandedOperator(lambda N: self.column(N) + other.column(N), min(self.lo, other.lo),
                              max(self.hi, other.hi), f"({self.name}+{other.name})",
                              self.exact and other.exact)

    def scaled(self, c) -> "BandedOperator":
        exact = self.exact and isinstance(c, (int, Fraction))
        return BandedOperator(lambda N: [(Np, v * c) for Np, v in self.column(N)], self.lo, self.hi,
                              f"{c}*{self.name}", exact)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def compose(self, other: "BandedOperator") -> "BandedOperator":
        """``self @ other``."""
        def rule(N):
            out = []
            for K, c in other.column(N):
                out.extend((Np, v * c) for Np, v in self.column(K))
            return out
        return BandedOperator(rule, self.lo + other.lo, self.hi + other.hi,
                              f"{self.name}.{other.name}", self.exact and other.exact)

    __matmul__ = compose


def elementary(I: int, J: int) -> BandedOperator:
    d = I - J
    return BandedOperator(lambda N: [(I, 1)] if N == J else [], d, d, f"E[{I},{J}]")


def identity_operator() -> BandedOperator:
    return BandedOperator(lambda N: [(N, 1)], 0, 0, "Id")


def operator_commutator(P: BandedOperator, Q: BandedOperator) -> BandedOperator:
    return (P @ Q) - (Q @ P)


def operators_equal(P: BandedOperator, Q: BandedOperator, cols, tol: float = 0.0) -> float:
    """Largest entry of ``P - Q`` over the given columns (0 means equal)."""
    worst = 0.0
    for N in cols:
        a = dict(P.column(N))
        b = dict(Q.column(N))
        for k in set(a) | set(b):
            worst = max(worst, abs(complex(a.get(k, 0) - b.get(k, 0))))
    return worst


def cocycle_alpha(P: BandedOperator, Q: BandedOperator):
    """``sum_{I >= 0, J < 0} (P_IJ Q_JI - Q_IJ P_JI)``; finite by bandedness."""
    reach = max(P.hi, Q.hi, 0)
    total = 0
    for J in range(-reach, 0):
        for I, p in P.column(J):
            if I >= 0:
                total += p * Q.entry(J, I)
        for I, q in Q.column(J):
            if I >= 0:
                total -= q * P.entry(J, I)
    return total


# -- the tensor action ----------------------------------------------------------

def _slice(C, m: int, n: int) -> dict:
    if isinstance(C, KNVectorBasis):
        return C.action(m, n)
    if isinstance(C, ActionConstants):
        out = C.slice(m, n)
        if out is None:
            raise WindowTooSmall(f"no constants for m={m}, n={n}")
        return out
    if callable(C):
        return C(m, n)
    raise TypeError("constants must be a KNVectorBasis, ActionConstants or a callable")


def _tau_offsets(T) -> tuple[int, int]:
    nz = [(r - c) for r in range(T.shape[0]) for c in range(T.shape[1]) if T[r, c] != 0]
    if not nz:
        return 0, 0
    return min(nz), max(nz)


def tensor_action_operator(x, m: int, tau: GRepresentation, C, genus: int | None = None,
                           drop_tol: float = 1e-12) -> BandedOperator:
    """Operator of ``x (x) A_m`` on the flattened symbols.

    ``x`` is a basis name of the algebra or the matrix ``tau(x)`` itself.

    ``C`` supplies ``C^{k,j'}_{m,n,j}``: a :class:`KNVectorBasis` (computed on
    demand), an :class:`ActionConstants` table, or a callable ``(m, n) ->
    {(j, k, j'): c}``.  Numeric constants below ``drop_tol`` times the
    largest constant of the column are treated as zero.
    """
    T = tau(x) if isinstance(x, str) else np.asarray(x)
    if T.shape != (tau.dim, tau.dim):
        raise RankMismatch(f"operator matrix has shape {T.shape}, representation dimension is {tau.dim}")
    l = tau.dim
    rank = C.rank if isinstance(C, (KNVectorBasis, ActionConstants)) else l
    if rank != l:
        raise RankMismatch(f"representation has dimension {l}, bundle rank is {rank}")
    if genus is None:
        genus = C.curve.genus if isinstance(C, KNVectorBasis) else getattr(C, "genus", 0)
    gb = band_width(genus, m)
    dmin, dmax = _tau_offsets(T)
    lo = l * l * m + dmin
    hi = l * l * m + l * l * gb + dmax
    exact = _is_exact_array(T) and genus == 0

    def rule(N):
        n, j, i = index_inverse(N, l)
        sl = _slice(C, m, n)
        if not exact:
            big = max((abs(complex(c)) for c in sl.values()), default=0.0)
            sl = {key: c for key, c in sl.items() if abs(complex(c)) > drop_tol * big}
        out = []
        for (jj, k, jp), c in sl.items():
            if jj != j or c == 0:
                continue
            for r in range(l):
                t = T[r, i - 1]
                if t != 0:
                    out.append((index_map(k, jp, r + 1, l), c * t))
        return out

    return BandedOperator(rule, lo, hi, f"x@A_{m}", exact)


def a_action_operator(m: int, C, l: int, genus: int | None = None, drop_tol: float = 1e-12) -> BandedOperator:
    """Operator of ``A_m`` alone (the slot index ``i`` is untouched)."""
    I = np.array([[Fraction(int(r == c)) for c in range(l)] for r in range(l)], dtype=object)
    tau = GRepresentation(LieAlgebra("gl1", {}), {"id": I})
    op = tensor_action_operator(I, m, tau, C, genus, drop_tol)
    op.name = f"A_{m}"
    return op


def g_action_operator(x, tau: GRepresentation) -> BandedOperator:
    """Action of ``x`` in the finite algebra alone: ``tau(x)`` on slots, ``(n, j)`` fixed."""
    T = tau(x)
    l = tau.dim
    dmin, dmax = _tau_offsets(T)

    def rule(N):
        n, j, i = index_inverse(N, l)
        return [(index_map(n, j, r + 1, l), T[r, i - 1]) for r in range(l) if T[r, i - 1] != 0]

    return BandedOperator(rule, dmin, dmax, f"g({x if isinstance(x, str) else 'x'})", _is_exact_array(T))


def affine_operator(X: AffineElement, tau: GRepresentation, C, genus: int | None = None) -> BandedOperator:
    """Operator of the finite part of ``X`` (the central part acts by scalars on forms)."""
    ops = [tensor_action_operator(tau(x), m, tau, C, genus) for m, x in sorted(X.parts.items())]
    if not ops:
        return BandedOperator(lambda N: [], 0, 0, "0")
    out = ops[0]
    for op in ops[1:]:
        out = out + op
    return out


def stabilizer_nullity(tau: GRepresentation) -> int:
    """Dimension of ``{g : g tau(x) = tau(x) g for every generator x}``."""
    l = tau.dim
    rows = []
    for T in tau.matrices.values():
        # (g T - T g)[r, c] as a linear form in the entries g[a, b] (index a*l + b)
        for r in range(l):
            for c in range(l):
                row = [0] * (l * l)
                for k in range(l):
                    row[r * l + k] += T[k, c]
                    row[k * l + c] -= T[r, k]
                rows.append(row)
    if tau.exact:
        return len(nullspace_exact(rows, l * l))
    nul, _ = numeric_nullity(np.array(rows, dtype=complex))
    return nul


def stabilizer_is_scalar(tau: GRepresentation) -> bool:
    return stabilizer_nullity(tau) == 1


def representation_defects(curve, tau: GRepresentation, C, pairs, columns, tol: float = 0.0) -> list:
    """Check ``[pi(x A_m), pi(y A_n)] = pi([x A_m, y A_n])`` on the symbol level.

    ``pairs`` holds ``((x, m), (y, n))`` with ``x, y`` basis names.  Columns
    whose constants are not available are skipped.  Returns records
    ``{"commutator", "deviation", "columns"}`` for every pair.
    """
    alg = tau.algebra
    out = []
    for (x, m), (y, n) in pairs:
        P = tensor_action_operator(x, m, tau, C, curve.genus)
        Q = tensor_action_operator(y, n, tau, C, curve.genus)
        br = affine_bracket(AffineElement.of(alg.basis[x], m), AffineElement.of(alg.basis[y], n), curve, alg)
        R = affine_operator(br, tau, C, curve.genus)
        L = operator_commutator(P, Q)
        worst, used = 0.0, 0
        for N in columns:
            try:
                worst = max(worst, operators_equal(L, R, [N]))
                used += 1
            except (WindowTooSmall, KeyError):
                continue
        out.append({"commutator": f"[{x}@{m}, {y}@{n}]", "deviation": worst, "columns": used,
                    "ok": worst <= tol and used > 0})
    return out
