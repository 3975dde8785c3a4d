"""Semi-infinite wedge space and the regularized action of banded operators.

A monomial ``psi_{N_0} ^ psi_{N_1} ^ ...`` with increasing, eventually
consecutive indices is stored as a finite ``head`` followed by the
consecutive tail ``tail_start, tail_start + 1, ...``.  Its charge is
``tail_start - len(head)``: the monomial agrees with ``psi_k`` in position
``k - charge`` far out.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .affine_action import BandedOperator, cocycle_alpha, elementary
from .errors import NotEventuallyConsecutive


@dataclass(frozen=True, order=True)
class WedgeMonomial:
    head: tuple
    tail_start: int

    def __post_init__(self):
        h = self.head
        if any(a >= b for a, b in zip(h, h[1:])) or (h and h[-1] >= self.tail_start):
            raise ValueError("head must be increasing and below the tail")
        if h and h[-1] == self.tail_start - 1:
            raise ValueError("monomial is not in canonical form; use canonicalize")

    @property
    def charge(self) -> int:
        return self.tail_start - len(self.head)

    def __contains__(self, N: int) -> bool:
        return N >= self.tail_start or N in self.head

    def indices(self, upto: int) -> list:
        """Occupied indices below ``upto``."""
        return [N for N in self.head if N < upto] + list(range(self.tail_start, upto))

    def holes(self, lo: int) -> list:
        """Empty indices in ``[lo, tail_start)``."""
        hs = set(self.head)
        return [N for N in range(lo, self.tail_start) if N not in hs]

    def lowest(self) -> int:
        return self.head[0] if self.head else self.tail_start

    def __str__(self):
        parts = [f"psi[{N}]" for N in self.head] + [f"psi[{self.tail_start}]", "..."]
        return " ^ ".join(parts)


def _make(indices, tail_start: int) -> WedgeMonomial:
    """Canonical monomial from a sorted set of head indices below ``tail_start``."""
    head = list(indices)
    while head and head[-1] == tail_start - 1:
        head.pop()
        tail_start -= 1
    return WedgeMonomial(tuple(head), tail_start)


def vacuum(M: int) -> WedgeMonomial:
    """``psi_M ^ psi_{M+1} ^ ...``."""
    return WedgeMonomial((), int(M))


def _inversions(seq) -> int:
    """Parity-relevant inversion count by merge sort."""
    def rec(a):
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, x = rec(a[:mid])
        right, y = rec(a[mid:])
        out, inv, i, j = [], x + y, 0, 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                out.append(left[i])
                i += 1
            else:
                out.append(right[j])
                inv += len(left) - i
                j += 1
        out.extend(left[i:])
        out.extend(right[j:])
        return out, inv
    return rec(list(seq))[1]


def canonicalize(seq, charge: int | None = None):
    """Sort a finite prefix of a semi-infinite wedge.

    ``seq`` lists the indices in the order written; the wedge continues with
    ``seq[-1] + 1, seq[-1] + 2, ...`` unless ``charge`` is given, in which
    case the tail is ``len(seq) + charge, len(seq) + charge + 1, ...``.
    Returns ``(sign, monomial)``; ``sign`` is 0 when an index repeats.
    """
    seq = list(seq)
    if seq and (seq[-1] is Ellipsis or seq[-1] == "..."):
        seq = seq[:-1]
    try:
        seq = [int(v) for v in seq]
    except (TypeError, ValueError):
        raise NotEventuallyConsecutive("indices must be integers") from None
    if charge is None:
        if not seq:
            raise NotEventuallyConsecutive("an empty prefix needs an explicit charge")
        tail = seq[-1] + 1
    else:
        tail = len(seq) + charge
    body = seq
    if len(set(body)) != len(body):
        return 0, None
    # the written prefix must reach the tail: every later index is above the prefix
    # or already listed, otherwise the tail would repeat a symbol
    over = [v for v in body if v >= tail]
    if over:
        # tail indices written explicitly make the wedge vanish
        return 0, None
    sign = -1 if _inversions(body) % 2 else 1
    return sign, _make(sorted(body), tail)


def parse_monomial(doc) -> WedgeMonomial:
    """From ``{"head": [...], "tail": t}``, ``{"vacuum": M}`` or an index list with a charge."""
    if isinstance(doc, dict):
        if "vacuum" in doc:
            return vacuum(int(doc["vacuum"]))
        if "indices" in doc:
            s, mono = canonicalize(doc["indices"], doc.get("charge"))
            if s != 1:
                raise NotEventuallyConsecutive("index list must be increasing without repeats")
            return mono
        return _make(sorted(int(v) for v in doc.get("head", [])), int(doc["tail"]))
    s, mono = canonicalize(doc)
    if s != 1:
        raise NotEventuallyConsecutive("index list must be increasing without repeats")
    return mono


def degree(mono: WedgeMonomial) -> int:
    """``sum_k (N_k - k - charge)`` over the positions ``k >= 0``."""
    q = mono.charge
    return sum(N - k - q for k, N in enumerate(mono.head))


class WedgeVector:
    """Finite linear combination of monomials."""

    def __init__(self, terms=None):
        self.terms: dict = {}
        for mono, c in (terms or {}).items():
            self.add(mono, c)

    @classmethod
    def basis(cls, mono: WedgeMonomial) -> "WedgeVector":
        return cls({mono: 1})

    def add(self, mono, c):
        if c == 0:
            return
        v = self.terms.get(mono, 0) + c
        if v == 0:
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = v

    def __add__(self, other):
        out = WedgeVector(self.terms)
        for m, c in other.terms.items():
            out.add(m, c)
        return out

    def scaled(self, c):
        return WedgeVector({m: v * c for m, v in self.terms.items()})

    def __sub__(self, other):
        return self + other.scaled(-1)

    def coefficient(self, mono):
        return self.terms.get(mono, 0)

    def norm(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm() <= tol

    def __repr__(self):
        return "WedgeVector(" + ", ".join(f"{c}*[{m}]" for m, c in sorted(self.terms.items())) + ")"


def _replace(mono: WedgeMonomial, J: int, I: int):
    """``(sign, monomial)`` for ``psi_J -> psi_I`` in place; ``J`` occupied, ``I`` free."""
    if J >= mono.tail_start:
        head = list(mono.head) + list(range(mono.tail_start, J))
        tail = J + 1
    else:
        head = [N for N in mono.head if N != J]
        tail = mono.tail_start
    if I >= tail:
        raise ValueError(f"index {I} is already occupied")
    lo, hi = min(I, J), max(I, J)
    between = sum(1 for N in head if lo < N < hi)
    head.append(I)
    head.sort()
    return (-1 if between % 2 else 1), _make(head, tail)


def act_elementary(I: int, J: int, mono, regularized: bool = True) -> WedgeVector:
    """``r(E_IJ)`` on a monomial; ``r^`` subtracts the identity for ``I = J >= 0``."""
    if isinstance(mono, WedgeVector):
        out = WedgeVector()
        for m, c in mono.terms.items():
            out = out + act_elementary(I, J, m, regularized).scaled(c)
        return out
    if I == J:
        c = int(J in mono) - (int(I >= 0) if regularized else 0)
        return WedgeVector({mono: c})
    if J not in mono or I in mono:
        return WedgeVector()
    s, m = _replace(mono, J, I)
    return WedgeVector({m: s})


def act_banded(op: BandedOperator, v, regularized: bool = True) -> WedgeVector:
    """Regularized action of a banded operator on a finite combination of monomials."""
    if isinstance(v, WedgeMonomial):
        v = WedgeVector.basis(v)
    out = WedgeVector()
    for mono, coef in v.terms.items():
        lo_present = mono.lowest()
        # diagonal: occupied negatives minus empty non-negatives (regularized)
        diag = 0
        for N in range(min(lo_present, 0), max(mono.tail_start, 0)):
            occupied = N in mono
            if regularized:
                if occupied and N < 0:
                    diag += op.diagonal(N)
                elif not occupied and N >= 0:
                    diag -= op.diagonal(N)
            elif occupied:
                diag += op.diagonal(N)
        if not regularized and op.lo <= 0 <= op.hi:
            raise ValueError("the unregularized action of a diagonal operator diverges")
        if diag != 0:
            out.add(mono, diag * coef)
        # off-diagonal: occupied N moved into an empty H
        for H in mono.holes(lo_present + op.lo):
            for N in range(H - op.hi, H - op.lo + 1):
                if N == H or N not in mono:
                    continue
                c = op.entry(H, N)
                if c == 0:
                    continue
                s, m = _replace(mono, N, H)
                out.add(m, s * c * coef)
    return out


def vacuum_projection(op: BandedOperator, M: int):
    """Coefficient of ``psi~_M`` in ``r^(op) psi~_M``."""
    return act_banded(op, vacuum(M)).coefficient(vacuum(M))


def vacuum_weight_formula(C, m: int, M: int, l: int):
    """Diagonal weight of ``psi~_M`` read straight from the constants (no wedge algebra).

    ``sum_{K=M}^{-1} C^K_{mK}`` for ``M < 0``.  For ``M > 0`` the regularization
    contributes ``-sum_{K=0}^{M-1} C^K_{mK}`` from the empty slots instead.
    """
    from .affine_action import _slice
    from .kn_vector_basis import index_inverse

    def diag(K):
        n, j, _ = index_inverse(K, l)
        return _slice(C, m, n).get((j, n, j), 0)

    if M < 0:
        return sum((diag(K) for K in range(M, 0)), 0)
    return -sum((diag(K) for K in range(0, M)), 0)


def identity_vacuum_weight(M: int) -> int:
    """Eigenvalue of ``r^(Id)`` on ``psi~_M`` (the regularized particle count)."""
    return -M


def alpha_elementary(I: int, J: int, K: int, L: int) -> int:
    """``alpha(E_IJ, E_KL)`` for the regularization at 0."""
    if J == K and L == I:
        if I >= 0 > J:
            return 1
        if J >= 0 > I:
            return -1
    return 0


def commutator_defect(I, J, K, L, mono, central: bool = True) -> WedgeVector:
    """``[r^E_IJ, r^E_KL] - (d_JK r^E_IL - d_LI r^E_KJ + alpha)`` on ``mono``."""
    a = act_elementary(I, J, act_elementary(K, L, mono))
    b = act_elementary(K, L, act_elementary(I, J, mono))
    lhs = a - b
    rhs = WedgeVector.basis(mono).scaled(alpha_elementary(I, J, K, L) if central else 0)
    if J == K:
        rhs = rhs + act_elementary(I, L, mono)
    if L == I:
        rhs = rhs - act_elementary(K, J, mono)
    return lhs - rhs


def window_monomials(lo: int, hi: int, charge: int) -> list:
    """Charge-``charge`` monomials that are full above ``hi`` and empty below ``lo``."""
    size = hi + 1 - charge
    if not 0 <= size <= hi - lo + 1:
        return []
    return [_make(list(combo), hi + 1) for combo in itertools.combinations(range(lo, hi + 1), size)]


def _window_frame(lo, hi, charge):
    """Window monomials and their positions."""
    monos = window_monomials(lo, hi, charge)
    return monos, {m: k for k, m in enumerate(monos)}


@dataclass
class CommutatorReport:
    checked: int
    failures: list
    window: tuple
    charge: int

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self):
        return {"checked": self.checked, "ok": self.ok, "window": list(self.window),
                "charge": self.charge, "failures": [list(f) for f in self.failures[:20]]}


def _elementary_maps(lo, hi, monos, pos):
    """For each ``(I, J)`` the monomial map ``k -> (target, coefficient)`` as arrays.

    Index sets here are ``S subset [lo, hi]`` plus everything above ``hi``
    (indices below ``lo`` are empty), so the regularized diagonal is
    ``[I in S] - [I >= 0]``.
    """
    n = len(monos)
    sets = [frozenset(m.indices(hi + 1)) for m in monos]
    maps = {}
    for I in range(lo, hi + 1):
        for J in range(lo, hi + 1):
            tgt = np.zeros(n, dtype=np.int64)
            cf = np.zeros(n, dtype=np.int64)
            for k, (m, S) in enumerate(zip(monos, sets)):
                if I == J:
                    tgt[k] = k
                    cf[k] = int(I in S) - int(I >= 0)
                elif J in S and I not in S:
                    s, mm = _replace(m, J, I)
                    tgt[k] = pos[mm]
                    cf[k] = s
                else:
                    tgt[k] = k
            maps[(I, J)] = (tgt, cf)
    return maps


def _as_sparse(parts, n):
    rows, cols, vals = [], [], []
    ar = np.arange(n)
    for (tgt, cf), w in parts:
        keep = cf != 0
        rows.append(tgt[keep])
        cols.append(ar[keep])
        vals.append(w * cf[keep])
    if not rows:
        return sp.csr_matrix((n, n), dtype=np.int64)
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    M = M.tocsr()
    M.sum_duplicates()
    M.eliminate_zeros()
    return M


def _compose(P, Q):
    tq, cq = Q
    tp, cp = P
    return tp[tq], cq * cp[tq]


def verify_commutators(lo: int = -6, hi: int = 6, charge: int = 0, monomials=None,
                       fast: bool = True, central: bool = True) -> CommutatorReport:
    """Check the a-infinity relations for ``E_IJ, E_KL`` with indices in ``[lo, hi]``.

    The default checks every quadruple on every charge-``charge`` monomial
    whose free indices lie in the window; ``fast=False`` uses the generic
    monomial-by-monomial code path.  ``central=False`` drops the cocycle term,
    which makes exactly the quadruples with a nonzero cocycle fail.
    """
    failures = []
    idx = range(lo, hi + 1)
    if not fast or monomials is not None:
        monos = monomials if monomials is not None else window_monomials(lo, hi, charge)
        count = 0
        for I, J, K, L in itertools.product(idx, repeat=4):
            for mono in monos:
                count += 1
                if not commutator_defect(I, J, K, L, mono, central).is_zero():
                    failures.append((I, J, K, L, str(mono)))
        return CommutatorReport(count, failures, (lo, hi), charge)
    monos, pos = _window_frame(lo, hi, charge)
    n = len(monos)
    maps = _elementary_maps(lo, hi, monos, pos)
    ident = (np.arange(n), np.ones(n, dtype=np.int64))
    count = 0
    for I, J, K, L in itertools.product(idx, repeat=4):
        P, Q = maps[(I, J)], maps[(K, L)]
        parts = [(_compose(P, Q), 1), (_compose(Q, P), -1)]
        if J == K:
            parts.append((maps[(I, L)], -1))
        if L == I:
            parts.append((maps[(K, J)], 1))
        a = alpha_elementary(I, J, K, L) if central else 0
        if a:
            parts.append((ident, -a))
        D = _as_sparse(parts, n)
        count += n
        if D.nnz:
            failures.append((I, J, K, L, int(D.nnz)))
    return CommutatorReport(count, failures, (lo, hi), charge)


def verify_banded_commutator(P: BandedOperator, Q: BandedOperator, monos, tol: float = 0.0):
    """``[r^P, r^Q] - r^([P, Q]) - alpha(P, Q)`` on each monomial; returns the largest defect."""
    from .affine_action import operator_commutator
    R = operator_commutator(P, Q)
    a = cocycle_alpha(P, Q)
    worst = 0.0
    for mono in monos:
        lhs = act_banded(P, act_banded(Q, mono)) - act_banded(Q, act_banded(P, mono))
        rhs = act_banded(R, mono) + WedgeVector.basis(mono).scaled(a)
        worst = max(worst, (lhs - rhs).norm())
    return worst


def excitations(M: int, count: int, spread: int = 4) -> list:
    """The ``count`` monomials of charge ``M`` closest to ``psi~_M`` in degree.

    Candidates move particles within ``[M - spread, M + spread]``.
    """
    monos = window_monomials(M - spread, M + spread, M)
    return sorted(monos, key=lambda m: (abs(degree(m)), degree(m), m))[:count]


__all__ = [
    "WedgeMonomial", "WedgeVector", "vacuum", "canonicalize", "parse_monomial", "degree",
    "act_elementary", "act_banded", "vacuum_projection", "vacuum_weight_formula", "identity_vacuum_weight",
    "alpha_elementary", "commutator_defect", "verify_commutators", "verify_banded_commutator",
    "window_monomials", "excitations", "CommutatorReport", "elementary",
]
