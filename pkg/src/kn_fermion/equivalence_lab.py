"""Isomorphisms between fermion representations and the checks built on them.

Changing the framing by ``gamma`` and conjugating the finite representation
by ``gamma`` should give an equivalent module; the equivalence is the map
``gamma~`` that applies ``gamma`` to the slot index of every symbol.  Full
bags pick up ``det gamma``; every bag at a non-negative position is divided
by it, so the image of a monomial is a finite expression.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .affine_action import (
    GRepresentation,
    _inverse,
    _is_exact_array,
    g_action_operator,
    tensor_action_operator,
)
from .curve_models import CurveModel
from .errors import NotHighestSlot, RankMismatch, ShapeMismatch, SingularGamma
from .framed_bundles import FramedBundleData, apply_framing_change
from .kn_vector_basis import index_inverse, vector_basis
from .wedge_module import WedgeMonomial, WedgeVector, _make, act_banded, canonicalize, degree, vacuum


def _det(M):
    M = np.asarray(M)
    n = M.shape[0]
    if n == 0:
        return 1
    if not _is_exact_array(M):
        return complex(np.linalg.det(M.astype(complex)))
    a = [[Fraction(v) for v in row] for row in M]
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                for k in range(c, n):
                    a[r][k] -= f * a[c][k]
    return det


@dataclass
class FermionRepData:
    """A curve, a framed bundle, a representation and the action constants."""

    curve: CurveModel
    bundle: FramedBundleData
    tau: GRepresentation
    constants: object = None
    _ops: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.tau.dim != self.bundle.rank:
            raise RankMismatch(f"representation dimension {self.tau.dim} != bundle rank {self.bundle.rank}")
        if self.constants is None:
            self.constants = vector_basis(self.curve, self.bundle)

    @property
    def rank(self) -> int:
        return self.bundle.rank

    def operator(self, x, m: int):
        key = (x if isinstance(x, str) else id(x), m)
        op = self._ops.get(key)
        if op is None:
            op = self._ops[key] = tensor_action_operator(x, m, self.tau, self.constants,
                                                         genus=self.curve.genus)
        return op

    def act(self, x, m: int, v):
        return act_banded(self.operator(x, m), v)

    def reframed(self, gamma) -> "FermionRepData":
        """Framing changed so that vector functions become ``gamma f``; ``tau -> gamma tau gamma^-1``.

        The transported basis ``gamma psi_{n,j}`` has the same structure
        constants, so they are reused.
        """
        g = np.asarray(gamma)
        if g.shape != (self.rank, self.rank):
            raise ShapeMismatch(f"gamma must be {self.rank}x{self.rank}")
        ginv = _inverse(g)
        bundle = apply_framing_change(self.bundle, np.asarray(ginv, dtype=complex))
        return FermionRepData(self.curve, bundle, self.tau.conjugated(g), self.constants)


def tilde_gamma_map(gamma, v, l: int | None = None) -> WedgeVector:
    """Apply ``gamma`` to the slot of every factor, bag by bag."""
    g = np.asarray(gamma)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeMismatch("gamma must be square")
    l = l or g.shape[0]
    if g.shape[0] != l:
        raise ShapeMismatch(f"gamma is {g.shape[0]}x{g.shape[0]}, rank is {l}")
    d = _det(g)
    if abs(complex(d)) < 1e-12:
        raise SingularGamma("gamma is not invertible")
    if isinstance(v, WedgeMonomial):
        v = WedgeVector.basis(v)
    minors = {}

    def minor(T, S):
        key = (T, S)
        if key not in minors:
            minors[key] = _det(g[np.ix_(T, S)]) if S else 1
        return minors[key]

    out = WedgeVector()
    for mono, coef in v.terms.items():
        b_lo = mono.lowest() // l
        b_tail = -(-mono.tail_start // l)
        present = set(mono.head) | set(range(mono.tail_start, b_tail * l))
        options = []
        fixed = []
        # every bag below the tail that sits at b >= 0 is divided by det gamma
        scale = Fraction(1, 1) / d ** b_tail if _is_exact_array(g) else d ** -b_tail
        for b in range(b_lo, b_tail):
            S = tuple(s for s in range(l) if b * l + s in present)
            if len(S) in (0, l):
                if S:
                    scale = scale * d
                    fixed.extend(b * l + s for s in S)
                continue
            opts = []
            for T in itertools.combinations(range(l), len(S)):
                c = minor(T, S)
                if c != 0:
                    opts.append((b, T, c))
            options.append(opts)
        for choice in itertools.product(*options):
            c = coef * scale
            idx = list(fixed)
            for b, T, m in choice:
                c = c * m
                idx.extend(b * l + t for t in T)
            out.add(_make(sorted(idx), b_tail * l), c)
    return out


@dataclass
class WedgeIsomorphism:
    """``kind`` is ``"tilde_gamma"``, ``"strong"`` (index relabeling) or ``"composite"``."""

    kind: str
    gamma: object = None
    relabel: object = None
    parts: tuple = ()
    rank: int | None = None

    def __call__(self, v) -> WedgeVector:
        if isinstance(v, WedgeMonomial):
            v = WedgeVector.basis(v)
        if self.kind == "tilde_gamma":
            return tilde_gamma_map(self.gamma, v, self.rank)
        if self.kind == "strong":
            out = WedgeVector()
            f = self.relabel if callable(self.relabel) else (lambda N: self.relabel.get(N, N))
            for mono, c in v.terms.items():
                span = mono.indices(mono.tail_start + 1)
                image = [f(N) for N in span]
                s, mm = canonicalize(image)
                if s:
                    out.add(mm, s * c)
            return out
        if self.kind == "composite":
            for part in reversed(self.parts):
                v = part(v)
            return v
        raise ValueError(f"unknown isomorphism kind {self.kind!r}")


@dataclass
class IntertwiningReport:
    checked: int
    max_deviation: float
    failures: list
    tol: float

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self):
        return {"checked": self.checked, "max_deviation": self.max_deviation, "ok": self.ok,
                "tol": self.tol, "failures": self.failures[:20]}


def check_intertwining(rep1: FermionRepData, rep2: FermionRepData, iso: WedgeIsomorphism,
                       elements, vectors, tol: float = 0.0) -> IntertwiningReport:
    """``iso(pi_1(x A_m) v) == pi_2(x A_m) iso(v)`` for every element and vector."""
    if rep1.rank != rep2.rank:
        raise ShapeMismatch(f"ranks differ: {rep1.rank} vs {rep2.rank}")
    if iso.gamma is not None and np.asarray(iso.gamma).shape != (rep1.rank, rep1.rank):
        raise ShapeMismatch("gamma does not match the rank")
    worst = 0.0
    failures = []
    count = 0
    for x, m in elements:
        for v in vectors:
            lhs = iso(rep1.act(x, m, v))
            rhs = rep2.act(x, m, iso(v))
            dev = (lhs - rhs).norm()
            count += 1
            worst = max(worst, dev)
            if dev > tol:
                label = x if isinstance(x, str) else "x"
                failures.append({"element": f"{label}@{m}", "vector": str(v), "deviation": dev})
    return IntertwiningReport(count, worst, failures, tol)


def preserves_charge(iso: WedgeIsomorphism, vectors) -> bool:
    for v in vectors:
        monos = [v] if isinstance(v, WedgeMonomial) else list(v.terms)
        charges = {m.charge for m in monos}
        if any(m.charge not in charges for m in iso(v).terms):
            return False
    return True


def stabilizer_nullity(tau: GRepresentation) -> int:
    from .affine_action import stabilizer_nullity as _nul
    return _nul(tau)


def stabilizer_is_scalar(tau: GRepresentation) -> bool:
    return stabilizer_nullity(tau) == 1


def _check_highest(M: int, l: int):
    _, _, i = index_inverse(M, l)
    if i != l:
        raise NotHighestSlot(f"index {M} sits in slot {i}, not the highest slot {l}")


def highest_weight_eigenvalue(rep: FermionRepData, h, M: int):
    """Eigenvalue of the finite-algebra element ``h`` on ``psi~_M``."""
    l = rep.rank
    _check_highest(M, l)
    w = act_banded(g_action_operator(h, rep.tau), vacuum(M))
    lam = w.coefficient(vacuum(M))
    rest = w - WedgeVector.basis(vacuum(M)).scaled(lam)
    if not rest.is_zero(1e-12):
        raise ValueError("psi~_M is not an eigenvector of the given element")
    return lam


def highest_monomial_image(rep: FermionRepData, x, M: int) -> WedgeVector:
    """``(tau(x) psi_M) ^ psi_{M+1} ^ ...`` expanded over the slots of ``M``'s bag."""
    l = rep.rank
    _check_highest(M, l)
    T = rep.tau(x)
    base = (M // l) * l
    out = WedgeVector()
    for s in range(l):
        c = T[s, l - 1]
        if c == 0:
            continue
        N = base + s
        mono = vacuum(M) if N == M else WedgeMonomial((N,), M + 1)
        out.add(mono, c)
    return out


def bag_annihilation(rep: FermionRepData, x, bags) -> dict:
    """For each bag ``b``: the size of ``pi(x) psi~_{b l}`` and of ``x`` on the bag's top wedge."""
    l = rep.rank
    T = rep.tau(x)
    op = g_action_operator(x, rep.tau)
    out = {}
    for b in bags:
        wedge = act_banded(op, vacuum(b * l)).norm()
        top = abs(complex(sum(T[s, s] for s in range(l))))
        out[b] = max(wedge, top)
    return out


def degree_profile(v: WedgeVector) -> set:
    return {degree(m) for m in v.terms}
