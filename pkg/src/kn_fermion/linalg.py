"""Small dense linear algebra kernels.

Exact routines work on lists of ``Fraction`` rows; numeric routines use
numpy and a deterministic full-pivoting elimination so that repeated runs
produce identical output.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def rref(rows):
    """Reduced row echelon form over the rationals.

    Returns ``(R, pivots)`` where ``R`` is a new list of Fraction rows.
    """
    R = [[Fraction(x) for x in row] for row in rows]
    if not R:
        return R, []
    m, n = len(R), len(R[0])
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = 1 / R[r][c]
        R[r] = [x * inv for x in R[r]]
        for i in range(m):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return R, pivots


def rank_exact(rows) -> int:
    return len(rref(rows)[1])


def nullspace_exact(rows, ncols: int | None = None):
    """Basis of the right kernel, one Fraction vector per basis element."""
    if not rows:
        if ncols is None:
            raise ValueError("ncols required for an empty matrix")
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    R, pivots = rref(rows)
    n = len(R[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -R[i][f]
        basis.append(v)
    return basis


def solve_exact(rows, rhs):
    """Unique solution of a square-or-tall consistent system; raises otherwise."""
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    R, pivots = rref(aug)
    n = len(rows[0])
    if n in pivots:
        raise np.linalg.LinAlgError("inconsistent system")
    if len(pivots) < n:
        raise np.linalg.LinAlgError("system is rank deficient")
    x = [Fraction(0)] * n
    for i, p in enumerate(pivots):
        x[p] = R[i][n]
    return x


def ruiz_scaling(A: np.ndarray, sweeps: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors ``r, c`` making ``diag(r) A diag(c)`` max-norm balanced.

    Iterated square-root scaling (Ruiz); zero rows and columns keep factor 1.
    """
    A = np.abs(np.asarray(A, dtype=complex))
    m, n = A.shape
    r, c = np.ones(m), np.ones(n)
    for _ in range(sweeps):
        S = A * r[:, None] * c
        rm, cm = S.max(axis=1) if n else np.zeros(m), S.max(axis=0) if m else np.zeros(n)
        rm[rm == 0] = 1.0
        cm[cm == 0] = 1.0
        if np.all(np.abs(rm - 1) < 1e-3) and np.all(np.abs(cm - 1) < 1e-3):
            break
        r /= np.sqrt(rm)
        c /= np.sqrt(cm)
    return r, c


def equilibrate(A: np.ndarray) -> np.ndarray:
    """``A`` with rows and columns balanced by :func:`ruiz_scaling` (rank is unchanged)."""
    A = np.array(A, dtype=complex)
    if A.size == 0:
        return A
    r, c = ruiz_scaling(A)
    return A * r[:, None] * c


def numeric_nullity(A: np.ndarray, rel_tol: float = 1e-8) -> tuple[int, np.ndarray]:
    """Nullity of ``A`` counting singular values below ``rel_tol * s_max``.

    Columns beyond the row count are counted as null directions.
    """
    A = equilibrate(A)
    m, n = A.shape
    if m == 0:
        return n, np.zeros(0)
    s = np.linalg.svd(A, compute_uv=False)
    smax = s[0] if len(s) else 0.0
    small = int(np.sum(s <= rel_tol * smax)) if smax > 0 else len(s)
    return small + max(n - m, 0), s


def full_pivot_solve(A: np.ndarray, b: np.ndarray, rank_tol: float = 1e-10):
    """Solve ``A x = b`` (square or overdetermined) by full pivoting.

    Pivots are chosen by maximal modulus with ties broken by the lowest
    (row, column) position.  Rows and columns are balanced first, and the
    returned residual refers to the balanced system.  Returns ``(x,
    residual_norm)``; raises ``LinAlgError`` when a pivot falls below
    ``rank_tol`` relative to the largest entry.
    """
    A = np.array(A, dtype=complex)
    b = np.array(b, dtype=complex).reshape(len(A), -1)
    m, n = A.shape
    if m < n:
        raise np.linalg.LinAlgError("underdetermined system")
    # solve the balanced system diag(r) A diag(c) y = diag(r) b, then x = diag(c) y
    rs, cs = ruiz_scaling(A) if A.size else (np.ones(m), np.ones(n))
    A = A * rs[:, None] * cs
    b = b * rs[:, None]
    A0, b0 = A.copy(), b.copy()
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0:
        raise np.linalg.LinAlgError("zero matrix")
    cols = np.arange(n)
    for k in range(n):
        sub = np.abs(A[k:, k:])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, sub.shape[1])
        i += k
        j += k
        if sub.flat[flat] <= rank_tol * scale:
            raise np.linalg.LinAlgError("numerically singular system")
        A[[k, i]] = A[[i, k]]
        b[[k, i]] = b[[i, k]]
        A[:, [k, j]] = A[:, [j, k]]
        cols[[k, j]] = cols[[j, k]]
        piv = A[k, k]
        f = A[k + 1:, k] / piv
        A[k + 1:, k:] -= np.outer(f, A[k, k:])
        b[k + 1:] -= np.outer(f, b[k])
    y = np.zeros((n, b.shape[1]), dtype=complex)
    for k in range(n - 1, -1, -1):
        y[k] = (b[k] - A[k, k + 1:n] @ y[k + 1:n]) / A[k, k]
    x = np.zeros_like(y)
    x[cols] = y
    res = np.linalg.norm(A0 @ x - b0) / max(np.linalg.norm(b0), 1e-300)
    x = x * cs[:, None]
    return x.reshape(n) if x.shape[1] == 1 else x, float(res)
