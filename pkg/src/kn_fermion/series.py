"""Truncated Laurent series in one local parameter.

A series is stored as ``val`` (the exponent of the first stored coefficient)
and a coefficient array.  The series is known exactly for every exponent
below ``prec = val + len(coeffs)``.  Coefficient arrays have dtype ``object``
when the entries are exact (``int``/``Fraction``) and ``complex128``
otherwise; mixing the two promotes to complex.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from numbers import Number

import numpy as np


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def as_coeff_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object) if not isinstance(values, np.ndarray) else values
    if arr.dtype == object:
        flat = list(arr.ravel())
        if all(_is_exact_scalar(v) for v in flat):
            return np.array([Fraction(v) for v in flat], dtype=object).reshape(arr.shape)
        return np.array([complex(v) for v in flat], dtype=complex).reshape(arr.shape)
    return arr.astype(complex)


def _promote(a: np.ndarray, b: np.ndarray):
    if a.dtype == b.dtype:
        return a, b
    return a.astype(complex), b.astype(complex)


def _zeros(n: int, exact: bool) -> np.ndarray:
    if exact:
        return np.array([Fraction(0)] * n, dtype=object)
    return np.zeros(n, dtype=complex)


class LaurentSeries:
    __slots__ = ("val", "coeffs")

    def __init__(self, val: int, coeffs):
        self.val = int(val)
        self.coeffs = as_coeff_array(coeffs)
        if self.coeffs.ndim != 1 or len(self.coeffs) == 0:
            raise ValueError("a series needs a non-empty 1-d coefficient array")

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, c, n_terms: int, exact: bool | None = None) -> "LaurentSeries":
        if exact is None:
            exact = _is_exact_scalar(c)
        arr = _zeros(n_terms, exact)
        arr[0] = Fraction(c) if exact else complex(c)
        return cls(0, arr)

    @classmethod
    def monomial(cls, k: int, n_terms: int, c=1) -> "LaurentSeries":
        s = cls.constant(c, n_terms)
        s.val = int(k)
        return s

    # -- basic properties ----------------------------------------------
    @property
    def exact(self) -> bool:
        return self.coeffs.dtype == object

    @property
    def prec(self) -> int:
        return self.val + len(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def coefficient(self, k: int):
        if k >= self.prec:
            raise IndexError(f"coefficient of t^{k} unknown (precision {self.prec})")
        if k < self.val:
            return Fraction(0) if self.exact else 0j
        return self.coeffs[k - self.val]

    def coefficients(self, start: int, stop: int) -> np.ndarray:
        return np.array([self.coefficient(k) for k in range(start, stop)], dtype=self.coeffs.dtype)

    def residue(self):
        return self.coefficient(-1)

    def __repr__(self) -> str:
        head = ", ".join(str(c) for c in self.coeffs[:6])
        more = ", ..." if len(self.coeffs) > 6 else ""
        return f"LaurentSeries(val={self.val}, [{head}{more}], prec={self.prec})"

    # -- reshaping -----------------------------------------------------
    def truncate(self, prec: int) -> "LaurentSeries":
        if prec > self.prec:
            raise IndexError("cannot extend precision by truncation")
        n = max(prec - self.val, 1)
        return LaurentSeries(self.val, self.coeffs[:n])

    def extended_to(self, val: int) -> "LaurentSeries":
        """Same series re-expressed starting at a lower exponent."""
        if val > self.val:
            raise ValueError("can only lower the starting exponent")
        pad = _zeros(self.val - val, self.exact)
        return LaurentSeries(val, np.concatenate([pad, self.coeffs]))

    def strip(self, tol: float = 0.0) -> "LaurentSeries":
        """Drop leading coefficients that are zero (or below ``tol`` in modulus)."""
        c = self.coeffs
        i = 0
        if self.exact:
            while i < len(c) - 1 and c[i] == 0:
                i += 1
        else:
            while i < len(c) - 1 and abs(c[i]) <= tol:
                i += 1
        return LaurentSeries(self.val + i, c[i:])

    def shift(self, k: int) -> "LaurentSeries":
        return LaurentSeries(self.val + k, self.coeffs.copy())

    def astype_complex(self) -> "LaurentSeries":
        return LaurentSeries(self.val, self.coeffs.astype(complex))

    # -- arithmetic ----------------------------------------------------
    def __neg__(self):
        return LaurentSeries(self.val, -self.coeffs)

    def __add__(self, other):
        if isinstance(other, Number):
            other = LaurentSeries.constant(other, max(self.prec, 1), exact=_is_exact_scalar(other))
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        val = min(self.val, other.val)
        prec = min(self.prec, other.prec)
        if prec <= val:
            raise ValueError("sum has no known coefficients")
        a, b = _promote(self.coeffs, other.coeffs)
        out = np.zeros(prec - val, dtype=a.dtype) if a.dtype != object else _zeros(prec - val, True)
        na = min(len(a), prec - self.val)
        nb = min(len(b), prec - other.val)
        out[self.val - val:self.val - val + na] += a[:na]
        out[other.val - val:other.val - val + nb] += b[:nb]
        return LaurentSeries(val, out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            if self.exact and not _is_exact_scalar(other):
                return LaurentSeries(self.val, self.coeffs.astype(complex) * complex(other))
            return LaurentSeries(self.val, self.coeffs * other)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        n = min(len(self), len(other))
        a, b = _promote(self.coeffs[:n], other.coeffs[:n])
        return LaurentSeries(self.val + other.val, np.convolve(a, b)[:n])

    __rmul__ = __mul__

    def inverse(self) -> "LaurentSeries":
        c = self.coeffs
        if (self.exact and c[0] == 0) or (not self.exact and c[0] == 0):
            raise ZeroDivisionError("leading coefficient is zero; strip the series first")
        n = len(c)
        out = _zeros(n, self.exact)
        inv0 = Fraction(1) / c[0] if self.exact else 1.0 / c[0]
        out[0] = inv0
        for k in range(1, n):
            acc = c[1:k + 1] @ out[k - 1::-1] if k else 0
            out[k] = -inv0 * acc
        return LaurentSeries(-self.val, out)

    def __truediv__(self, other):
        if isinstance(other, Number):
            if self.exact and _is_exact_scalar(other):
                return self * (Fraction(1) / Fraction(other))
            return self * (1.0 / complex(other))
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        k = int(k)
        if k < 0:
            return self.inverse() ** (-k)
        result = LaurentSeries.constant(1, len(self), exact=self.exact)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self) -> "LaurentSeries":
        ks = np.arange(self.val, self.prec)
        if self.exact:
            out = np.array([Fraction(int(k)) * c for k, c in zip(ks, self.coeffs)], dtype=object)
        else:
            out = self.coeffs * ks
        return LaurentSeries(self.val - 1, out)

    def exp(self) -> "LaurentSeries":
        """``exp`` of a series with no negative powers."""
        if self.val < 0:
            raise ValueError("exp needs a series without a principal part")
        s = self.extended_to(0).coeffs.astype(complex)
        n = len(s)
        g = np.zeros(n, dtype=complex)
        g[0] = cmath.exp(s[0])
        js = np.arange(n)
        for k in range(1, n):
            g[k] = (js[1:k + 1] * s[1:k + 1]) @ g[k - 1::-1] / k
        return LaurentSeries(0, g)


def series_from_polynomial(coeffs, n_terms: int) -> LaurentSeries:
    """Power series of a polynomial given low-to-high, padded to ``n_terms``."""
    arr = as_coeff_array(list(coeffs) if len(coeffs) else [0])
    exact = arr.dtype == object
    out = _zeros(max(n_terms, len(arr)), exact)
    out[:len(arr)] = arr
    return LaurentSeries(0, out[:max(n_terms, 1)])
