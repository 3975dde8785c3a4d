"""Weierstrass sigma, zeta and wp for a lattice in the complex plane.

Values come from the Jacobi theta series of a Gauss-reduced period basis,
so the nome satisfies ``|q| <= exp(-pi*sqrt(3)/2)`` and a fixed number of
terms reaches double precision.  Arguments are first reduced to the centred
period parallelogram and the quasi-periodicity of sigma and zeta is applied
analytically.

Local series come from the Laurent expansion of wp at a lattice point
(Eisenstein recursion in g2, g3) and, at regular points, from the
differential equation ``wp'' = 6 wp^2 - g2/2``.
"""

from __future__ import annotations

import math

import numpy as np

from .series import LaurentSeries

_THETA_TERMS = 12
CONGRUENCE_TOL = 1e-10


def _gauss_reduce(w1: complex, w2: complex) -> tuple[complex, complex]:
    for _ in range(200):
        tau = w2 / w1
        shift = round(tau.real)
        if shift:
            w2 -= shift * w1
            tau = w2 / w1
        if abs(tau) < 1 - 1e-14:
            w1, w2 = w2, -w1
            continue
        return w1, w2
    raise RuntimeError("lattice reduction did not converge")


class Lattice:
    """Period lattice ``Z*omega1 + Z*omega2`` with cached invariants."""

    def __init__(self, omega1: complex, omega2: complex):
        omega1, omega2 = complex(omega1), complex(omega2)
        if (omega2 / omega1).imag < 0:
            omega2 = -omega2
        self.omega1, self.omega2 = omega1, omega2
        self.w1, self.w2 = _gauss_reduce(omega1, omega2)
        self.tau = self.w2 / self.w1
        self._basis = np.array([[self.w1.real, self.w2.real], [self.w1.imag, self.w2.imag]])
        self._basis_inv = np.linalg.inv(self._basis)
        n = np.arange(_THETA_TERMS)
        self._odd = 2 * n + 1
        self._a = (-1.0) ** n * np.exp(1j * math.pi * self.tau * (n + 0.5) ** 2)
        th1p0 = 2 * np.sum(self._a * self._odd)
        th1ppp0 = -2 * np.sum(self._a * self._odd ** 3)
        self._th1p0 = th1p0
        self.H1 = -(math.pi ** 2) / (3 * self.w1) * th1ppp0 / th1p0
        self.H2 = (self.H1 * self.w2 - 2j * math.pi) / self.w1
        e1 = complex(self.wp(self.w1 / 2))
        e2 = complex(self.wp(self.w2 / 2))
        e3 = complex(self.wp((self.w1 + self.w2) / 2))
        self.e = (e1, e2, e3)
        self.g2 = 2 * (e1 * e1 + e2 * e2 + e3 * e3)
        self.g3 = 4 * e1 * e2 * e3
        self._laurent_c = [0j, 0j]  # c_0, c_1 unused
        self.scale = min(abs(self.w1), abs(self.w2))

    # -- lattice geometry -------------------------------------------------
    def coords(self, z):
        z = np.asarray(z, dtype=complex)
        xy = np.stack([z.real, z.imag])
        return np.tensordot(self._basis_inv, xy, axes=1)

    def reduce(self, z):
        """Split ``z = z0 + a*w1 + b*w2`` with ``z0`` in the centred cell."""
        ab = self.coords(z)
        k = np.round(ab)
        z0 = np.asarray(z, dtype=complex) - k[0] * self.w1 - k[1] * self.w2
        return z0, k[0].astype(int), k[1].astype(int)

    def eta(self, a, b):
        """Quasi-period ``zeta(z + lam) - zeta(z)`` for ``lam = a*w1 + b*w2``."""
        return a * self.H1 + b * self.H2

    def is_lattice_point(self, z, tol: float = CONGRUENCE_TOL) -> bool:
        z0, _, _ = self.reduce(z)
        return bool(abs(z0) <= tol * self.scale)

    def congruent(self, z, w, tol: float = CONGRUENCE_TOL) -> bool:
        return self.is_lattice_point(complex(z) - complex(w), tol)

    def distance(self, z, w) -> float:
        """Distance from ``z`` to the nearest translate of ``w``."""
        z0, _, _ = self.reduce(complex(z) - complex(w))
        z0 = complex(z0)
        best = abs(z0)
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                best = min(best, abs(z0 + i * self.w1 + j * self.w2))
        return best

    def lattice_point(self, z, tol: float = 1e-6):
        """``(a, b)`` if ``z`` is within ``tol`` (relative) of ``a*w1+b*w2``, else None."""
        z0, a, b = self.reduce(z)
        if abs(complex(z0)) <= tol * self.scale:
            return int(a), int(b)
        return None

    # -- theta series -------------------------------------------------------
    def _theta(self, v):
        v = np.asarray(v, dtype=complex)[..., None]
        arg = self._odd * v
        s, c = np.sin(arg), np.cos(arg)
        a = self._a
        t0 = 2 * np.sum(a * s, axis=-1)
        t1 = 2 * np.sum(a * self._odd * c, axis=-1)
        t2 = -2 * np.sum(a * self._odd ** 2 * s, axis=-1)
        t3 = -2 * np.sum(a * self._odd ** 3 * c, axis=-1)
        return t0, t1, t2, t3

    # -- Weierstrass functions ----------------------------------------------
    def log_sigma(self, z):
        z = np.asarray(z, dtype=complex)
        z0, a, b = self.reduce(z)
        v = math.pi * z0 / self.w1
        t0, _, _, _ = self._theta(v)
        with np.errstate(divide="ignore"):
            val = (np.log(self.w1 / math.pi) + self.H1 / 2 * z0 ** 2 / self.w1
                   + np.log(t0.astype(complex)) - np.log(self._th1p0))
        lam = a * self.w1 + b * self.w2
        parity = (a + b + a * b) % 2
        return val + self.eta(a, b) * (z0 + lam / 2) + 1j * math.pi * parity

    def sigma(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.exp(self.log_sigma(z))
        z0, _, _ = self.reduce(z)
        return np.where(z0 == 0, 0j, out)

    def zeta(self, z):
        z = np.asarray(z, dtype=complex)
        z0, a, b = self.reduce(z)
        v = math.pi * z0 / self.w1
        t0, t1, _, _ = self._theta(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.H1 * z0 / self.w1 + (math.pi / self.w1) * t1 / t0 + self.eta(a, b)

    def wp(self, z):
        z = np.asarray(z, dtype=complex)
        z0, _, _ = self.reduce(z)
        v = math.pi * z0 / self.w1
        t0, t1, t2, _ = self._theta(v)
        k = math.pi / self.w1
        with np.errstate(divide="ignore", invalid="ignore"):
            r1, r2 = t1 / t0, t2 / t0
            return -self.H1 / self.w1 - k * k * (r2 - r1 * r1)

    def wp_prime(self, z):
        z = np.asarray(z, dtype=complex)
        z0, _, _ = self.reduce(z)
        v = math.pi * z0 / self.w1
        t0, t1, t2, t3 = self._theta(v)
        k = math.pi / self.w1
        with np.errstate(divide="ignore", invalid="ignore"):
            r1, r2, r3 = t1 / t0, t2 / t0, t3 / t0
            return -k ** 3 * (r3 - 3 * r1 * r2 + 2 * r1 ** 3)

    # -- local series -------------------------------------------------------
    def laurent_c(self, kmax: int) -> list:
        """``c_k`` with ``wp(u) = u^-2 + sum_{k>=2} c_k u^(2k-2)``."""
        c = self._laurent_c
        while len(c) <= kmax:
            k = len(c)
            if k == 2:
                c.append(self.g2 / 20)
            elif k == 3:
                c.append(self.g3 / 28)
            else:
                s = sum(c[m] * c[k - m] for m in range(2, k - 1))
                c.append(3 * s / ((2 * k + 1) * (k - 3)))
        return c[:kmax + 1]

    def wp_taylor(self, u0: complex, n: int) -> np.ndarray:
        """Taylor coefficients of ``wp(u0 + t)`` at a regular point."""
        p = np.zeros(max(n, 2), dtype=complex)
        p[0] = complex(self.wp(u0))
        p[1] = complex(self.wp_prime(u0))
        for k in range(0, n - 2):
            conv = p[:k + 1] @ p[k::-1]
            p[k + 2] = (6 * conv - (self.g2 / 2 if k == 0 else 0)) / ((k + 2) * (k + 1))
        return p[:n]

    def zeta_series(self, u0: complex, n: int) -> LaurentSeries:
        """Series of ``zeta(u0 + t)`` with ``n`` coefficients."""
        lat = self.lattice_point(u0, CONGRUENCE_TOL)
        if lat is not None:
            out = np.zeros(n, dtype=complex)
            out[0] = 1.0
            if n > 1:
                out[1] = self.eta(*lat)
            c = self.laurent_c(n // 2 + 2)
            for k in range(2, len(c)):
                idx = 2 * k - 1 + 1  # exponent 2k-1, val -1
                if idx < n:
                    out[idx] = -c[k] / (2 * k - 1)
            return LaurentSeries(-1, out)
        p = self.wp_taylor(u0, max(n - 1, 1))
        out = np.zeros(n, dtype=complex)
        out[0] = complex(self.zeta(u0))
        for k in range(n - 1):
            out[k + 1] = -p[k] / (k + 1)
        return LaurentSeries(0, out)

    def log_sigma_series(self, u0: complex, n: int) -> tuple[int, LaurentSeries]:
        """``sigma(u0 + t) = t^order * exp(S(t))``; returns ``(order, S)``."""
        lat = self.lattice_point(u0, CONGRUENCE_TOL)
        out = np.zeros(max(n, 2), dtype=complex)
        if lat is not None:
            a, b = lat
            lam = a * self.w1 + b * self.w2
            eta = self.eta(a, b)
            out[0] = eta * lam / 2 + 1j * math.pi * ((a + b + a * b) % 2)
            out[1] = eta
            c = self.laurent_c(n // 2 + 2)
            for k in range(2, len(c)):
                if 2 * k < len(out):
                    out[2 * k] += -c[k] / ((2 * k - 1) * 2 * k)
            return 1, LaurentSeries(0, out[:n])
        p = self.wp_taylor(u0, max(n - 2, 1))
        out[0] = complex(self.log_sigma(u0))
        out[1] = complex(self.zeta(u0))
        for k in range(n - 2):
            out[k + 2] = -p[k] / ((k + 1) * (k + 2))
        return 0, LaurentSeries(0, out[:n])


def sample_points(lattice: Lattice, count: int, seed: int = 0, avoid=(), min_dist: float = 0.05):
    """Deterministic points in the fundamental cell away from ``avoid``."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        a, b = rng.uniform(-0.5, 0.5, size=2)
        z = a * lattice.w1 + b * lattice.w2
        if all(lattice.distance(z, w) > min_dist * lattice.scale for w in list(avoid) + pts):
            pts.append(complex(z))
    return pts
