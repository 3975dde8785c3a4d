import math

import numpy as np
import pytest

from kn_fermion.weierstrass import Lattice, sample_points


@pytest.fixture(scope="module")
def lat():
    return Lattice(1.0, 0.23 + 1.07j)


def test_square_lattice_invariant():
    # g2 of Z + iZ equals Gamma(1/4)^8 / (16 pi^2); g3 vanishes by symmetry
    L = Lattice(1.0, 1j)
    assert L.g2 == pytest.approx(math.gamma(0.25) ** 8 / (16 * math.pi ** 2), rel=1e-12)
    assert abs(L.g3) < 1e-10


def test_legendre_relation(lat):
    # eta1 w2 - eta2 w1 = 2 pi i with eta = 2 zeta(w/2)
    e1 = 2 * lat.zeta(lat.w1 / 2)
    e2 = 2 * lat.zeta(lat.w2 / 2)
    assert abs(e1 * lat.w2 - e2 * lat.w1 - 2j * math.pi) < 1e-10


def test_wp_differential_equation(lat):
    z = np.array(sample_points(lat, 15, seed=1, avoid=[0], min_dist=0.1))
    p, dp = lat.wp(z), lat.wp_prime(z)
    resid = dp ** 2 - (4 * p ** 3 - lat.g2 * p - lat.g3)
    assert np.max(np.abs(resid) / np.maximum(1, np.abs(dp) ** 2)) < 1e-10


def test_periodicity_and_parity(lat):
    z = np.array(sample_points(lat, 10, seed=2, avoid=[0], min_dist=0.1))
    for w in (lat.w1, lat.w2, lat.omega1, lat.omega2):
        assert np.allclose(lat.wp(z + w), lat.wp(z), rtol=1e-10)
    assert np.allclose(lat.zeta(-z), -lat.zeta(z), rtol=1e-12)
    assert np.allclose(lat.sigma(-z), -lat.sigma(z), rtol=1e-12)


def test_sigma_quasi_periodicity(lat):
    z = 0.31 + 0.17j
    for a, b in [(1, 0), (0, 1), (1, 1), (-2, 1)]:
        lam = a * lat.w1 + b * lat.w2
        sign = (-1) ** (a + b + a * b)
        want = sign * np.exp(lat.eta(a, b) * (z + lam / 2)) * lat.sigma(z)
        assert abs(lat.sigma(z + lam) - want) < 1e-10 * abs(want)


def test_sigma_normalized_at_origin(lat):
    h = 1e-6
    assert abs(lat.sigma(h) / h - 1) < 1e-9


def test_zeta_is_minus_wp_derivative(lat):
    z, h = 0.27 + 0.4j, 1e-5
    d = (lat.zeta(z + h) - lat.zeta(z - h)) / (2 * h)
    assert abs(d + lat.wp(z)) < 1e-6 * abs(lat.wp(z))


def test_local_series_match_direct_evaluation(lat):
    u0, t = 0.21 + 0.33j, 0.01
    assert abs(sum(c * t ** k for k, c in enumerate(lat.wp_taylor(u0, 14))) - lat.wp(u0 + t)) < 1e-12
    s = lat.zeta_series(0, 20)
    approx = sum(s.coefficient(k) * t ** k for k in range(-1, 19))
    assert abs(approx - lat.zeta(t)) < 1e-12 * abs(lat.zeta(t))
    order, S = lat.log_sigma_series(0, 16)
    assert order == 1
    approx = math.log(t) + sum(S.coefficient(k) * t ** k for k in range(0, 16))
    assert abs(np.exp(approx) - lat.sigma(t)) < 1e-12


def test_reduction_and_lattice_points(lat):
    z = 0.4 + 0.2j + 3 * lat.w1 - 2 * lat.w2
    z0, a, b = lat.reduce(z)
    assert (a, b) == (3, -2) and abs(z0 - (0.4 + 0.2j)) < 1e-12
    assert lat.is_lattice_point(2 * lat.w1 + lat.w2)
    assert not lat.is_lattice_point(0.5 * lat.w1)
    assert lat.congruent(0.1, 0.1 + lat.omega2)


def test_sample_points_deterministic(lat):
    a = sample_points(lat, 5, seed=4, avoid=[0.0], min_dist=0.1)
    b = sample_points(lat, 5, seed=4, avoid=[0.0], min_dist=0.1)
    assert a == b
    assert all(lat.distance(p, 0) >= 0.1 for p in a)
