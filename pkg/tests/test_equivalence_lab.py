import itertools
from fractions import Fraction

import numpy as np
import pytest

from kn_fermion.affine_action import direct_sum, exact_matrix, g_action_operator, sl2_irrep
from kn_fermion.equivalence_lab import (
    FermionRepData,
    WedgeIsomorphism,
    bag_annihilation,
    check_intertwining,
    degree_profile,
    highest_monomial_image,
    highest_weight_eigenvalue,
    preserves_charge,
    stabilizer_is_scalar,
    stabilizer_nullity,
    tilde_gamma_map,
)
from kn_fermion.errors import NotHighestSlot, RankMismatch, ShapeMismatch, SingularGamma
from kn_fermion.framed_bundles import random_framed_bundle
from kn_fermion.wedge_module import WedgeVector, _make, act_banded, degree, excitations, vacuum, window_monomials

from laurent_oracle import bubble_sign


def _det(g):
    return Fraction(np.linalg.det(np.array(g, dtype=float))).limit_denominator(10 ** 6)


def brute_tilde(g, mono, l):
    """Expand the wedge of ``g`` applied to every factor over a finite block of bags."""
    B = max(-(-mono.tail_start // l), 0) + 1
    occ = mono.indices(B * l)
    out = {}
    for slots in itertools.product(range(l), repeat=len(occ)):
        c = Fraction(1)
        seq = []
        for N, r in zip(occ, slots):
            c *= g[r][N % l]
            seq.append((N // l) * l + r)
        if c == 0:
            continue
        s, srt = bubble_sign(seq)
        if s == 0:
            continue
        key = _make(srt, B * l)
        out[key] = out.get(key, 0) + s * c
    d = _det(g)
    return {k: v / d ** B for k, v in out.items() if v != 0}


def _rand_gamma(rng, l):
    while True:
        g = exact_matrix(rng.integers(-3, 4, size=(l, l)).tolist())
        if abs(np.linalg.det(g.astype(float))) > 0.5:
            return g


def test_identity_and_scalar_gamma():
    v = WedgeVector({vacuum(-3): 1, _make([-5, -2], 1): Fraction(2, 3)})
    assert (tilde_gamma_map(exact_matrix([[1, 0], [0, 1]]), v) - v).is_zero()
    w = tilde_gamma_map(exact_matrix([[3, 0], [0, 3]]), v)
    ratios = {w.coefficient(m) / c for m, c in v.terms.items()}
    assert set(w.terms) == set(v.terms)
    assert all(r != 0 for r in ratios)


def test_permutation_gamma_on_vacua():
    P = exact_matrix([[0, 1], [1, 0]])
    for M in (-6, -4, -2, 0, 2, 4):
        w = tilde_gamma_map(P, vacuum(M))
        # det = -1 per full bag below 0, and 1/det per empty bag at or above 0
        assert w.terms == {vacuum(M): (-1) ** (abs(M) // 2)}


@pytest.mark.parametrize("l", [2, 3])
def test_tilde_gamma_matches_brute_force(l):
    rng = np.random.default_rng(l)
    g = _rand_gamma(rng, l)
    monos = window_monomials(-l, 2 * l - 1, 0)[::3] + [vacuum(-l), vacuum(l)]
    for mono in monos:
        got = tilde_gamma_map(g, mono)
        assert {m: c for m, c in got.terms.items() if c} == brute_tilde(g.tolist(), mono, l)


def test_tilde_gamma_is_multiplicative():
    rng = np.random.default_rng(7)
    g1, g2 = _rand_gamma(rng, 2), _rand_gamma(rng, 2)
    for v in excitations(0, 25) + excitations(-3, 10):
        lhs = tilde_gamma_map(g1, tilde_gamma_map(g2, v))
        assert (lhs - tilde_gamma_map(g1 @ g2, v)).is_zero()


def test_tilde_gamma_errors():
    with pytest.raises(SingularGamma):
        tilde_gamma_map(exact_matrix([[1, 2], [2, 4]]), vacuum(0))
    with pytest.raises(ShapeMismatch):
        tilde_gamma_map(exact_matrix([[1, 2, 3], [4, 5, 6]]), vacuum(0))
    with pytest.raises(ShapeMismatch):
        tilde_gamma_map(exact_matrix([[1, 0], [0, 1]]), vacuum(0), l=3)


def test_isomorphisms_preserve_charge_and_degree():
    rng = np.random.default_rng(2)
    g = _rand_gamma(rng, 2)
    iso = WedgeIsomorphism("tilde_gamma", gamma=g, rank=2)
    vecs = excitations(-1, 20)
    assert preserves_charge(iso, vecs)
    # gamma only moves factors inside their bag, so degrees shift by less than the bag size
    for v in vecs:
        assert all(abs(d - degree(v)) < 2 * len(v.head) + 2 for d in degree_profile(iso(v)))
    shift = WedgeIsomorphism("strong", relabel=lambda N: N)
    both = WedgeIsomorphism("composite", parts=(shift, iso))
    assert all((both(v) - iso(v)).is_zero() for v in vecs)


def test_intertwining_genus0(rational):
    tau = sl2_irrep(2)
    rep1 = FermionRepData(rational, random_framed_bundle(rational, 2, seed=0), tau)
    vecs = excitations(0, 40)
    elems = [(x, m) for x in ("e", "f", "h") for m in (-2, -1, 0, 1, 2)]
    ident = WedgeIsomorphism("tilde_gamma", gamma=exact_matrix([[1, 0], [0, 1]]), rank=2)
    assert check_intertwining(rep1, rep1, ident, elems, vecs).ok
    g = exact_matrix([[2, 1], [1, 1]])
    rep2 = rep1.reframed(g)
    iso = WedgeIsomorphism("tilde_gamma", gamma=g, rank=2)
    rep = check_intertwining(rep1, rep2, iso, elems, vecs)
    assert rep.ok and rep.checked == len(elems) * len(vecs) and rep.max_deviation == 0
    assert check_intertwining(rep1, rep2, iso, elems, excitations(3, 15) + excitations(-2, 15)).ok
    broken = FermionRepData(rational, rep2.bundle, sl2_irrep(2).conjugated(exact_matrix([[1, 1], [0, 1]])))
    bad = check_intertwining(rep1, broken, iso, elems, vecs)
    assert not bad.ok and bad.failures[0]["deviation"] > 0


def test_rep_data_validation(rational):
    with pytest.raises(RankMismatch):
        FermionRepData(rational, random_framed_bundle(rational, 2, seed=0), sl2_irrep(3))
    rep = FermionRepData(rational, random_framed_bundle(rational, 2, seed=0), sl2_irrep(2))
    with pytest.raises(ShapeMismatch):
        rep.reframed(np.eye(3))


def test_stabilizer_examples():
    assert stabilizer_is_scalar(sl2_irrep(3)) and stabilizer_nullity(sl2_irrep(3)) == 1
    two = direct_sum(sl2_irrep(1), sl2_irrep(1))
    assert not stabilizer_is_scalar(two) and stabilizer_nullity(two) >= 2
    assert stabilizer_is_scalar(sl2_irrep(1))


@pytest.mark.parametrize("l", [2, 3])
def test_highest_weight(rational, l):
    rep = FermionRepData(rational, random_framed_bundle(rational, l, seed=0), sl2_irrep(l))
    for M in (-1, l - 1, -l - 1):
        assert highest_weight_eigenvalue(rep, "h", M) == l - 1
        assert act_banded(g_action_operator("e", rep.tau), vacuum(M)).is_zero()
        for x in ("e", "f", "h"):
            lhs = act_banded(g_action_operator(x, rep.tau), vacuum(M))
            assert (lhs - highest_monomial_image(rep, x, M)).is_zero()
    with pytest.raises(NotHighestSlot):
        highest_weight_eigenvalue(rep, "h", 0)


def test_highest_monomial_genus1(torus):
    rep = FermionRepData(torus, random_framed_bundle(torus, 2, seed=3), sl2_irrep(2))
    for x in ("e", "f", "h"):
        lhs = rep.act(x, 0, vacuum(-1))
        assert (lhs - highest_monomial_image(rep, x, -1)).norm() < 1e-9


def test_bag_annihilation(rational):
    rep = FermionRepData(rational, random_framed_bundle(rational, 3, seed=0), sl2_irrep(3))
    for x in ("e", "f", "h"):
        assert all(v == 0 for v in bag_annihilation(rep, x, range(-3, 3)).values())
