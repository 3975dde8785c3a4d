
import numpy as np
import pytest

from kn_fermion.affine_action import (
    AffineElement,
    BandedOperator,
    affine_bracket,
    a_action_operator,
    cocycle_alpha,
    direct_sum,
    elementary,
    exact_matrix,
    g_action_operator,
    identity_operator,
    operator_commutator,
    operators_equal,
    representation_defects,
    sl2,
    sl2_irrep,
    stabilizer_nullity,
    tensor_action_operator,
)
from kn_fermion.errors import RankMismatch, WindowTooSmall
from kn_fermion.framed_bundles import random_framed_bundle
from kn_fermion.kn_scalar_basis import band_width, cocycle_gamma, scalar_basis
from kn_fermion.kn_vector_basis import ActionConstants, action_table, index_map, vector_basis

from laurent_oracle import gamma_closed, genus0_operator_column

NAMES = ("e", "f", "h")


def _genus0(rational, l):
    return vector_basis(rational, random_framed_bundle(rational, l, seed=0))


def test_sl2_irreps():
    for l in range(1, 5):
        tau = sl2_irrep(l)
        assert tau.exact and tau.relation_defect() == 0
        assert [tau("h")[s, s] for s in range(l)] == list(range(-(l - 1), l, 2))
    t2 = sl2_irrep(2)
    assert (t2("e") == exact_matrix([[0, 0], [1, 0]])).all()
    assert (t2("f") == exact_matrix([[0, 1], [0, 0]])).all()
    assert t2(sl2().bracket(sl2().basis["e"], sl2().basis["f"])).tolist() == t2("h").tolist()


def test_stabilizer_nullity():
    for l in range(1, 6):
        assert stabilizer_nullity(sl2_irrep(l)) == 1
    assert stabilizer_nullity(direct_sum(sl2_irrep(2), sl2_irrep(2))) == 4
    assert stabilizer_nullity(direct_sum(sl2_irrep(1), sl2_irrep(2))) == 2
    rng = np.random.default_rng(1)
    g = rng.normal(size=(3, 3))
    assert stabilizer_nullity(sl2_irrep(3).conjugated(g.astype(complex))) == 1


def test_banded_operator_algebra():
    E = elementary
    assert operators_equal(E(2, 5) @ E(5, -1), E(2, -1), range(-4, 8)) == 0
    assert operators_equal(operator_commutator(E(1, 2), E(2, 1)), E(1, 1) - E(2, 2), range(-3, 5)) == 0
    assert operators_equal(identity_operator().scaled(3), E(0, 0).scaled(3), [0]) == 0
    bad = BandedOperator(lambda N: [(N + 5, 1)], -1, 1)
    with pytest.raises(ValueError):
        bad.column(0)
    assert cocycle_alpha(E(0, -1), E(-1, 0)) == 1
    assert cocycle_alpha(E(-1, 0), E(0, -1)) == -1
    assert cocycle_alpha(E(1, 2), E(2, 1)) == 0
    assert cocycle_alpha(E(-3, -2), E(-2, -3)) == 0


@pytest.mark.parametrize("l", [1, 2, 3])
def test_genus0_operator_matches_oracle(rational, l):
    vb = _genus0(rational, l)
    tau = sl2_irrep(l)
    for x in NAMES:
        T = tau(x).tolist()
        for m in (-3, 0, 2):
            op = tensor_action_operator(x, m, tau, vb)
            for N in range(-2 * l * l, 2 * l * l):
                assert dict(op.column(N)) == genus0_operator_column(T, m, N, l)


def test_g_action_is_a0_tensor(rational):
    vb = _genus0(rational, 2)
    tau = sl2_irrep(2)
    for x in NAMES:
        d = operators_equal(g_action_operator(x, tau), tensor_action_operator(x, 0, tau, vb), range(-8, 8))
        assert d == 0


def test_affine_bracket_genus0(rational):
    alg = sl2()
    e, f, h = (alg.basis[k] for k in NAMES)
    br = affine_bracket(AffineElement.of(e, 2), AffineElement.of(f, -2), rational)
    assert set(br.parts) == {0} and (br.parts[0] == h).all()
    assert br.central == gamma_closed(alg.form(e, f), 2, -2) == 2
    br = affine_bracket(AffineElement.of(h, 1), AffineElement.of(e, 3), rational)
    assert (br.parts[4] == 2 * e).all() and br.central == 0


@pytest.mark.parametrize("l", [1, 2, 3])
def test_genus0_representation_property(rational, l):
    vb = _genus0(rational, l)
    pairs = [((x, m), (y, n)) for x in NAMES for y in NAMES for m in (-2, 0, 1) for n in (-1, 2)]
    recs = representation_defects(rational, sl2_irrep(l), vb, pairs, range(-3 * l * l, 3 * l * l))
    assert all(r["ok"] and r["deviation"] == 0 for r in recs)


def test_alpha_is_rank_times_gamma(rational):
    alg = sl2()
    vb = _genus0(rational, 2)
    tau = sl2_irrep(2)
    basis = scalar_basis(rational)
    for x in NAMES:
        for y in NAMES:
            for n in (1, 2, -3):
                a = cocycle_alpha(tensor_action_operator(x, n, tau, vb), tensor_action_operator(y, -n, tau, vb))
                g = cocycle_gamma(alg.basis[x], basis.function(n), alg.basis[y], basis.function(-n))
                assert a == 2 * g


def test_genus1_representation_property(torus):
    b = random_framed_bundle(torus, 2, seed=3)
    vb = vector_basis(torus, b)
    pairs = [(("e", -1), ("f", 1)), (("h", 1), ("e", -2)), (("e", 2), ("f", -1)), (("h", 0), ("f", 1))]
    recs = representation_defects(torus, sl2_irrep(2), vb, pairs, range(-6, 6), tol=1e-8)
    assert all(r["ok"] for r in recs), recs


def test_genus1_a_operator_band(torus):
    b = random_framed_bundle(torus, 2, seed=3)
    vb = vector_basis(torus, b)
    for m in (-2, -1, 0, 1):
        op = a_action_operator(m, vb, 2)
        lo, hi = op.observed_band(range(-8, 8))
        assert 4 * m <= lo and hi <= 4 * m + 4 * band_width(1, m)


def test_errors(rational):
    vb = _genus0(rational, 2)
    with pytest.raises(RankMismatch):
        tensor_action_operator("e", 1, sl2_irrep(3), vb)
    table = action_table(rational, random_framed_bundle(rational, 2, seed=0), [1], [0])
    op = tensor_action_operator("e", 1, sl2_irrep(2), table)
    assert op.column(-2) == ((index_map(1, 0, 2, 2), 1),)
    with pytest.raises(WindowTooSmall):
        op.column(-5)
    with pytest.raises(WindowTooSmall):
        tensor_action_operator("e", 3, sl2_irrep(2), ActionConstants(2, 0)).column(0)
    assert op.column(-1) == ()
