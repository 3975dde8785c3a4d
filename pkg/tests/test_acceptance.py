"""One test group per acceptance criterion; the summary prints a PASS/FAIL line for each."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from kn_fermion.affine_action import (
    AffineElement,
    a_action_operator,
    affine_bracket,
    exact_matrix,
    identity_operator,
    sl2,
    sl2_irrep,
    stabilizer_nullity,
    tensor_action_operator,
)
from kn_fermion.equivalence_lab import FermionRepData, WedgeIsomorphism, bag_annihilation, check_intertwining
from kn_fermion.framed_bundles import random_framed_bundle, tyurin_defects
from kn_fermion.kn_scalar_basis import (
    band_width,
    cocycle_gamma,
    residue_pairing,
    scalar_basis,
    scalar_structure_constants,
)
from kn_fermion.kn_vector_basis import (
    action_table,
    build_psi_matrix,
    index_inverse,
    psi_linear_system,
    vector_basis,
)
from kn_fermion.wedge_module import (
    WedgeVector,
    act_banded,
    act_elementary,
    canonicalize,
    excitations,
    vacuum,
    vacuum_projection,
    vacuum_weight_formula,
    verify_commutators,
)

from laurent_oracle import LPoly, gamma_closed, genus0_operator_column, res_B_dA

GENS = ("e", "f", "h")
RANGE8 = range(-8, 9)


def _coeffs(f, point, lo, hi):
    lo_bound = f.order_bound(point)
    if lo_bound > hi:
        return {k: 0 for k in range(lo, hi + 1)}
    s = f.series(point, hi - lo_bound + 1)
    return {k: s.coefficient(k) for k in range(lo, hi + 1)}


# -- 1. genus-0 oracle equivalence ---------------------------------------------------

def test_criterion_1_scalar_basis(rational, note):
    b = scalar_basis(rational)
    for m in RANGE8:
        z = LPoly.mono(m)
        assert _coeffs(b.function(m), "+", m - 3, m + 3) == {k: z.coeff(k) for k in range(m - 3, m + 4)}
        w = z.at_infinity()
        assert _coeffs(b.function(m), "-", -m - 3, -m + 3) == {k: w.coeff(k) for k in range(-m - 3, -m + 4)}
    for m, n in itertools.product(RANGE8, RANGE8):
        prod = LPoly.mono(m) * LPoly.mono(n)
        assert scalar_structure_constants(rational, m, n) == {k: c for k, c in prod.terms.items() if c}
        assert residue_pairing(b.function(m), b.function(n)) == res_B_dA(LPoly.mono(n), LPoly.mono(m))
    note(f"scalar: {len(RANGE8) ** 2} products and residues")


@pytest.mark.parametrize("l", [1, 2, 3])
def test_criterion_1_vector_basis_and_action(rational, note, l):
    bundle = random_framed_bundle(rational, l, seed=0)
    vb = vector_basis(rational, bundle)
    for n in RANGE8:
        psi = build_psi_matrix(rational, bundle, n, method="solve")
        for j, i in itertools.product(range(l), repeat=2):
            ref = LPoly.mono(n) if i == j else LPoly()
            got = _coeffs(psi.entry(i, j), "+", n - 2, n + 2)
            assert got == {k: ref.coeff(k) for k in range(n - 2, n + 3)}
    table = action_table(rational, bundle, RANGE8, RANGE8, basis=vb)
    nz = table.nonzero()
    assert nz == {(m, n, j, m + n, j): 1 for m in RANGE8 for n in RANGE8 for j in range(l)}
    tau = sl2_irrep(l)
    cols = 0
    for x in GENS:
        T = tau(x).tolist()
        for m in RANGE8:
            op = tensor_action_operator(x, m, tau, table)
            for N in range(-2 * l * l, 2 * l * l, 3):
                assert dict(op.column(N)) == genus0_operator_column(T, m, N, l)
                cols += 1
    note(f"l={l}: Psi_n, {len(nz)} constants, {cols} operator columns")


def test_criterion_1_affine_bracket(rational, note):
    alg = sl2()
    count = 0
    for x, y in itertools.product(GENS, repeat=2):
        X, Y = alg.basis[x], alg.basis[y]
        for m, n in itertools.product(range(-8, 9, 2), range(-8, 9, 3)):
            br = affine_bracket(AffineElement.of(X, m), AffineElement.of(Y, n), rational)
            xy = X @ Y - Y @ X
            expected = {m + n: xy} if any(v != 0 for v in xy.ravel()) else {}
            assert {k: v for k, v in br.pruned().parts.items()} .keys() == expected.keys()
            for k in expected:
                assert (br.parts[k] == expected[k]).all()
            assert br.central == gamma_closed(alg.form(X, Y), m, n)
            count += 1
    note(f"bracket: {count} pairs")


# -- 2. commutator suite ---------------------------------------------------------------

def test_criterion_2_commutators(note):
    rep = verify_commutators(-6, 6, 0)
    note(f"{rep.checked} monomial checks, {len(rep.failures)} failures")
    assert rep.ok
    # generic code path on a slice of the window
    assert verify_commutators(-3, 3, 0, fast=False).ok


def test_criterion_2_central_term_placement(note):
    bare = verify_commutators(-6, 6, 0, central=False)
    flagged = {f[:4] for f in bare.failures}
    table = {(I, J, J, I) for I in range(0, 7) for J in range(-6, 0)}
    table |= {(J, I, I, J) for (I, J, _, _) in table}
    note(f"central term needed for {len(flagged)} quadruples")
    assert flagged == table


# -- 3. vacuum weights at genus 1 ----------------------------------------------------------

def test_criterion_3_vacuum_weights(torus, note):
    bundle = random_framed_bundle(torus, 1, seed=0)
    vb = vector_basis(torus, bundle)
    worst_in, worst_out, largest = 0.0, 0.0, 0.0
    for m in range(-3, 4):
        op = a_action_operator(m, vb, 1, genus=1)
        for M in range(-5, 0):
            w = vacuum_projection(op, M)
            if m in (-1, 0):
                largest = max(largest, abs(w))
                worst_in = max(worst_in, abs(w - vacuum_weight_formula(vb, m, M, 1)))
            else:
                worst_out = max(worst_out, abs(w))
    note(f"weights up to {largest:.2f}; max |wedge - formula| = {worst_in:.1e}, "
         f"max |projection| off range = {worst_out:.1e}")
    assert worst_in <= 1e-7 and worst_out <= 1e-9


# -- 4. identity weight on vacua -------------------------------------------------------------

def test_criterion_4_identity_weight(note):
    observed, expected = {}, {}
    for M in range(-8, 9):
        direct = WedgeVector()
        for N in range(-12, 13):
            direct = direct + act_elementary(N, N, vacuum(M))
        banded = act_banded(identity_operator(), vacuum(M))
        assert (direct - banded).is_zero()
        observed[M] = banded.coefficient(vacuum(M))
        expected[M] = -M if M < 0 else 0
    bad = sorted(M for M in observed if observed[M] != expected[M])
    note("mismatch at M=" + ",".join(map(str, bad)) if bad else "all M in [-8, 8]")
    assert not bad, {M: (observed[M], expected[M]) for M in bad}


# -- 5. dimension and uniqueness of Psi_n ------------------------------------------------------

def _nullity(rows, cols):
    if not len(rows):
        return cols
    A = np.array(rows, dtype=complex).reshape(len(rows), cols)
    A = A / np.maximum(np.linalg.norm(A, axis=1, keepdims=True), 1e-300)
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s < 1e-8 * s[0])) + max(cols - len(rows), 0)


def test_criterion_5_psi_uniqueness(torus, note):
    l = 2
    worst = 0.0
    for seed in range(10):
        bundle = random_framed_bundle(torus, l, seed=100 + seed)
        for n in (-2, -1, 0, 1, 2):
            basis, trows, plus, minus = psi_linear_system(torus, bundle, n)
            r = len(basis)
            assert _nullity(trows, l * r) == l
            for j in range(l):
                norm = [[0j] * (l * r) for _ in range(l)]
                for i in range(l):
                    src = plus if i >= j else minus
                    norm[i][i * r:(i + 1) * r] = [complex(c) for c in src]
                assert _nullity(list(trows) + norm, l * r) == 0
            psi = build_psi_matrix(torus, bundle, n)
            for col in psi.columns:
                worst = max(worst, max(tyurin_defects(col, bundle)))
    note(f"10 bundles x 5 n; worst Tyurin defect {worst:.1e}")
    assert worst <= 1e-7


# -- 6. band bounds -------------------------------------------------------------------------------

def test_criterion_6_band(torus, note):
    l = 2
    bundle = random_framed_bundle(torus, l, seed=3)
    vb = vector_basis(torus, bundle)
    table = action_table(torus, bundle, range(-4, 5), range(-4, 5), basis=vb)
    bad = []
    for (m, n, j, k, jp), c in table.nonzero(1e-8).items():
        if not (m + n <= k <= m + n + band_width(1, m)):
            bad.append((m, n, j, k, jp))
    flat_bad = []
    for m in range(-4, 5):
        op = a_action_operator(m, table, l, genus=1)
        for N in range(-4 * l * l + l * l, 4 * l * l):
            if not -4 <= index_inverse(N, l)[0] <= 4:
                continue
            for R, c in op.column(N):
                if not l * l * m <= R - N <= l * l * (m + band_width(1, m)):
                    flat_bad.append((m, N, R))
    note(f"{len(table.nonzero(1e-8))} nonzero constants, {len(bad)} outside the band, "
         f"{len(flat_bad)} flattened escapes")
    assert not bad and not flat_bad


# -- 7. cocycle ------------------------------------------------------------------------------------

def test_criterion_7_closed_form(rational, note):
    alg = sl2()
    b = scalar_basis(rational)
    count = 0
    for x, y in itertools.product(GENS, repeat=2):
        X, Y = alg.basis[x], alg.basis[y]
        for n, m in itertools.product(range(-10, 11), repeat=2):
            assert cocycle_gamma(X, b.function(n), Y, b.function(m)) == gamma_closed(alg.form(X, Y), n, m)
            count += 1
    note(f"genus 0: {count} exact values")


def test_criterion_7_cocycle_identity_genus1(torus, note):
    alg = sl2()
    b = scalar_basis(torus)
    br = alg.bracket
    worst = 0.0
    for (x, m), (y, n), (w, k) in itertools.combinations(
            [(g, d) for g in GENS for d in (-2, -1, 0, 1, 2)], 3):
        X, Y, W = alg.basis[x], alg.basis[y], alg.basis[w]
        A, B, C = b.function(m), b.function(n), b.function(k)
        total = (cocycle_gamma(br(X, Y), A * B, W, C) + cocycle_gamma(br(Y, W), B * C, X, A)
                 + cocycle_gamma(br(W, X), C * A, Y, B))
        worst = max(worst, abs(complex(total)))
    note(f"genus 1: max cyclic sum {worst:.1e}")
    assert worst <= 1e-7


# -- 8. equivalence under framing change ---------------------------------------------------------------

def test_criterion_8_intertwining(rational, note):
    rng = np.random.default_rng(2024)
    tau = sl2_irrep(2)
    rep1 = FermionRepData(rational, random_framed_bundle(rational, 2, seed=0), tau)
    vecs = excitations(0, 40)
    elems = [(x, m) for x in GENS for m in (-2, -1, 0, 1, 2)]
    done = 0
    while done < 5:
        g = exact_matrix([[Fraction(int(a), int(d)) for a, d in zip(r, rng.integers(1, 4, size=2))]
                          for r in rng.integers(-4, 5, size=(2, 2))])
        if g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0] == 0:
            continue
        iso = WedgeIsomorphism("tilde_gamma", gamma=g, rank=2)
        good = check_intertwining(rep1, rep1.reframed(g), iso, elems, vecs)
        assert good.ok and good.max_deviation == 0
        broken_tau = tau.conjugated(g @ exact_matrix([[1, 1], [0, 1]]))
        broken = FermionRepData(rational, rep1.reframed(g).bundle, broken_tau, rep1.constants)
        assert not check_intertwining(rep1, broken, iso, elems, vecs).ok
        done += 1
    note(f"5 gammas x {len(elems) * len(vecs)} checks exact; perturbed tau' rejected")


def test_criterion_8_schur(note):
    nul = {l: stabilizer_nullity(sl2_irrep(l)) for l in range(2, 6)}
    note(f"nullities {nul}")
    assert all(v == 1 for v in nul.values())


# -- 9. highest monomials -----------------------------------------------------------------------------

def _wedge_oracle(T, M, l):
    """``(tau(x) psi_M) ^ psi_{M+1} ^ ...`` written out and sorted."""
    out = WedgeVector()
    base = (M // l) * l
    for s in range(l):
        c = T[s][l - 1]
        if c == 0:
            continue
        sign, mono = canonicalize([base + s] + list(range(M + 1, M + l + 1)))
        if sign:
            out.add(mono, sign * c)
    return out


@pytest.mark.parametrize("l", [2, 3, 4])
def test_criterion_9_highest_monomials(rational, note, l):
    tau = sl2_irrep(l)
    rep = FermionRepData(rational, random_framed_bundle(rational, l, seed=0), tau)
    count = 0
    for b in range(-3, 3):
        M = b * l + l - 1
        assert index_inverse(M, l)[2] == l
        for x in GENS:
            got = rep.act(x, 0, vacuum(M))
            assert (got - _wedge_oracle(tau(x).tolist(), M, l)).is_zero()
            count += 1
    ann = {x: bag_annihilation(rep, x, range(-4, 4)) for x in GENS}
    assert all(v == 0 for d in ann.values() for v in d.values())
    for b in range(-4, 4):
        for x in GENS:
            assert rep.act(x, 0, vacuum(b * l)).is_zero()
    note(f"l={l}: {count} highest vacua, 8 full-bag vacua")
