import math

import numpy as np
import pytest

from tsfp.algebra import OperatorPolynomial, bose_hubbard_operator, kerr_operator
from tsfp.grid import PhaseGrid
from tsfp.oracle import (FockBasis, Propagator, build_operator, coherent_overlaps, coherent_state,
                         evolve_state, expectation_identity_check, husimi,
                         husimi_time_derivative, ladder, number_state, tail_mass)

a = OperatorPolynomial.annihilation(0)
ad = OperatorPolynomial.creation(0)


def test_ladder_matrix():
    M = ladder(4).toarray()
    assert np.allclose(np.diag(M, 1), [1, math.sqrt(2), math.sqrt(3)])
    assert np.count_nonzero(M) == 3


def test_number_operator_matrix():
    M = build_operator(ad * a, FockBasis((4,))).dense()
    assert np.allclose(M, np.diag([0, 1, 2, 3]))


def test_two_site_hopping_against_kron():
    basis = FockBasis((3, 3))
    H = build_operator(-1 * (bose_hubbard_operator(2, 1, 0)), basis)
    A = ladder(3).toarray()
    I = np.eye(3)
    a1, a2 = np.kron(A, I), np.kron(I, A)
    ref = a1.conj().T @ a2 + a2.conj().T @ a1
    assert H.hermitian
    assert np.abs(H.dense() - ref).max() < 1e-14


def test_basis_requires_two_levels():
    with pytest.raises(ValueError):
        FockBasis((1,))


def test_non_hermitian_propagation_rejected():
    H = build_operator(a, FockBasis((5,)), check_hermitian=False)
    with pytest.raises(ValueError):
        Propagator(H)


def test_rotation_of_coherent_state():
    basis = FockBasis((40,))
    psi = coherent_state([1.0 + 0.5j], basis)
    H = build_operator(ad * a, basis)
    t = 0.7
    out = evolve_state(psi, H, t)
    ref = coherent_state([(1.0 + 0.5j) * np.exp(-1j * t)], basis)
    assert np.abs(out - ref).max() < 1e-12
    assert np.array_equal(evolve_state(psi, H, 0.0), psi)


def test_kerr_revival():
    basis = FockBasis((40,))
    U = 0.5
    H = build_operator(kerr_operator(0, U), basis)
    psi = coherent_state([1.5], basis)
    psi /= np.linalg.norm(psi)
    out = evolve_state(psi, H, 2 * math.pi / U)
    assert abs(abs(np.vdot(psi, out)) - 1) < 1e-8


def test_krylov_matches_eigh():
    basis = FockBasis((6, 6))
    H = build_operator(bose_hubbard_operator(2, 1, 0.7), basis)
    psi = coherent_state([0.5, 0.3j], basis)
    psi /= np.linalg.norm(psi)
    a1 = Propagator(H, "eigh")(psi, 0.9)
    a2 = Propagator(H, "krylov")(psi, 0.9)
    assert np.abs(a1 - a2).max() < 1e-10


def test_overlaps_do_not_underflow():
    ov = coherent_overlaps(np.array([40.0]), 3000)
    assert np.isfinite(ov).all()
    # Poisson weights peak at n = |alpha|^2 (tied with n - 1)
    assert np.argmax(np.abs(ov[0])) in (1599, 1600)


@pytest.mark.parametrize("state,ref", [
    ("vacuum", lambda r2, al: np.exp(-r2) / math.pi),
    ("coherent", lambda r2, al: np.exp(-np.abs(al - (1 - 1j)) ** 2) / math.pi),
    ("fock1", lambda r2, al: r2 * np.exp(-r2) / math.pi),
])
def test_husimi_closed_forms(state, ref):
    basis = FockBasis((40,))
    psi = {"vacuum": number_state([0], basis), "fock1": number_state([1], basis),
           "coherent": coherent_state([1 - 1j], basis)}[state]
    g = PhaseGrid.from_alpha_extent(1, 64, 7.0)
    Q = husimi(psi, basis, g)
    al = g.alphas()[0]
    assert np.abs(Q.values - ref(np.abs(al) ** 2, al)).max() < 1e-12
    assert Q.mass() == pytest.approx(1.0, abs=1e-8)


def test_two_mode_husimi_factorises():
    basis = FockBasis((15, 15))
    psi = coherent_state([0.5, -0.3j], basis)
    g = PhaseGrid.from_alpha_extent(2, 16, 5.0)
    Q = husimi(psi, basis, g, warn=False)
    a1, a2 = g.alphas()
    ref = np.exp(-np.abs(a1 - 0.5) ** 2 - np.abs(a2 + 0.3j) ** 2) / math.pi ** 2
    assert np.abs(Q.values - ref).max() < 1e-12


def test_expectation_identity_examples():
    basis = FockBasis((40,))
    g = PhaseGrid.from_alpha_extent(1, 128, 8.0)
    one = OperatorPolynomial.constant(1)
    vac = number_state([0], basis)
    assert expectation_identity_check(one, vac, basis, g)[0] <= 1e-6
    psi = coherent_state([1.0], basis)
    r, direct, via = expectation_identity_check(ad * a, psi, basis, g)
    assert direct.real == pytest.approx(1.0, abs=1e-12)
    assert r <= 1e-5
    r, direct, _ = expectation_identity_check(ad * ad * a * a, vac, basis, g)
    assert abs(direct) < 1e-15 and r <= 1e-5


def test_tail_mass():
    basis = FockBasis((10,))
    assert tail_mass(number_state([9], basis), basis) == 1.0
    assert tail_mass(number_state([0], basis), basis) == 0.0


def test_husimi_time_derivative_of_stationary_state():
    basis = FockBasis((10,))
    H = build_operator(ad * a, basis)
    g = PhaseGrid.from_alpha_extent(1, 32, 5.0)
    dQ = husimi_time_derivative(number_state([2], basis), H, g, 1e-3)
    assert np.abs(dQ).max() < 1e-10
