import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsfp.algebra import (anti_wick_symbol, bose_hubbard_operator, physical_to_dimensionless,
                          free_length_squares, from_real_polynomial, random_real_symbol, to_real_polynomial)
from tsfp.geometry import (ModeScales, anticommutator_residual, build_scaling,
                           consistency_check_appendixA, diffusion_matrix, diffusion_polynomials,
                           fix_free_lengths, free_hamiltonian_physical, spectrum_report,
                           symplectic_matrix)


def test_symplectic_form():
    J = symplectic_matrix(2)
    assert np.array_equal(J @ J, -np.eye(4))
    assert np.array_equal(J.T, -J)


def test_scaling_matrix():
    L = build_scaling(ModeScales(2, (2.0, 0.5), kappa=3.0))
    assert np.allclose(np.diag(L), [2.0, 0.5, 1.5, 6.0])


def test_scales_validation():
    with pytest.raises(ValueError):
        ModeScales(2, (1.0,))
    with pytest.raises(ValueError):
        ModeScales(1, (-1.0,))
    with pytest.raises(ValueError):
        ModeScales(1, kappa=0)


def test_free_lengths_make_diffusion_vanish():
    freqs = [1.0, 2.5]
    sc = fix_free_lengths(freqs, kappa=1.3)
    h = physical_to_dimensionless(free_hamiltonian_physical(freqs), sc.lengths, sc.kappa,
                                  free_length_squares(freqs, 1.3))
    D = diffusion_polynomials(h, sc)
    assert all(e.is_zero() for row in D for e in row)
    # other lengths leave a nonzero diffusion
    h2 = physical_to_dimensionless(free_hamiltonian_physical(freqs), (1.0, 1.0), 1.3)
    assert not all(e.is_zero() for row in diffusion_polynomials(h2, sc) for e in row)


def test_free_symbol_is_rotation():
    sc = fix_free_lengths([2.0], kappa=1.0)
    h = from_real_polynomial(physical_to_dimensionless(free_hamiltonian_physical([2.0]),
                                                       sc.lengths, 1.0,
                                                       free_length_squares([2.0])), 1.0)
    # omega |alpha|^2 with omega = 2
    assert set(h.terms) == {((1,), (1,))}
    assert complex(h.terms[((1,), (1,))]) == pytest.approx(2.0)


@st.composite
def symbol_and_point(draw):
    seed = draw(st.integers(0, 2 ** 31))
    rng = np.random.default_rng(seed)
    N = draw(st.integers(1, 2))
    h = random_real_symbol(rng, N, 4, 4)
    kappa = draw(st.floats(0.5, 2.0))
    C = draw(st.floats(0.5, 2.0))
    return h, ModeScales(N, None, kappa, C), rng.uniform(-2, 2, 2 * N)


@given(symbol_and_point())
def test_structural_identities(args):
    h, sc, z = args
    D = diffusion_matrix(to_real_polynomial(h, sc.kappa), sc, z)
    assert np.allclose(D, D.T, atol=1e-12)
    assert abs(np.trace(D)) <= 1e-12 * max(1.0, np.abs(D).max())
    assert anticommutator_residual(D) <= 1e-12 * max(1.0, np.abs(D).max())
    rep = spectrum_report(D)
    assert rep.pairing_residual <= 1e-9 * max(1.0, np.abs(D).max())


@given(symbol_and_point())
def test_complex_block_route_matches(args):
    h, sc, z = args
    assert consistency_check_appendixA(h, sc, z) <= 1e-10


def test_bose_hubbard_diffusion_is_indefinite():
    sc = ModeScales(2)
    h = anti_wick_symbol(bose_hubbard_operator(2, 1, 1))
    D = diffusion_matrix(to_real_polynomial(h), sc, [0.7, -0.2, 0.3, 1.1])
    lam = spectrum_report(D).eigenvalues
    assert lam[0] < 0 < lam[-1]
    assert np.allclose(lam, -lam[::-1])


def test_spectrum_report_rejects_asymmetric():
    with pytest.raises(ValueError):
        spectrum_report(np.array([[0.0, 1.0], [0.0, 0.0]]))
