import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsfp.algebra import (anti_wick_symbol, amplifier_operator, bose_hubbard_operator,
                          kerr_operator, quartic_complex_scalar_symbol, random_real_symbol)
from tsfp.bargmann import GaussPolyOperator, GaussPolyState, scaled_monomials
from tsfp.geometry import ModeScales
from tsfp.grid import PhaseGrid
from tsfp.spectral import full_series_rhs


def test_scaled_monomials_far_out():
    phi = scaled_monomials(np.array([30.0 + 0j]), 5)
    assert np.all(np.isfinite(phi))
    assert phi[0, 0] == pytest.approx(math.exp(-450))
    assert scaled_monomials(np.array([0j]), 3)[0].tolist() == [1, 0, 0, 0]


@pytest.mark.parametrize("beta", [0.0, 1.2 - 0.7j])
def test_coherent_state_closed_form(beta):
    g = PhaseGrid.from_alpha_extent(1, 64, 6.0)
    rho = GaussPolyState.coherent([beta], 30).sample(g)
    al = g.alphas()[0]
    assert np.abs(rho.values - np.exp(-np.abs(al - beta) ** 2) / math.pi).max() < 1e-12


def test_number_state_closed_form():
    g = PhaseGrid.from_alpha_extent(1, 64, 6.0)
    rho = GaussPolyState.number_state([1], 4).sample(g)
    r2 = np.abs(g.alphas()[0]) ** 2
    assert np.abs(rho.values - r2 * np.exp(-r2) / math.pi).max() < 1e-14


def test_mass_is_exact_functional():
    st_ = GaussPolyState.coherent([0.5, -1j], 20)
    assert st_.mass() == pytest.approx(1.0, abs=1e-12)
    assert GaussPolyState.number_state([2, 0], 3).mass() == pytest.approx(1.0)


def test_time_reverse_is_conjugation():
    s = GaussPolyState.coherent([0.7 + 0.4j], 20)
    assert np.allclose(s.time_reverse().coeffs, GaussPolyState.coherent([0.7 - 0.4j], 20).coeffs)
    assert np.array_equal(s.time_reverse().time_reverse().coeffs, s.coeffs)


@pytest.mark.parametrize("h,cap", [
    (anti_wick_symbol(kerr_operator()), 2),
    (anti_wick_symbol(amplifier_operator()), 2),
    (anti_wick_symbol(kerr_operator(0.3, 1.5)), 4),
])
def test_operator_matches_grid_series(h, cap):
    g = PhaseGrid.from_alpha_extent(1, 128, 7.0)
    st_ = GaussPolyState.coherent([1.1 + 0.5j], 40)
    op = GaussPolyOperator(h, 40, cap)
    via_coeffs = GaussPolyState(op.apply(st_.coeffs)).sample(g)
    via_grid = full_series_rhs(st_.sample(g), h, cap, ModeScales(1))
    assert np.abs(via_coeffs.values - via_grid).max() < 1e-9


def test_two_mode_operator_matches_grid_series():
    h = quartic_complex_scalar_symbol(1, 0.5)
    g = PhaseGrid.from_alpha_extent(2, 36, 5.5)
    st_ = GaussPolyState.coherent([0.4, 0.3j], 12)
    for cap in (2, 4):
        op = GaussPolyOperator(h, 12, cap)
        a = GaussPolyState(op.apply(st_.coeffs)).sample(g).values
        b = full_series_rhs(st_.sample(g), h, cap, ModeScales(2), monitor=False)
        assert np.abs(a - b).max() < 1e-7 * np.abs(b).max()


def test_generator_preserves_mass_and_hermiticity():
    h = anti_wick_symbol(bose_hubbard_operator(2, 1, 0.5))
    op = GaussPolyOperator(h, 8, 2)
    s = GaussPolyState.coherent([0.5, 0.2j], 8)
    rate = GaussPolyState(op.apply(s.coeffs))
    assert abs(rate.mass()) < 1e-12
    assert rate.hermiticity_residual() < 1e-12


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31))
def test_time_reversal_identity_in_coefficients(seed):
    rng = np.random.default_rng(seed)
    h = random_real_symbol(rng, 1, 4, 4)
    h = (h + h.swap()) * 0.5
    op = GaussPolyOperator(h, 10, 4)
    c = rng.standard_normal((11, 11)) + 1j * rng.standard_normal((11, 11))
    L = op.apply(c)
    TLT = op.apply(c.T).T
    assert np.abs(TLT + L).max() <= 1e-12 * max(1.0, np.abs(L).max())


def test_constant_symbol_has_zero_generator():
    from tsfp.algebra import PhaseSpacePolynomial
    op = GaussPolyOperator(PhaseSpacePolynomial.constant(2), 5, 3)
    assert np.all(op.apply(np.ones((6, 6), complex)) == 0)


def test_spectral_radius_estimate():
    op = GaussPolyOperator(anti_wick_symbol(kerr_operator()), 20, 2)
    r = op.spectral_radius(iters=80)
    # eigenvalues are i (E_m - E_n) for Kerr levels E_k = k^2 / 4 + ...; largest gap ~ K^2 / 4
    assert 50 < r < 200


def test_shape_checks():
    op = GaussPolyOperator(anti_wick_symbol(kerr_operator()), 5)
    with pytest.raises(ValueError):
        op.apply(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        GaussPolyState(np.zeros((3, 4)))
