import math

import numpy as np
import pytest

from tsfp.algebra import (PhaseSpacePolynomial, anti_wick_symbol, kerr_operator,
                          to_real_polynomial)
from tsfp.bargmann import GaussPolyState
from tsfp.geometry import ModeScales
from tsfp.grid import PhaseGrid
from tsfp.oracle import FockBasis, Propagator, build_operator, coherent_state, husimi
from tsfp.solver import (EvolutionConfig, InstabilityDetected, RateFunction, StabilityError,
                         evolve, step)
from tsfp.spectral import l1_distance

SC = ModeScales(1)
KERR = anti_wick_symbol(kerr_operator())
FREE = PhaseSpacePolynomial.alpha(0) * PhaseSpacePolynomial.alpha_conj(0)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0, steps=1)
    with pytest.raises(ValueError):
        EvolutionConfig(dt=0.1, steps=1, scheme="upwind")


def test_single_step_consistency():
    cfg = EvolutionConfig(1e-4, 1, order_cap=2, degree=30)
    s = GaussPolyState.coherent([1.0], 30)
    rate = RateFunction(KERR, SC, cfg)
    out = step(s, rate, cfg.dt)
    g = PhaseGrid.from_alpha_extent(1, 64, 6.0)
    d = l1_distance(out.sample(g), s.sample(g))
    r = GaussPolyState(rate(s.coeffs)).sample(g)
    assert d <= 2 * cfg.dt * np.abs(r.values).sum() * g.cell_measure()


def _kerr_error(dt, t_final=0.5):
    K = 30
    cfg = EvolutionConfig(dt, int(round(t_final / dt)), degree=K)
    tr = evolve(GaussPolyState.coherent([1.5], K), KERR, SC, cfg)
    return tr.final


def test_rk4_convergence_order():
    ref = _kerr_error(0.00125)
    e1 = np.abs(_kerr_error(0.01).coeffs - ref.coeffs).max()
    e2 = np.abs(_kerr_error(0.005).coeffs - ref.coeffs).max()
    assert 12 <= e1 / e2 <= 20


def test_galerkin_kerr_matches_oracle():
    K = 40
    cfg = EvolutionConfig(0.005, 100, degree=K)
    tr = evolve(GaussPolyState.coherent([1.5], K), KERR, SC, cfg)
    g = PhaseGrid.from_alpha_extent(1, 128, 6.0)
    basis = FockBasis((40,))
    psi = coherent_state([1.5], basis)
    psi /= np.linalg.norm(psi)
    q = husimi(Propagator(build_operator(kerr_operator(), basis))(psi, 0.5), basis, g, warn=False)
    assert l1_distance(tr.final.sample(g), q) < 1e-6
    assert tr.diagnostics["max_step_mass_change"] < 1e-12


def test_dt_above_bound_is_refused():
    cfg = EvolutionConfig(0.5, 2, degree=40)
    with pytest.raises(StabilityError):
        evolve(GaussPolyState.coherent([1.5], 40), KERR, SC, cfg)


def test_free_rotation_on_grid_returns_after_one_period():
    g = PhaseGrid.from_alpha_extent(1, 128, 6.0)
    rho = GaussPolyState.coherent([1.5], 30).sample(g)
    n = 1000
    cfg = EvolutionConfig(2 * math.pi / n, n, scheme="spectral", order_cap=1)
    tr = evolve(rho, FREE, SC, cfg)
    assert l1_distance(tr.final, rho) < 1e-5


def test_liouville_preserves_functions_of_h():
    g = PhaseGrid.from_alpha_extent(1, 128, 6.0)
    rho = GaussPolyState.coherent([1.0 + 0.5j], 30).sample(g)
    H = to_real_polynomial(FREE).evaluate(g.coords())
    f0 = np.sum(H ** 2 * rho.values)
    cfg = EvolutionConfig(0.005, 200, scheme="spectral", order_cap=1)
    tr = evolve(rho, FREE, SC, cfg)
    f1 = np.sum(H ** 2 * tr.final.values)
    assert abs(f1 - f0) * g.cell_measure() <= 1e-5


def test_grid_fokker_planck_kerr_is_caught_by_detector():
    # the indefinite diffusion on a periodic grid has growing modes; the
    # detector must stop the run rather than return garbage
    g = PhaseGrid.from_alpha_extent(1, 64, 6.0)
    rho = GaussPolyState.coherent([1.5], 30).sample(g)
    cfg = EvolutionConfig(4e-4, 2500, scheme="spectral")
    with pytest.raises(InstabilityDetected) as info:
        evolve(rho, KERR, SC, cfg)
    assert info.value.time < 1.0


def test_representation_mismatch():
    g = PhaseGrid(1, 16, 5.0)
    rho = GaussPolyState.coherent([0], 5).sample(g)
    with pytest.raises(TypeError):
        evolve(rho, KERR, SC, EvolutionConfig(0.01, 1))
