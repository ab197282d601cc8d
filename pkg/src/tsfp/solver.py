"""Time integration of the phase-space evolution.

Two spatial representations share one classical RK4 integrator:

* ``spectral`` / ``central-8th``: the density sampled on a periodic
  ``PhaseGrid`` with Fourier-multiplier derivatives.
* ``gauss-hermite``: the density as a Gauss-weighted polynomial
  (``GaussPolyState``), on which the generator acts exactly.

The grid representations are kept for rate evaluation and for flows they
handle well (pure Liouville transport). With indefinite diffusion the grid
semi-discretisation has growing modes, which the instability detector
catches; see README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import PhaseSpacePolynomial, to_real_polynomial
from .bargmann import GaussPolyOperator, GaussPolyState
from .geometry import ModeScales
from .grid import DensityGrid
from .spectral import (SCHEMES, DiffusionField, diffusion_rhs, full_series_rhs,
                       liouville_rhs, stability_bounds)

GAUSS = "gauss-hermite"
ALL_SCHEMES = SCHEMES + (GAUSS,)
RK4_IMAG_REACH = 2.5  # a bit inside 2*sqrt(2), the RK4 limit on the imaginary axis


class StabilityError(RuntimeError):
    pass


class InstabilityDetected(RuntimeError):
    def __init__(self, msg, time):
        super().__init__(msg)
        self.time = time


@dataclass
class EvolutionConfig:
    dt: float
    steps: int
    scheme: str = GAUSS
    order_cap: int = 2
    degree: int = 40          # per-mode cutoff of the gauss-hermite basis
    log_every: int = 0        # 0: log only the initial and final states
    growth_limit: float = 10.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.scheme not in ALL_SCHEMES:
            raise ValueError(f"scheme must be one of {ALL_SCHEMES}")
        if self.order_cap < 1:
            raise ValueError("order cap must be at least 1")


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def times(self):
        return [s.time for s in self.states]

    @property
    def final(self):
        return self.states[-1]


class RateFunction:
    """Array -> array rate for one representation."""

    def __init__(self, h_aW: PhaseSpacePolynomial, scales: ModeScales, config: EvolutionConfig,
                 grid=None, kappa=None):
        self.h = h_aW
        self.scales = scales
        self.config = config
        self.grid = grid
        if config.scheme == GAUSS:
            self.op = GaussPolyOperator(h_aW, config.degree, config.order_cap,
                                        scales.hbar, scales.C)
        else:
            if grid is None:
                raise ValueError("grid schemes need a grid")
            self.h_real = to_real_polynomial(h_aW, scales.kappa)
            self.D = DiffusionField(self.h_real, scales) if config.order_cap == 2 else None

    def __call__(self, arr):
        cfg = self.config
        if cfg.scheme == GAUSS:
            return self.op.apply(arr)
        rho = DensityGrid(self.grid, arr, 0.0, self.scales.kappa)
        if cfg.order_cap == 1:
            return liouville_rhs(rho, self.h_real, self.scales, cfg.scheme, monitor=False)
        if cfg.order_cap == 2:
            out = liouville_rhs(rho, self.h_real, self.scales, cfg.scheme, monitor=False)
            if not self.D.is_identically_zero():
                out = out + diffusion_rhs(rho, self.D, self.scales, cfg.scheme, monitor=False)
            return out
        return full_series_rhs(rho, self.h, cfg.order_cap, self.scales, cfg.scheme, monitor=False)


def rk4(arr, rate, dt):
    k1 = rate(arr)
    k2 = rate(arr + 0.5 * dt * k1)
    k3 = rate(arr + 0.5 * dt * k2)
    k4 = rate(arr + dt * k3)
    return arr + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _array(state):
    return state.coeffs if isinstance(state, GaussPolyState) else state.values


def _rebuild(state, arr, time):
    if isinstance(state, GaussPolyState):
        return GaussPolyState(arr, state.hbar, time)
    return DensityGrid(state.grid, arr, time, state.kappa, dict(state.notes))


def _size(state):
    return state.hs_norm() if isinstance(state, GaussPolyState) else float(np.max(np.abs(state.values)))


def step(state, rate, dt):
    """One classical RK4 step."""
    return _rebuild(state, rk4(_array(state), rate, dt), state.time + dt)


def dt_bound(state, h_aW, scales, config, rate=None):
    if config.scheme == GAUSS:
        op = rate.op if rate is not None else GaussPolyOperator(
            h_aW, config.degree, config.order_cap, scales.hbar, scales.C)
        radius = op.spectral_radius()
        return {"spectral_radius": radius,
                "dt_max": RK4_IMAG_REACH / radius if radius > 0 else math.inf}
    return stability_bounds(state, h_aW, scales)


def evolve(state, h_aW: PhaseSpacePolynomial, scales: ModeScales, config: EvolutionConfig,
           on_log=None, check_stability=True) -> Trajectory:
    """Integrate ``config.steps`` steps; returns logged states and diagnostics."""
    if isinstance(state, GaussPolyState) != (config.scheme == GAUSS):
        raise TypeError("state representation does not match the scheme")
    if isinstance(state, GaussPolyState) and state.K != config.degree:
        raise ValueError("state cutoff differs from config degree")
    rate = RateFunction(h_aW, scales, config, getattr(state, "grid", None))
    bounds = dt_bound(state, h_aW, scales, config, rate)
    if check_stability and config.dt > bounds["dt_max"]:
        raise StabilityError(f"dt = {config.dt} exceeds stability bound {bounds['dt_max']:.3e}")
    traj = Trajectory(diagnostics={"stability": bounds, "max_step_mass_change": 0.0})
    size0 = _size(state)
    mass = state.mass()
    traj.states.append(state)
    if on_log:
        on_log(state)
    for k in range(1, config.steps + 1):
        state = step(state, rate, config.dt)
        size = _size(state)
        if not np.isfinite(size) or size > config.growth_limit * size0:
            traj.diagnostics["aborted_at"] = state.time
            raise InstabilityDetected(
                f"state grew to {size / size0:.3g}x its initial size at t = {state.time:.4g}",
                state.time)
        m = state.mass()
        traj.diagnostics["max_step_mass_change"] = max(traj.diagnostics["max_step_mass_change"],
                                                       abs(m - mass))
        mass = m
        if k == config.steps or (config.log_every and k % config.log_every == 0):
            traj.states.append(state)
            if on_log:
                on_log(state)
    return traj
