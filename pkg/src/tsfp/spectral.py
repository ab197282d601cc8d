"""Right-hand sides of the phase-space evolution on a periodic grid.

Derivatives are applied as Fourier multipliers. ``spectral`` uses the exact
multiplier i k; ``central-8th`` uses the multiplier of the periodic
eighth-order central stencil, which is the same as applying the stencil.
"""

from __future__ import annotations

import itertools
import math
import warnings

import numpy as np

from .algebra import PhaseSpacePolynomial, RealPolynomial, derivative, to_real_polynomial
from .geometry import ModeScales, diffusion_polynomials
from .grid import DensityGrid, PhaseGrid, SUPPORT_THRESHOLD

SCHEMES = ("spectral", "central-8th")
_C8 = (4 / 5, -1 / 5, 4 / 105, -1 / 280)


class DerivativeEngine:
    """Cached per-axis first-derivative multipliers for one grid."""

    def __init__(self, grid: PhaseGrid, scheme="spectral"):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown derivative scheme {scheme!r}")
        self.grid = grid
        self.scheme = scheme
        k = grid.wavenumbers()
        if scheme == "spectral":
            s = 1j * k
            # the Nyquist mode has no odd derivative on a real grid
            s[grid.n_pts // 2] = 0.0
        else:
            h = grid.h
            s = 2j / h * sum(c * np.sin((j + 1) * k * h) for j, c in enumerate(_C8))
        self.s = []
        for a in range(grid.ndim):
            shape = [1] * grid.ndim
            shape[a] = grid.n_pts
            self.s.append(s.reshape(shape))

    def forward(self, f):
        return np.fft.fftn(f)

    def inverse(self, F):
        return np.fft.ifftn(F)

    def axis(self, a):
        return self.s[a]

    def hol(self, i, kappa):
        """Multiplier of d/d alpha_i = (d_Q - i d_P) / sqrt(2 kappa)."""
        N = self.grid.N
        return (self.s[i] - 1j * self.s[N + i]) / math.sqrt(2.0 * kappa)

    def antihol(self, i, kappa):
        N = self.grid.N
        return (self.s[i] + 1j * self.s[N + i]) / math.sqrt(2.0 * kappa)


_ENGINES: dict = {}


def engine_for(grid: PhaseGrid, scheme="spectral") -> DerivativeEngine:
    key = (grid, scheme)
    if key not in _ENGINES:
        if len(_ENGINES) > 8:
            _ENGINES.clear()
        _ENGINES[key] = DerivativeEngine(grid, scheme)
    return _ENGINES[key]


def _as_real(h, scales):
    if isinstance(h, PhaseSpacePolynomial):
        return to_real_polynomial(h, scales.kappa)
    return h


def _support_monitor(rho: DensityGrid, stacklevel=3):
    return rho.check_support(SUPPORT_THRESHOLD, stacklevel=stacklevel)


def liouville_rhs(rho: DensityGrid, h, scales: ModeScales, scheme="spectral", monitor=True):
    """{H, rho}: (1/kappa) sum_i [d_P (H_Q rho) - d_Q (H_P rho)]."""
    h = _as_real(h, scales)
    if monitor:
        _support_monitor(rho)
    g = rho.grid
    eng = engine_for(g, scheme)
    z = g.coords()
    N = g.N
    F = 0
    for i in range(N):
        hq = h.differentiate(i)
        hp = h.differentiate(N + i)
        if not hq.is_zero():
            F = F + eng.axis(N + i) * eng.forward(hq.evaluate(z) * rho.values)
        if not hp.is_zero():
            F = F - eng.axis(i) * eng.forward(hp.evaluate(z) * rho.values)
    if isinstance(F, int):
        return np.zeros(g.shape)
    return eng.inverse(F).real / scales.kappa


class DiffusionField:
    """D(z) = (C / 2 kappa^2) [H'', J] held as exact polynomial entries."""

    def __init__(self, h, scales: ModeScales):
        self.h = _as_real(h, scales)
        self.scales = scales
        self.entries = diffusion_polynomials(self.h, scales)

    @property
    def dim(self):
        return len(self.entries)

    def is_identically_zero(self):
        return all(e.is_zero() for row in self.entries for e in row)

    def __call__(self, z):
        n = self.dim
        return np.array([[float(self.entries[a][b].evaluate(list(z))) for b in range(n)]
                         for a in range(n)])

    def on_grid(self, grid: PhaseGrid):
        z = grid.coords()
        return [[self.entries[a][b].evaluate(z) if not self.entries[a][b].is_zero() else None
                 for b in range(self.dim)] for a in range(self.dim)]


def diffusion_rhs(rho: DensityGrid, D: DiffusionField, scales: ModeScales,
                  scheme="spectral", monitor=True):
    """(hbar/2) sum_ab d_a d_b (D_ab rho), i.e. prefactor hbar C / 4 kappa^2."""
    if monitor:
        _support_monitor(rho)
    g = rho.grid
    eng = engine_for(g, scheme)
    z = g.coords()
    F = 0
    n = D.dim
    for a in range(n):
        for b in range(a, n):
            e = D.entries[a][b]
            if e.is_zero():
                continue
            w = 1.0 if a == b else 2.0
            F = F + w * eng.axis(a) * eng.axis(b) * eng.forward(e.evaluate(z) * rho.values)
    if isinstance(F, int):
        return np.zeros(g.shape)
    return 0.5 * scales.hbar * eng.inverse(F).real


def multi_indices(N, lo, hi):
    for total in range(lo, hi + 1):
        for m in itertools.product(range(total + 1), repeat=N):
            if sum(m) == total:
                yield m


def full_series_rhs(rho: DensityGrid, h_aW: PhaseSpacePolynomial, order_cap: int,
                    scales: ModeScales, scheme="spectral", monitor=True,
                    imag_tol=1e-10, return_imag=False):
    """(i/hbar) sum_{1<=|m|<=cap} hbar^|m| / m! [d^m(dbar^m h rho) - dbar^m(d^m h rho)]."""
    if order_cap < 1:
        raise ValueError("order cap must be at least 1")
    if monitor:
        _support_monitor(rho)
    g = rho.grid
    if h_aW.modes != g.N:
        raise ValueError("symbol and grid mode counts differ")
    eng = engine_for(g, scheme)
    al = g.alphas(scales.kappa)
    hbar, kappa = scales.hbar, scales.kappa
    F = 0
    for m in multi_indices(g.N, 1, order_cap):
        order = sum(m)
        coef = hbar ** order / math.prod(math.factorial(x) for x in m)
        g1 = derivative(h_aW, antihol=m)
        g2 = derivative(h_aW, hol=m)
        if g1.is_zero() and g2.is_zero():
            continue
        s1 = 1.0
        s2 = 1.0
        for i, k in enumerate(m):
            if k:
                s1 = s1 * eng.hol(i, kappa) ** k
                s2 = s2 * eng.antihol(i, kappa) ** k
        if not g1.is_zero():
            F = F + coef * s1 * eng.forward(g1.evaluate(al) * rho.values)
        if not g2.is_zero():
            F = F - coef * s2 * eng.forward(g2.evaluate(al) * rho.values)
    if isinstance(F, int):
        out = np.zeros(g.shape)
        return (out, 0.0) if return_imag else out
    rate = (1j / hbar) * eng.inverse(F)
    top = np.max(np.abs(rate.real))
    resid = float(np.max(np.abs(rate.imag)) / top) if top > 0 else 0.0
    if resid > imag_tol:
        raise FloatingPointError(f"series rate has imaginary residue {resid:.2e} of max")
    return (rate.real, resid) if return_imag else rate.real


def energy_flux_diagnostic(rho: DensityGrid, h, scales: ModeScales, scheme="spectral",
                           D: DiffusionField | None = None, monitor=True):
    """integral of H * diffusion_rhs(rho) over the grid."""
    hr = _as_real(h, scales)
    if D is None:
        D = DiffusionField(hr, scales)
    if D.is_identically_zero():
        return 0.0
    rate = diffusion_rhs(rho, D, scales, scheme, monitor=monitor)
    H = hr.evaluate(rho.grid.coords())
    return float(np.sum(H * rate) * rho.grid.cell_measure(scales.kappa))


def stability_bounds(rho: DensityGrid, h, scales: ModeScales, D: DiffusionField | None = None,
                     support=1e-10):
    """dt limits 0.5 h^2 / |D| and 0.5 h / |drift| over the density support."""
    hr = _as_real(h, scales)
    g = rho.grid
    z = g.coords()
    mask = np.abs(rho.values) > support * np.abs(rho.values).max()
    drift = 0.0
    for a in range(g.ndim):
        da = hr.differentiate(a)
        if not da.is_zero():
            drift = max(drift, float(np.max(np.abs(np.broadcast_to(da.evaluate(z), g.shape)[mask]))))
    drift /= scales.kappa
    if D is None:
        D = DiffusionField(hr, scales)
    dmax = 0.0
    for row in D.entries:
        for e in row:
            if not e.is_zero():
                dmax = max(dmax, float(np.max(np.abs(np.broadcast_to(e.evaluate(z), g.shape)[mask]))))
    dmax *= 0.5 * scales.hbar
    hh = g.h
    dt_diff = 0.5 * hh * hh / dmax if dmax > 0 else math.inf
    dt_drift = 0.5 * hh / drift if drift > 0 else math.inf
    return {"dt_diffusion": dt_diff, "dt_drift": dt_drift, "dt_max": min(dt_diff, dt_drift)}


def time_reverse(rho: DensityGrid) -> DensityGrid:
    """rho(Q, P) -> rho(Q, -P) by flipping every P axis."""
    g = rho.grid
    x = g.axis()
    if not np.array_equal(x, -x[::-1]):
        raise ValueError("grid is not symmetric about P = 0")
    v = rho.values
    for a in range(g.N, 2 * g.N):
        v = np.flip(v, axis=a)
    return DensityGrid(g, v.copy(), rho.time, rho.kappa, dict(rho.notes))


def observables(rho: DensityGrid, h_aW: PhaseSpacePolynomial | None, scales: ModeScales):
    """Mass, energy, centroid and quadrature variances by midpoint quadrature.

    ``var_Q`` / ``var_P`` are raw Husimi moments. ``var_Q_op`` subtracts the
    anti-Wick offset hbar / (2 kappa) and is the variance of the quadrature
    operator itself.
    """
    g = rho.grid
    mass = rho.mass()
    out = {"time": rho.time, "mass": mass}
    if h_aW is not None:
        out["energy"] = rho.integrate(h_aW.evaluate(g.alphas(scales.kappa))).real / mass
    z = g.coords()
    al = g.alphas(scales.kappa)
    for i in range(g.N):
        c = rho.integrate(al[i]) / mass
        q = rho.integrate(z[i]).real / mass
        p = rho.integrate(z[g.N + i]).real / mass
        vq = rho.integrate((z[i] - q) ** 2).real / mass
        vp = rho.integrate((z[g.N + i] - p) ** 2).real / mass
        sfx = "" if g.N == 1 else f"_{i+1}"
        out[f"alpha_re{sfx}"] = c.real
        out[f"alpha_im{sfx}"] = c.imag
        out[f"var_Q{sfx}"] = vq
        out[f"var_P{sfx}"] = vp
        out[f"var_Q_op{sfx}"] = vq - scales.hbar / (2.0 * scales.kappa)
    out["min_value"] = rho.min_value()
    return out


def l1_distance(a: DensityGrid, b: DensityGrid):
    if a.grid != b.grid:
        raise ValueError("grids differ")
    return float(np.sum(np.abs(a.values - b.values)) * a.grid.cell_measure(a.kappa))
