"""Truncated Fock-space quantum dynamics and Husimi sampling (hbar = 1).

This is the reference the phase-space solver is checked against; it shares
no code with the solver beyond the operator-polynomial data type.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import gammaln

from .algebra import OperatorPolynomial, anti_wick_symbol
from .grid import DensityGrid, PhaseGrid, SUPPORT_THRESHOLD, SupportOverflowWarning


@dataclass(frozen=True)
class FockBasis:
    """Per-mode occupations 0..n_max-1, mode 0 is the slowest index."""

    cutoffs: tuple

    def __post_init__(self):
        c = tuple(int(x) for x in np.atleast_1d(self.cutoffs))
        if any(x < 2 for x in c):
            raise ValueError("each mode needs cutoff >= 2")
        object.__setattr__(self, "cutoffs", c)

    @property
    def N(self):
        return len(self.cutoffs)

    @property
    def dim(self):
        return int(np.prod(self.cutoffs))

    def occupations(self):
        """(dim, N) array of occupation numbers."""
        grids = np.meshgrid(*[np.arange(c) for c in self.cutoffs], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def index(self, occ):
        return int(np.ravel_multi_index(tuple(occ), self.cutoffs))


@dataclass
class OperatorMatrix:
    matrix: object  # scipy sparse or ndarray
    basis: FockBasis
    hermitian: bool = False

    def dense(self):
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    def hermiticity_residual(self):
        d = self.matrix - self.matrix.conj().T
        if sp.issparse(d):
            return float(abs(d).max()) if d.nnz else 0.0
        return float(np.max(np.abs(d), initial=0.0))


def ladder(n_max):
    """Single-mode annihilator, a|n> = sqrt(n)|n-1>."""
    return sp.diags(np.sqrt(np.arange(1, n_max)), 1, shape=(n_max, n_max), format="csr",
                    dtype=complex)


def _mode_op(single, mode, basis):
    out = None
    for i, c in enumerate(basis.cutoffs):
        f = single if i == mode else sp.identity(c, dtype=complex, format="csr")
        out = f if out is None else sp.kron(out, f, format="csr")
    return out


def build_operator(p: OperatorPolynomial, basis: FockBasis, check_hermitian=True) -> OperatorMatrix:
    if p.modes != basis.N:
        raise ValueError("operator and basis mode counts differ")
    a = [_mode_op(ladder(c), i, basis) for i, c in enumerate(basis.cutoffs)]
    ad = [x.conj().T.tocsr() for x in a]
    total = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    eye = sp.identity(basis.dim, dtype=complex, format="csr")
    for factors, c in p.terms.items():
        m = eye
        for mode, dag in factors:   # written order = matrix product order
            m = m @ (ad[mode] if dag else a[mode])
        total = total + complex(c) * m
    M = OperatorMatrix(total.tocsr(), basis)
    if check_hermitian:
        M.hermitian = M.hermiticity_residual() <= 1e-12
    return M


def coherent_state(betas, basis: FockBasis):
    """Product coherent state projected on the basis (not renormalised)."""
    betas = np.atleast_1d(np.asarray(betas, dtype=complex))
    vec = None
    for b, c in zip(betas, basis.cutoffs):
        amp = np.conj(coherent_overlaps(b, c))   # <n|beta>
        vec = amp if vec is None else np.kron(vec, amp)
    return vec


def number_state(occ, basis: FockBasis):
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index(occ)] = 1.0
    return v


def tail_mass(psi, basis: FockBasis, fraction=0.1):
    """Probability in the top ``fraction`` of occupations of any mode."""
    occ = basis.occupations()
    cut = np.array([c - max(1, int(math.ceil(fraction * c))) for c in basis.cutoffs])
    mask = np.any(occ >= cut, axis=1)
    return float(np.sum(np.abs(psi[mask]) ** 2))


class Propagator:
    """exp(-i H t) by dense eigendecomposition or sparse Krylov action."""

    def __init__(self, H: OperatorMatrix, method="auto"):
        if not H.hermitian and H.hermiticity_residual() > 1e-12:
            raise ValueError("Hamiltonian is not Hermitian")
        self.H = H
        if method == "auto":
            method = "eigh" if H.basis.N == 1 else "krylov"
        if method not in ("eigh", "krylov"):
            raise ValueError(f"unknown propagation method {method!r}")
        self.method = method
        if method == "eigh":
            w, V = np.linalg.eigh(H.dense())
            self.w, self.V = w, V

    def __call__(self, psi, t):
        if t == 0:
            return np.array(psi, dtype=complex)
        if self.method == "eigh":
            return self.V @ (np.exp(-1j * self.w * t) * (self.V.conj().T @ psi))
        return spla.expm_multiply(-1j * t * self.H.matrix.tocsc(), psi)


def evolve_state(psi, H: OperatorMatrix, t, method="auto"):
    out = Propagator(H, method)(psi, t)
    nrm = np.linalg.norm(out)
    if abs(nrm - np.linalg.norm(psi)) > 1e-10:
        raise FloatingPointError(f"propagation broke unitarity: |psi| = {nrm}")
    return out


def coherent_overlaps(alpha, n_max):
    """<alpha|n> = exp(-|alpha|^2 / 2) conj(alpha)^n / sqrt(n!), log-space."""
    alpha = np.asarray(alpha, dtype=complex)
    n = np.arange(n_max)
    r = np.abs(alpha)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(n == 0, 0.0, n * np.log(r)) - 0.5 * gammaln(n + 1) - 0.5 * r ** 2
    mag = np.where((r == 0) & (n > 0), -np.inf, mag)
    return np.exp(mag - 1j * n * np.angle(alpha)[..., None])


def husimi(psi, basis: FockBasis, grid: PhaseGrid, kappa=1.0, time=0.0, warn=True) -> DensityGrid:
    """Q(alpha) = |<alpha|psi>|^2 / pi^N on the grid."""
    if grid.N != basis.N:
        raise ValueError("grid and basis mode counts differ")
    N, n = basis.N, grid.n_pts
    x = grid.axis()
    s = math.sqrt(kappa / 2.0)
    plane = s * (x[:, None] + 1j * x[None, :])
    T = np.asarray(psi, dtype=complex).reshape(basis.cutoffs)
    for i, c in enumerate(basis.cutoffs):
        ov = coherent_overlaps(plane, c).reshape(n * n, c)
        # contract the current leading Fock axis, grid index goes last
        T = np.tensordot(T, ov, axes=([0], [1]))
    amp = T.reshape([n, n] * N)
    vals = np.abs(amp) ** 2 / math.pi ** N
    vals = np.transpose(vals, [2 * i for i in range(N)] + [2 * i + 1 for i in range(N)])
    out = DensityGrid(grid, np.ascontiguousarray(vals), time, kappa)
    if warn:
        r = out.boundary_ratio()
        if r > SUPPORT_THRESHOLD:
            warnings.warn(f"oracle Husimi boundary density {r:.2e} of max", SupportOverflowWarning,
                          stacklevel=2)
    return out


def expectation(psi, op: OperatorMatrix):
    return complex(np.vdot(psi, op.matrix @ psi))


def expectation_identity_check(op: OperatorPolynomial, psi, basis: FockBasis, grid: PhaseGrid,
                               kappa=1.0):
    """|<psi|O|psi> - integral anti_wick_symbol(O) Q d^2N alpha|."""
    direct = expectation(psi, build_operator(op, basis, check_hermitian=False))
    Q = husimi(psi, basis, grid, kappa, warn=False)
    sym = anti_wick_symbol(op).evaluate(grid.alphas(kappa))
    via = Q.integrate(sym)
    return abs(direct - via), direct, via


def husimi_time_derivative(psi, H: OperatorMatrix, grid: PhaseGrid, dt, kappa=1.0, method="auto"):
    """[Q(t + dt) - Q(t - dt)] / 2 dt from exact propagation."""
    prop = Propagator(H, method)
    plus = husimi(prop(psi, dt), H.basis, grid, kappa, warn=False)
    minus = husimi(prop(psi, -dt), H.basis, grid, kappa, warn=False)
    return (plus.values - minus.values) / (2.0 * dt)
