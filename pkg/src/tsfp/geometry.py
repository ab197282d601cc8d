"""Scaling matrix, symplectic form and the traceless diffusion matrix.

Coordinates are the dimensionless z = (Q_1..Q_N, P_1..P_N), related to the
physical xi = (q, p) by xi = L z and to the complex amplitudes by
alpha_j = sqrt(kappa / 2) (Q_j + i P_j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (ANTIHOLOMORPHIC, PhaseSpacePolynomial,
                      RealPolynomial, differentiate, to_real_polynomial)


@dataclass(frozen=True)
class ModeScales:
    N: int = 1
    lengths: tuple = field(default=None)
    kappa: float = 1.0
    C: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        lengths = self.lengths if self.lengths is not None else (1.0,) * self.N
        lengths = tuple(float(l) for l in lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) != self.N:
            raise ValueError("need one length per mode")
        if any(l <= 0 for l in lengths):
            raise ValueError("lengths must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")


def symplectic_matrix(N: int) -> np.ndarray:
    I = np.eye(N)
    Z = np.zeros((N, N))
    return np.block([[Z, I], [-I, Z]])


def build_scaling(scales: ModeScales) -> np.ndarray:
    l = np.array(scales.lengths)
    return np.diag(np.concatenate([l, scales.kappa / l]))


def fix_free_lengths(frequencies, kappa=1.0, C=1.0, hbar=1.0) -> ModeScales:
    """l_k = sqrt(kappa / omega_k), which makes the free scaled Hessian kappa*omega*I."""
    w = [float(x) for x in frequencies]
    if any(x <= 0 for x in w):
        raise ValueError("frequencies must be positive")
    return ModeScales(len(w), tuple(math.sqrt(kappa / x) for x in w), kappa, C, hbar)


def free_hamiltonian_physical(frequencies) -> RealPolynomial:
    """sum_k (p_k^2 + omega_k^2 q_k^2) / 2 in physical (q, p)."""
    N = len(frequencies)
    terms = {}
    for k, w in enumerate(frequencies):
        eq = [0] * (2 * N)
        eq[k] = 2
        ep = [0] * (2 * N)
        ep[N + k] = 2
        terms[tuple(eq)] = 0.5 * float(w) ** 2
        terms[tuple(ep)] = 0.5
    return RealPolynomial(N, terms)


def _as_real(h, scales):
    if isinstance(h, PhaseSpacePolynomial):
        return to_real_polynomial(h, scales.kappa)
    return h


def diffusion_polynomials(h, scales: ModeScales):
    """Entries of (C / 2 kappa^2) [H'', J] as exact polynomials in z."""
    h = _as_real(h, scales)
    N = h.modes
    H = h.hessian()
    J = symplectic_matrix(N)
    pref = scales.C / (2.0 * scales.kappa ** 2)
    n = 2 * N
    D = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            acc = RealPolynomial(N)
            for c in range(n):
                if J[c, b]:
                    acc = acc + H[a][c] * J[c, b]
                if J[a, c]:
                    acc = acc - H[c][b] * J[a, c]
            D[a][b] = acc * pref
    return D


def hessian_at(h: RealPolynomial, z) -> np.ndarray:
    H = h.hessian()
    n = h.nvars
    out = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            out[a, b] = out[b, a] = float(H[a][b].evaluate(list(z)))
    return out


def diffusion_matrix(h, scales: ModeScales, z) -> np.ndarray:
    """D(z) = (C / 2 kappa^2) [H''(z), J]."""
    h = _as_real(h, scales)
    Hz = hessian_at(h, z)
    J = symplectic_matrix(h.modes)
    return scales.C / (2.0 * scales.kappa ** 2) * (Hz @ J - J @ Hz)


def complex_diffusion_block(h: PhaseSpacePolynomial, i: int, j: int, C=1.0) -> PhaseSpacePolynomial:
    """C d^2 h / d conj(alpha_i) d conj(alpha_j)."""
    if not h.is_real():
        raise ValueError("complex_diffusion_block needs a real-valued symbol")
    d = differentiate(differentiate(h, i, ANTIHOLOMORPHIC), j, ANTIHOLOMORPHIC)
    return d * C


def real_blocks_from_complex(B: np.ndarray, kappa: float) -> np.ndarray:
    """Real 2N x 2N diffusion from the complex block B_ij = C h_{a*_i a*_j}.

    With X = d^2 h / d a*_i d a*_j one has H_QQ - H_PP = 2 kappa Re X and
    H_QP + H_PQ^T = 2 kappa Im X, so
    D = (1 / kappa) [[-Im B, Re B], [Re B, Im B]].
    """
    return np.block([[-B.imag, B.real], [B.real, B.imag]]) / kappa


def consistency_check_appendixA(h: PhaseSpacePolynomial, scales: ModeScales, z) -> float:
    """Max entrywise gap between the commutator route and the complex-block route."""
    z = np.asarray(z, dtype=float)
    N = h.modes
    D_a = diffusion_matrix(to_real_polynomial(h, scales.kappa), scales, z)
    s = math.sqrt(scales.kappa / 2.0)
    alphas = [s * (z[i] + 1j * z[N + i]) for i in range(N)]
    B = np.empty((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            B[i, j] = complex(complex_diffusion_block(h, i, j, scales.C).evaluate(alphas))
    D_b = real_blocks_from_complex(B, scales.kappa)
    return float(np.max(np.abs(D_a - D_b)))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    pairing_residual: float
    trace: float


def spectrum_report(D, tol=1e-12) -> SpectrumReport:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("need a square matrix")
    if np.max(np.abs(D - D.T), initial=0.0) > tol:
        raise ValueError("matrix is not symmetric")
    lam = np.sort(np.linalg.eigvalsh(0.5 * (D + D.T)))
    resid = float(np.max(np.abs(lam + lam[::-1]), initial=0.0))
    return SpectrumReport(lam, resid, float(np.trace(D)))


def anticommutator_residual(D) -> float:
    N = D.shape[0] // 2
    J = symplectic_matrix(N)
    return float(np.max(np.abs(D @ J + J @ D)))
