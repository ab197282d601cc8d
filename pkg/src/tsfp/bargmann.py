"""Gauss-weighted polynomial (Hermite-Gauss) representation of phase-space densities.

A density is stored as

    rho(alpha) = sum_{m, n} c[m, n] e_{m, n}(alpha),
    e_{m, n} = exp(-|alpha|^2 / hbar) alpha^m conj(alpha)^n / sqrt(m! n! hbar^(|m|+|n|))

with per-mode degree cutoff K. Every operator in the phase-space evolution
(multiplication by alpha, conj(alpha) and the complex derivatives) maps this
basis to itself with a shift of one index, so the evolution operator is
applied exactly and the only discretisation error is the degree cutoff.
Coefficients are complex arrays of shape (K+1,)*2N with axes
(m_1..m_N, n_1..n_N).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .algebra import PhaseSpacePolynomial, derivative
from .grid import DensityGrid, PhaseGrid


def scaled_monomials(alpha, K, hbar=1.0):
    """phi_k(alpha) = alpha^k exp(-|alpha|^2 / 2 hbar) / sqrt(k! hbar^k), k = 0..K.

    Log-space, so large |alpha| neither overflows nor underflows early.
    Returns an array with a trailing axis of length K+1.
    """
    alpha = np.asarray(alpha, dtype=complex)
    k = np.arange(K + 1)
    r = np.abs(alpha)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r / math.sqrt(hbar))
        mag = np.where(k == 0, 0.0, k * logr) - 0.5 * gammaln(k + 1) - r ** 2 / (2 * hbar)
    mag = np.where((r == 0) & (k > 0), -np.inf, mag)
    phase = np.exp(1j * k * np.angle(alpha)[..., None])
    return np.exp(mag) * phase


class GaussPolyState:
    """Coefficients of a density in the Gauss-weighted polynomial basis."""

    def __init__(self, coeffs, hbar=1.0, time=0.0):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim % 2 or c.ndim == 0:
            raise ValueError("coefficient array needs 2N axes")
        if len(set(c.shape)) != 1:
            raise ValueError("all axes must share the same cutoff")
        self.coeffs = c
        self.hbar = float(hbar)
        self.time = float(time)

    @property
    def N(self):
        return self.coeffs.ndim // 2

    @property
    def K(self):
        return self.coeffs.shape[0] - 1

    # constructors -------------------------------------------------------
    @classmethod
    def _product(cls, factors, hbar):
        # factors: list of (K+1, K+1) single-mode arrays indexed [m, n]
        N = len(factors)
        c = factors[0]
        for f in factors[1:]:
            c = np.multiply.outer(c, f)
        # axes now (m1, n1, m2, n2, ...); reorder to (m..., n...)
        order = [2 * i for i in range(N)] + [2 * i + 1 for i in range(N)]
        return cls(np.transpose(c, order), hbar)

    @classmethod
    def coherent(cls, betas, K, hbar=1.0):
        """Husimi function of the coherent state |beta>."""
        betas = np.atleast_1d(np.asarray(betas, dtype=complex))
        facs = []
        for b in betas:
            u = scaled_monomials(np.conj(b), K, hbar)  # (conj b)^m e^{-|b|^2/2hbar} / sqrt(m! hbar^m)
            facs.append(np.outer(u, np.conj(u)) / (math.pi * hbar))
        return cls._product(facs, hbar)

    @classmethod
    def number_state(cls, occupations, K, hbar=1.0):
        """Husimi function of |n_1 .. n_N>: c[k, k] = 1 / (pi hbar)."""
        facs = []
        for n in np.atleast_1d(occupations):
            if not 0 <= int(n) <= K:
                raise ValueError("occupation beyond the degree cutoff")
            f = np.zeros((K + 1, K + 1), dtype=complex)
            f[int(n), int(n)] = 1.0 / (math.pi * hbar)
            facs.append(f)
        return cls._product(facs, hbar)

    def copy(self):
        return GaussPolyState(self.coeffs.copy(), self.hbar, self.time)

    # exact functionals ----------------------------------------------------
    def mass(self):
        """(pi hbar)^N sum_m c[m, m]."""
        N, K = self.N, self.K
        c = self.coeffs.reshape((K + 1) ** N, (K + 1) ** N)
        return float(np.trace(c).real * (math.pi * self.hbar) ** N)

    def hs_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def hermiticity_residual(self):
        N, K = self.N, self.K
        c = self.coeffs.reshape((K + 1) ** N, (K + 1) ** N)
        return float(np.max(np.abs(c - c.conj().T)))

    def edge_weight(self):
        """Largest |coefficient| touching the degree cutoff, relative to the largest overall."""
        c = np.abs(self.coeffs)
        top = c.max()
        edge = max(np.take(c, -1, axis=a).max() for a in range(c.ndim))
        return float(edge / top) if top else 0.0

    def time_reverse(self):
        """alpha -> conj(alpha): swap holomorphic and antiholomorphic axes."""
        N = self.N
        order = list(range(N, 2 * N)) + list(range(N))
        return GaussPolyState(np.transpose(self.coeffs, order).copy(), self.hbar, self.time)

    # sampling ------------------------------------------------------------
    def sample(self, grid: PhaseGrid, kappa=1.0) -> DensityGrid:
        if grid.N != self.N:
            raise ValueError("grid and state mode counts differ")
        N, K, n = self.N, self.K, grid.n_pts
        x = grid.axis()
        s = math.sqrt(kappa / 2.0)
        al = s * (x[:, None] + 1j * x[None, :])  # (Q, P) plane of one mode
        phi = scaled_monomials(al, K, self.hbar).reshape(n * n, K + 1)
        Kp = K + 1
        P, K2 = n * n, Kp * Kp
        # coefficient axes -> (m1, n1, m2, n2, ...)
        order = []
        for i in range(N):
            order += [i, N + i]
        T = np.transpose(self.coeffs, order).reshape(Kp, Kp, -1)
        for i in range(N):
            # contract the leading mode pair (m, n) at each grid point; the
            # grid index goes last. Two routes, picked by intermediate size.
            R = T.shape[2]
            if P * Kp * R <= 1 << 24:
                X = phi @ T.reshape(Kp, Kp * R)                       # (p, n * r)
                out = np.einsum("pnr,pn->rp", X.reshape(P, Kp, R), np.conj(phi))
            else:
                out = np.empty((R, P), dtype=complex)
                flat = T.reshape(K2, R).T
                chunk = max(1, (1 << 22) // K2)
                for lo in range(0, P, chunk):
                    ph = phi[lo:lo + chunk]
                    B = (ph[:, :, None] * np.conj(ph[:, None, :])).reshape(len(ph), K2)
                    out[:, lo:lo + chunk] = flat @ B.T
            T = out.reshape(Kp, Kp, -1) if i < N - 1 else out
        vals = T.real.reshape([n, n] * N)
        # axes (Q1, P1, Q2, P2, ...) -> (Q1..QN, P1..PN)
        vals = np.transpose(vals, [2 * i for i in range(N)] + [2 * i + 1 for i in range(N)])
        return DensityGrid(grid, np.ascontiguousarray(vals), self.time, kappa)


class GaussPolyOperator:
    """Exact action of the phase-space generator on ``GaussPolyState`` coefficients.

    rate = (i/hbar) sum_{1<=|m|<=cap} w_|m| hbar^|m| / m! [d^m(dbar^m h rho) - dbar^m(d^m h rho)]

    with w_2 = C (the diffusion constant) and w = 1 otherwise. cap = 1 is the
    pure Liouville flow, cap = 2 the Fokker-Planck equation.
    """

    def __init__(self, h_aW: PhaseSpacePolynomial, K: int, order_cap: int = 2,
                 hbar=1.0, C=1.0):
        from .spectral import multi_indices
        if order_cap < 1:
            raise ValueError("order cap must be at least 1")
        self.h = h_aW
        self.N = h_aW.modes
        self.K = K
        self.hbar = float(hbar)
        self.order_cap = order_cap
        # multiplying by d^m h and then applying |m| derivatives raises any
        # index by at most deg(h)
        self.pad = max(h_aW.degree, 1)
        self.M = K + 1 + self.pad
        j = np.arange(self.M, dtype=float)
        self._up = np.sqrt(j[1:] * self.hbar)      # alpha e_k -> sqrt((k+1) hbar) e_{k+1}
        self._down = np.sqrt(j[1:] / self.hbar)    # d/dalpha alpha^k part
        self.terms = []   # (coef, {(a, b): c_mono}, m, holomorphic_outer)
        for m in multi_indices(self.N, 1, order_cap):
            order = sum(m)
            w = C if order == 2 else 1.0
            coef = (1j / self.hbar) * w * self.hbar ** order / math.prod(math.factorial(x) for x in m)
            g1 = derivative(h_aW, antihol=m)
            g2 = derivative(h_aW, hol=m)
            if not g1.is_zero():
                self.terms.append((coef, self._monos(g1), m, True))
            if not g2.is_zero():
                self.terms.append((-coef, self._monos(g2), m, False))

    @staticmethod
    def _monos(p):
        return [(mn[0], mn[1], complex(c)) for mn, c in p.terms.items()]

    # single-axis shifts ------------------------------------------------------
    def _raise(self, X, axis):
        Y = np.zeros_like(X)
        src = [slice(None)] * X.ndim
        dst = [slice(None)] * X.ndim
        src[axis] = slice(0, -1)
        dst[axis] = slice(1, None)
        w = self._up.reshape([-1 if a == axis else 1 for a in range(X.ndim)])
        Y[tuple(dst)] = w * X[tuple(src)]
        return Y

    def _lower(self, X, axis):
        Y = np.zeros_like(X)
        src = [slice(None)] * X.ndim
        dst = [slice(None)] * X.ndim
        src[axis] = slice(1, None)
        dst[axis] = slice(0, -1)
        w = self._down.reshape([-1 if a == axis else 1 for a in range(X.ndim)])
        Y[tuple(dst)] = w * X[tuple(src)]
        return Y

    def mul_alpha(self, X, i):
        return self._raise(X, i)

    def mul_alpha_conj(self, X, i):
        return self._raise(X, self.N + i)

    def d_alpha(self, X, i):
        # d/dalpha (w p) = w (dp/dalpha - conj(alpha) p / hbar)
        return self._lower(X, i) - self._raise(X, self.N + i) / self.hbar

    def d_alpha_conj(self, X, i):
        return self._lower(X, self.N + i) - self._raise(X, i) / self.hbar

    # application ------------------------------------------------------------
    def _pad(self, c):
        out = np.zeros((self.M,) * c.ndim, dtype=complex)
        out[(slice(0, self.K + 1),) * c.ndim] = c
        return out

    def apply(self, c):
        if c.shape != (self.K + 1,) * (2 * self.N):
            raise ValueError("coefficient shape does not match the operator cutoff")
        X = self._pad(c)
        cache = {}

        def moment(a, b):
            # alpha^a conj(alpha)^b X, built incrementally and cached
            key = (a, b)
            if key in cache:
                return cache[key]
            if sum(a) + sum(b) == 0:
                cache[key] = X
                return X
            for i in range(self.N):
                if a[i]:
                    prev = tuple(x - (j == i) for j, x in enumerate(a))
                    out = self.mul_alpha(moment(prev, b), i)
                    break
            else:
                for i in range(self.N):
                    if b[i]:
                        prev = tuple(x - (j == i) for j, x in enumerate(b))
                        out = self.mul_alpha_conj(moment(a, prev), i)
                        break
            cache[key] = out
            return out

        total = np.zeros_like(X)
        for coef, monos, m, hol_outer in self.terms:
            acc = np.zeros_like(X)
            for a, b, cm in monos:
                acc += cm * moment(a, b)
            for i, k in enumerate(m):
                for _ in range(k):
                    acc = self.d_alpha(acc, i) if hol_outer else self.d_alpha_conj(acc, i)
            total += coef * acc
        return total[(slice(0, self.K + 1),) * (2 * self.N)]

    def __call__(self, state: GaussPolyState) -> GaussPolyState:
        return GaussPolyState(self.apply(state.coeffs), state.hbar, state.time)

    def spectral_radius(self, iters=40, seed=0):
        """Power-iteration estimate of the largest |eigenvalue|."""
        rng = np.random.default_rng(seed)
        shape = (self.K + 1,) * (2 * self.N)
        x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        x /= np.linalg.norm(x)
        est = 0.0
        for _ in range(iters):
            y = self.apply(x)
            nrm = np.linalg.norm(y)
            if nrm == 0:
                return 0.0
            est = nrm
            x = y / nrm
        return float(est)
