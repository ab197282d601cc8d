"""Ladder-operator polynomials, phase-space polynomials and their symbols.

Conventions
-----------
* ``OperatorPolynomial`` words are products of ``a_i`` / ``a_i^+`` read left
  to right as written (so the rightmost factor acts first on a ket).
* Factors on different modes commute, so the canonical word keeps each mode's
  factors in their original relative order and sorts modes ascending. Being
  anti-normally ordered is therefore a per-mode property.
* ``PhaseSpacePolynomial`` stores ``sum c[m, n] alpha^m conj(alpha)^n`` with
  multi-indices ``m`` (holomorphic) and ``n`` (antiholomorphic).
* ``RealPolynomial`` lives in the dimensionless real coordinates
  ``z = (Q_1..Q_N, P_1..P_N)``.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .exact import (GaussianRational, coerce, conj, format_coeff, is_zero,
                    parse_coeff)

ANNIHILATION = False
CREATION = True

HOLOMORPHIC = "hol"
ANTIHOLOMORPHIC = "antihol"


def _check_modes(modes):
    if not isinstance(modes, int) or modes < 1:
        raise ValueError(f"mode count must be a positive integer, got {modes!r}")


# ---------------------------------------------------------------------------
# operator side
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderWord:
    """One product of ladder operators with a coefficient."""

    factors: tuple
    coefficient: object = 1

    def __post_init__(self):
        object.__setattr__(self, "factors",
                           tuple((int(m), bool(k)) for m, k in self.factors))
        object.__setattr__(self, "coefficient", coerce(self.coefficient))

    @property
    def degree(self):
        return len(self.factors)


def _canonical_factors(factors):
    # stable sort: modes commute, same-mode order is kept
    return tuple(sorted(factors, key=lambda f: f[0]))


class OperatorPolynomial:
    """Formal sum of ladder words over ``modes`` bosonic modes."""

    def __init__(self, modes: int, terms: Mapping | Iterable = ()):
        _check_modes(modes)
        self.modes = modes
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for item in items:
            if isinstance(item, LadderWord):
                factors, c = item.factors, item.coefficient
            else:
                factors, c = item
                factors = tuple((int(m), bool(k)) for m, k in factors)
            for m, _ in factors:
                if not 0 <= m < modes:
                    raise ValueError(f"mode index {m} outside [0, {modes})")
            key = _canonical_factors(factors)
            acc[key] = acc.get(key, 0) + coerce(c)
        self.terms = {k: v for k, v in acc.items() if not is_zero(v)}

    # constructors ---------------------------------------------------------
    @classmethod
    def annihilation(cls, mode, modes=1):
        return cls(modes, {((mode, ANNIHILATION),): 1})

    @classmethod
    def creation(cls, mode, modes=1):
        return cls(modes, {((mode, CREATION),): 1})

    @classmethod
    def constant(cls, c, modes=1):
        return cls(modes, {(): c})

    @classmethod
    def number(cls, mode, modes=1):
        return cls(modes, {((mode, CREATION), (mode, ANNIHILATION)): 1})

    # algebra --------------------------------------------------------------
    def _same(self, other):
        if isinstance(other, OperatorPolynomial):
            if other.modes != self.modes:
                raise ValueError("mode counts differ")
            return other
        return OperatorPolynomial.constant(other, self.modes)

    def __add__(self, other):
        other = self._same(other)
        return OperatorPolynomial(self.modes, list(self.terms.items())
                                  + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return OperatorPolynomial(self.modes, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._same(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, OperatorPolynomial):
            c = coerce(other)
            return OperatorPolynomial(self.modes, {k: v * c for k, v in self.terms.items()})
        other = self._same(other)
        out = []
        for (f1, c1), (f2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            out.append((f1 + f2, c1 * c2))
        return OperatorPolynomial(self.modes, out)

    def __rmul__(self, other):
        c = coerce(other)
        return OperatorPolynomial(self.modes, {k: c * v for k, v in self.terms.items()})

    def __pow__(self, k):
        out = OperatorPolynomial.constant(1, self.modes)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return (isinstance(other, OperatorPolynomial) and self.modes == other.modes
                and self.terms == other.terms)

    def __repr__(self):
        return f"OperatorPolynomial(modes={self.modes}, terms={len(self.terms)})"

    def dagger(self):
        return OperatorPolynomial(
            self.modes,
            [(tuple((m, not k) for m, k in reversed(f)), conj(c))
             for f, c in self.terms.items()])

    @property
    def words(self):
        return [LadderWord(f, c) for f, c in self.terms.items()]

    @property
    def degree(self):
        return max((len(f) for f in self.terms), default=0)

    def is_anti_normal_ordered(self):
        for f in self.terms:
            for mode in range(self.modes):
                kinds = [k for m, k in f if m == mode]
                if any(kinds[i] and not kinds[i + 1] for i in range(len(kinds) - 1)):
                    return False
        return True

    # text -----------------------------------------------------------------
    def to_text(self):
        lines = []
        for f in sorted(self.terms, key=lambda f: (len(f), f)):
            toks = " ".join(f"a{m}{'+' if k else ''}" for m, k in f)
            lines.append(f"{format_coeff(self.terms[f])} : {toks}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, modes=None):
        rows = []
        top = -1
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ValueError(f"line {lineno}: expected 'coeff_re coeff_im : word'")
            left, right = line.split(":", 1)
            parts = left.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: need two coefficient fields")
            factors = []
            for tok in right.split():
                dag = tok.endswith("+")
                body = tok[:-1] if dag else tok
                if not body.startswith("a") or not body[1:].isdigit():
                    raise ValueError(f"line {lineno}: bad ladder token {tok!r}")
                m = int(body[1:])
                top = max(top, m)
                factors.append((m, dag))
            rows.append((tuple(factors), parse_coeff(*parts)))
        n = modes if modes is not None else max(top + 1, 1)
        return cls(n, rows)


@lru_cache(maxsize=None)
def _anti_single(seq):
    """Anti-normal expansion of one mode's word: {(p, q): int} for a^p a+^q."""
    for i in range(len(seq) - 1):
        if seq[i] and not seq[i + 1]:
            # a+ a = a a+ - 1
            swapped = seq[:i] + (False, True) + seq[i + 2:]
            dropped = seq[:i] + seq[i + 2:]
            out = dict(_anti_single(swapped))
            for key, v in _anti_single(dropped).items():
                out[key] = out.get(key, 0) - v
            return {k: v for k, v in out.items() if v}
    p = sum(1 for k in seq if not k)
    return {(p, len(seq) - p): 1}


def _expand_anti(factors, modes):
    """Per-word expansion into {(m, n): int}."""
    per_mode = []
    for mode in range(modes):
        seq = tuple(k for m, k in factors if m == mode)
        per_mode.append(_anti_single(seq).items())
    out = {}
    for combo in itertools.product(*per_mode):
        m = tuple(pq[0] for pq, _ in combo)
        n = tuple(pq[1] for pq, _ in combo)
        coef = 1
        for _, v in combo:
            coef *= v
        out[(m, n)] = out.get((m, n), 0) + coef
    return out


def _monomial_word(m, n):
    f = []
    for mode, (p, q) in enumerate(zip(m, n)):
        f += [(mode, ANNIHILATION)] * p + [(mode, CREATION)] * q
    return tuple(f)


def antinormal_order(p: OperatorPolynomial) -> OperatorPolynomial:
    """Rewrite with every annihilator left of every creator (per mode)."""
    acc = {}
    for f, c in p.terms.items():
        for (m, n), v in _expand_anti(f, p.modes).items():
            key = _monomial_word(m, n)
            acc[key] = acc.get(key, 0) + c * v
    return OperatorPolynomial(p.modes, acc)


# ---------------------------------------------------------------------------
# phase-space side
# ---------------------------------------------------------------------------

class PhaseSpacePolynomial:
    """sum c[m, n] alpha^m conj(alpha)^n over ``modes`` complex variables."""

    def __init__(self, modes: int, terms: Mapping | Iterable = ()):
        _check_modes(modes)
        self.modes = modes
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for (m, n), c in items:
            m, n = tuple(int(x) for x in m), tuple(int(x) for x in n)
            if len(m) != modes or len(n) != modes or min(m + n) < 0:
                raise ValueError(f"bad multi-index pair {(m, n)} for {modes} modes")
            acc[(m, n)] = acc.get((m, n), 0) + coerce(c)
        self.terms = {k: v for k, v in acc.items() if not is_zero(v)}
        self._numeric = None

    @classmethod
    def constant(cls, c, modes=1):
        z = (0,) * modes
        return cls(modes, {(z, z): c})

    @classmethod
    def alpha(cls, mode, modes=1):
        e = tuple(int(i == mode) for i in range(modes))
        return cls(modes, {(e, (0,) * modes): 1})

    @classmethod
    def alpha_conj(cls, mode, modes=1):
        e = tuple(int(i == mode) for i in range(modes))
        return cls(modes, {((0,) * modes, e): 1})

    def _same(self, other):
        if isinstance(other, PhaseSpacePolynomial):
            if other.modes != self.modes:
                raise ValueError("mode counts differ")
            return other
        return PhaseSpacePolynomial.constant(other, self.modes)

    def __add__(self, other):
        other = self._same(other)
        return PhaseSpacePolynomial(self.modes, list(self.terms.items())
                                    + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return PhaseSpacePolynomial(self.modes, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._same(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PhaseSpacePolynomial):
            c = coerce(other)
            return PhaseSpacePolynomial(self.modes, {k: v * c for k, v in self.terms.items()})
        other = self._same(other)
        out = []
        for ((m1, n1), c1), ((m2, n2), c2) in itertools.product(self.terms.items(),
                                                                 other.terms.items()):
            key = (tuple(a + b for a, b in zip(m1, m2)), tuple(a + b for a, b in zip(n1, n2)))
            out.append((key, c1 * c2))
        return PhaseSpacePolynomial(self.modes, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = PhaseSpacePolynomial.constant(1, self.modes)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return (isinstance(other, PhaseSpacePolynomial) and self.modes == other.modes
                and self.terms == other.terms)

    def __repr__(self):
        return f"PhaseSpacePolynomial(modes={self.modes}, terms={len(self.terms)})"

    def is_zero(self):
        return not self.terms

    # symmetry -------------------------------------------------------------
    def conjugate(self):
        """Pointwise complex conjugate of the function."""
        return PhaseSpacePolynomial(self.modes, [((n, m), conj(c))
                                                 for (m, n), c in self.terms.items()])

    def swap(self):
        """alpha <-> conj(alpha), i.e. momentum reversal."""
        return PhaseSpacePolynomial(self.modes, [((n, m), c)
                                                 for (m, n), c in self.terms.items()])

    def _close(self, other, tol):
        keys = set(self.terms) | set(other.terms)
        for k in keys:
            a = self.terms.get(k, 0)
            b = other.terms.get(k, 0)
            d = a - b
            if isinstance(d, GaussianRational):
                if d:
                    return False
            elif abs(d) > tol * max(1.0, abs(a), abs(b)):
                return False
        return True

    def is_real(self, tol=1e-12):
        """c[m, n] == conj(c[n, m]); exact for rational coefficients."""
        return self._close(self.conjugate(), tol)

    def is_swap_invariant(self, tol=1e-12):
        return self._close(self.swap(), tol)

    # degrees --------------------------------------------------------------
    @property
    def holomorphic_degree(self):
        return max((sum(m) for m, _ in self.terms), default=0)

    @property
    def antiholomorphic_degree(self):
        return max((sum(n) for _, n in self.terms), default=0)

    @property
    def degree(self):
        return max((sum(m) + sum(n) for m, n in self.terms), default=0)

    # evaluation -----------------------------------------------------------
    def numeric_terms(self):
        if self._numeric is None:
            self._numeric = [(m, n, complex(c)) for (m, n), c in self.terms.items()]
        return self._numeric

    def evaluate(self, alphas):
        """Evaluate at complex arrays ``alphas[i]`` (broadcastable)."""
        alphas = [np.asarray(a, dtype=complex) for a in alphas]
        if len(alphas) != self.modes:
            raise ValueError("need one complex array per mode")
        shape = np.broadcast_shapes(*(a.shape for a in alphas))
        cache = {}

        def power(i, k, bar):
            key = (i, k, bar)
            if key not in cache:
                base = np.conj(alphas[i]) if bar else alphas[i]
                cache[key] = base ** k if k > 1 else (base if k == 1 else None)
            return cache[key]

        out = np.zeros(shape, dtype=complex)
        for m, n, c in self.numeric_terms():
            term = c
            for i in range(self.modes):
                for k, bar in ((m[i], False), (n[i], True)):
                    if k:
                        term = term * power(i, k, bar)
            out = out + term
        return out

    # text -----------------------------------------------------------------
    def to_text(self):
        lines = []
        for (m, n) in sorted(self.terms, key=lambda k: (sum(k[0]) + sum(k[1]), k)):
            lines.append(f"{format_coeff(self.terms[(m, n)])} : "
                         f"{' '.join(map(str, m))} | {' '.join(map(str, n))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, modes=None):
        rows = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                left, right = line.split(":", 1)
                hol, anti = right.split("|", 1)
                re_tok, im_tok = left.split()
                m = tuple(int(x) for x in hol.split())
                n = tuple(int(x) for x in anti.split())
            except ValueError as exc:
                raise ValueError(f"line {lineno}: expected "
                                 f"'coeff_re coeff_im : m_1 .. m_N | n_1 .. n_N'") from exc
            if len(m) != len(n):
                raise ValueError(f"line {lineno}: multi-index lengths differ")
            rows.append(((m, n), parse_coeff(re_tok, im_tok)))
        if modes is None:
            if not rows:
                raise ValueError("empty polynomial text needs an explicit mode count")
            modes = len(rows[0][0][0])
        return cls(modes, rows)


def anti_wick_symbol(p: OperatorPolynomial) -> PhaseSpacePolynomial:
    """Anti-Wick symbol: anti-normal order, then a -> alpha, a+ -> conj(alpha)."""
    acc = []
    for f, c in p.terms.items():
        for key, v in _expand_anti(f, p.modes).items():
            acc.append((key, c * v))
    return PhaseSpacePolynomial(p.modes, acc)


def anti_wick_quantize(h: PhaseSpacePolynomial) -> OperatorPolynomial:
    """alpha^m conj(alpha)^n -> a^m (a+)^n, the inverse of ``anti_wick_symbol``."""
    return OperatorPolynomial(h.modes, [(_monomial_word(m, n), c)
                                        for (m, n), c in h.terms.items()])


def differentiate(p: PhaseSpacePolynomial, mode: int, slot: str) -> PhaseSpacePolynomial:
    if not 0 <= mode < p.modes:
        raise ValueError(f"mode {mode} outside [0, {p.modes})")
    if slot not in (HOLOMORPHIC, ANTIHOLOMORPHIC):
        raise ValueError(f"slot must be {HOLOMORPHIC!r} or {ANTIHOLOMORPHIC!r}")
    out = []
    for (m, n), c in p.terms.items():
        idx = m if slot == HOLOMORPHIC else n
        k = idx[mode]
        if k == 0:
            continue
        lowered = tuple(x - (i == mode) for i, x in enumerate(idx))
        key = (lowered, n) if slot == HOLOMORPHIC else (m, lowered)
        out.append((key, c * k))
    return PhaseSpacePolynomial(p.modes, out)


def derivative(p: PhaseSpacePolynomial, hol=None, antihol=None) -> PhaseSpacePolynomial:
    """Apply d^hol / d alpha^hol and d^antihol / d conj(alpha)^antihol (multi-indices)."""
    out = p
    for slot, idx in ((HOLOMORPHIC, hol), (ANTIHOLOMORPHIC, antihol)):
        if idx is None:
            continue
        for mode, k in enumerate(idx):
            for _ in range(k):
                out = differentiate(out, mode, slot)
    return out


@dataclass
class TruncationResult:
    satisfied: bool
    witness: tuple | None = None  # (slot, (i, j, k), residual polynomial)

    def __bool__(self):
        return self.satisfied


def check_truncation(h: PhaseSpacePolynomial) -> TruncationResult:
    """All pure third derivatives vanish identically?"""
    if not h.is_real():
        raise ValueError("check_truncation needs a real-valued symbol")
    for slot in (HOLOMORPHIC, ANTIHOLOMORPHIC):
        for triple in itertools.combinations_with_replacement(range(h.modes), 3):
            d = h
            for mode in triple:
                d = differentiate(d, mode, slot)
            if not d.is_zero():
                return TruncationResult(False, (slot, triple, d))
    return TruncationResult(True, None)


# ---------------------------------------------------------------------------
# real polynomials in z = (Q_1..Q_N, P_1..P_N)
# ---------------------------------------------------------------------------

class RealPolynomial:
    """Real polynomial in 2N variables, float coefficients."""

    def __init__(self, modes: int, terms: Mapping | Iterable = ()):
        _check_modes(modes)
        self.modes = modes
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for e, c in items:
            e = tuple(int(x) for x in e)
            if len(e) != 2 * modes:
                raise ValueError("exponent tuple must have 2N entries")
            acc[e] = acc.get(e, 0.0) + float(c)
        self.terms = {k: v for k, v in acc.items() if v != 0.0}

    @property
    def nvars(self):
        return 2 * self.modes

    @classmethod
    def constant(cls, c, modes=1):
        return cls(modes, {(0,) * (2 * modes): c})

    @classmethod
    def variable(cls, index, modes=1):
        e = tuple(int(i == index) for i in range(2 * modes))
        return cls(modes, {e: 1.0})

    def _same(self, other):
        if isinstance(other, RealPolynomial):
            if other.modes != self.modes:
                raise ValueError("mode counts differ")
            return other
        return RealPolynomial.constant(other, self.modes)

    def __add__(self, other):
        other = self._same(other)
        return RealPolynomial(self.modes, list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return RealPolynomial(self.modes, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._same(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RealPolynomial):
            c = float(other)
            return RealPolynomial(self.modes, {k: v * c for k, v in self.terms.items()})
        other = self._same(other)
        out = []
        for (e1, c1), (e2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return RealPolynomial(self.modes, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, RealPolynomial) and self.modes == other.modes
                and self.terms == other.terms)

    def __repr__(self):
        return f"RealPolynomial(modes={self.modes}, terms={len(self.terms)})"

    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def differentiate(self, var: int) -> RealPolynomial:
        out = []
        for e, c in self.terms.items():
            if e[var]:
                e2 = tuple(x - (i == var) for i, x in enumerate(e))
                out.append((e2, c * e[var]))
        return RealPolynomial(self.modes, out)

    def gradient(self):
        return [self.differentiate(a) for a in range(self.nvars)]

    def hessian(self):
        """2N x 2N nested list, symmetric by construction."""
        g = self.gradient()
        H = [[None] * self.nvars for _ in range(self.nvars)]
        for a in range(self.nvars):
            for b in range(a, self.nvars):
                H[a][b] = g[a].differentiate(b)
                H[b][a] = H[a][b]
        return H

    def scale_variables(self, factors, squares=None):
        """p(z) -> p(diag(factors) z); used for physical -> dimensionless.

        ``squares`` optionally gives each factor's square as an exact
        rational, so even powers pick up no rounding.
        """
        out = []
        for e, c in self.terms.items():
            s = Fraction(c) if squares is not None else c
            for v, (f, k) in enumerate(zip(factors, e)):
                if not k:
                    continue
                if squares is not None:
                    s *= Fraction(squares[v]) ** (k // 2)
                    if k % 2:
                        s *= Fraction(float(f))
                else:
                    s *= float(f) ** k
            out.append((e, float(s)))
        return RealPolynomial(self.modes, out)

    def evaluate(self, coords):
        """``coords`` is a sequence of 2N broadcastable arrays (or floats)."""
        coords = [np.asarray(c, dtype=float) for c in coords]
        if len(coords) != self.nvars:
            raise ValueError("need 2N coordinate arrays")
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        out = np.zeros(shape)
        cache = {}
        for e, c in self.terms.items():
            term = c
            for v, k in enumerate(e):
                if k:
                    if (v, k) not in cache:
                        cache[(v, k)] = coords[v] ** k
                    term = term * cache[(v, k)]
            out = out + term
        return out


def to_real_polynomial(h: PhaseSpacePolynomial, kappa: float = 1.0,
                       tol: float = 1e-12) -> RealPolynomial:
    """Substitute alpha_j = sqrt(kappa/2) (Q_j + i P_j)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if not h.is_real():
        raise ValueError("to_real_polynomial needs a real-valued symbol")
    N = h.modes
    acc: dict = {}
    for (m, n), c in h.terms.items():
        deg = sum(m) + sum(n)
        half = kappa / 2.0
        scale = half ** (deg // 2) * (math.sqrt(half) if deg % 2 else 1.0)
        # per mode: (Q + iP)^m (Q - iP)^n = sum_{j,k} C(m,j) C(n,k) Q^{m-j+n-k} (iP)^j (-iP)^k
        per_mode = []
        for i in range(N):
            opts = []
            for j in range(m[i] + 1):
                for k in range(n[i] + 1):
                    w = math.comb(m[i], j) * math.comb(n[i], k) * (1j ** j) * ((-1j) ** k)
                    opts.append((m[i] - j + n[i] - k, j + k, w))
            per_mode.append(opts)
        cc = complex(c) * scale
        for combo in itertools.product(*per_mode):
            q = tuple(o[0] for o in combo)
            p = tuple(o[1] for o in combo)
            w = cc
            for o in combo:
                w *= o[2]
            acc[q + p] = acc.get(q + p, 0) + w
    big = max((abs(v) for v in acc.values()), default=0.0)
    out = {}
    for e, v in acc.items():
        if abs(v.imag) > tol * max(1.0, big):
            raise ValueError(f"imaginary residue {v.imag:.3e} on monomial {e}")
        out[e] = v.real
    return RealPolynomial(N, out)


def from_real_polynomial(hr: RealPolynomial, kappa: float = 1.0) -> PhaseSpacePolynomial:
    """Inverse of ``to_real_polynomial``: Q = (a + a*) / sqrt(2 kappa), P = -i (a - a*) / sqrt(2 kappa)."""
    N = hr.modes
    Qs = [PhaseSpacePolynomial.alpha(i, N) + PhaseSpacePolynomial.alpha_conj(i, N)
          for i in range(N)]
    Ps = [(PhaseSpacePolynomial.alpha(i, N) - PhaseSpacePolynomial.alpha_conj(i, N))
          * GaussianRational(0, -1) for i in range(N)]
    inv = 1.0 / (2.0 * kappa)
    out = PhaseSpacePolynomial(N)
    for e, c in hr.terms.items():
        d = sum(e)
        # keep even powers of 1/(2 kappa) free of a rounded square root
        scale = inv ** (d // 2) * (math.sqrt(inv) if d % 2 else 1.0)
        term = PhaseSpacePolynomial.constant(c * scale, N)
        for v, k in enumerate(e):
            if k:
                term = term * ((Qs + Ps)[v] ** k)
        out = out + term
    return out


def physical_to_dimensionless(h_phys: RealPolynomial, lengths, kappa,
                              length_squares=None) -> RealPolynomial:
    """H(q, p) -> H(l Q, (kappa / l) P).

    Pass ``length_squares`` (exact l^2 per mode) to scale quadratic terms
    without rounding; see ``free_length_squares``.
    """
    lengths = list(lengths)
    factors = lengths + [kappa / l for l in lengths]
    squares = None
    if length_squares is not None:
        sq = [Fraction(x) for x in length_squares]
        squares = sq + [Fraction(kappa) ** 2 / x for x in sq]
    return h_phys.scale_variables(factors, squares)


def free_length_squares(frequencies, kappa=1.0):
    """l_k^2 = kappa / omega_k as exact rationals."""
    return [Fraction(kappa) / Fraction(w) for w in frequencies]


# ---------------------------------------------------------------------------
# model Hamiltonians
# ---------------------------------------------------------------------------

def _a(i, N):
    return OperatorPolynomial.annihilation(i, N)


def _ad(i, N):
    return OperatorPolynomial.creation(i, N)


def kerr_operator(omega=1, U=0.5):
    """omega a+a + (U/2) a+a+aa."""
    a, ad = _a(0, 1), _ad(0, 1)
    return coerce(omega) * (ad * a) + coerce(U) / 2 * (ad * ad * a * a)


def bose_hubbard_operator(sites=2, J=1, U=1, mu=0, periodic=False):
    """-J sum_<ij> (a_i+ a_j + h.c.) + (U/2) sum n_i(n_i - 1) - mu sum n_i."""
    N = sites
    H = OperatorPolynomial(N)
    bonds = [(i, i + 1) for i in range(N - 1)]
    if periodic and N > 2:
        bonds.append((N - 1, 0))
    for i, j in bonds:
        H = H - coerce(J) * (_ad(i, N) * _a(j, N) + _ad(j, N) * _a(i, N))
    for i in range(N):
        H = H + coerce(U) / 2 * (_ad(i, N) * _ad(i, N) * _a(i, N) * _a(i, N))
        if mu:
            H = H - coerce(mu) * (_ad(i, N) * _a(i, N))
    return H


def amplifier_operator(g=0.5):
    """(i g / 2)(a+^2 - a^2)."""
    a, ad = _a(0, 1), _ad(0, 1)
    return GaussianRational(0, 1) * coerce(g) / 2 * (ad * ad - a * a)


def quadrature_operator(mode=0, modes=1):
    """a + a+, proportional to the Q quadrature."""
    return _a(mode, modes) + _ad(mode, modes)


def complex_scalar_phi(m=1):
    """Classical field phi = (alpha + conj(beta)) / sqrt(2m) as a float polynomial.

    Modes: 0 carries alpha, 1 carries beta.
    """
    s = 1.0 / math.sqrt(2.0 * m)
    return (PhaseSpacePolynomial.alpha(0, 2) + PhaseSpacePolynomial.alpha_conj(1, 2)) * s


def quartic_complex_scalar_symbol(m=1, lam=1):
    """Single field mode of the complex scalar with |phi|^4 self-coupling.

    Free part is the symbol of m(a+a + b+b + 1); the interaction is the
    classical lam |phi|^4 with phi = (alpha + conj(beta)) / sqrt(2m), written
    exactly as lam (|alpha|^2 + |beta|^2 + alpha beta + c.c.)^2 / (4 m^2).
    """
    N = 2
    free = anti_wick_symbol(coerce(m) * (_ad(0, N) * _a(0, N) + _ad(1, N) * _a(1, N) + 1))
    al, alc = PhaseSpacePolynomial.alpha(0, N), PhaseSpacePolynomial.alpha_conj(0, N)
    be, bec = PhaseSpacePolynomial.alpha(1, N), PhaseSpacePolynomial.alpha_conj(1, N)
    mod2 = al * alc + be * bec + al * be + alc * bec
    return free + mod2 * mod2 * (coerce(lam) / (4 * coerce(m) ** 2))


def gauge_cubic_toy_symbol(g=1):
    """Two-mode cubic coupling g (alpha^2 beta + c.c.): holomorphic degree 3."""
    N = 2
    al, alc = PhaseSpacePolynomial.alpha(0, N), PhaseSpacePolynomial.alpha_conj(0, N)
    be, bec = PhaseSpacePolynomial.alpha(1, N), PhaseSpacePolynomial.alpha_conj(1, N)
    return (al * al * be + alc * alc * bec) * coerce(g)


# ---------------------------------------------------------------------------
# random generators for property tests and the audit battery
# ---------------------------------------------------------------------------

def _rand_rational(rng, denom=4, span=4):
    return Fraction(int(rng.integers(-span * denom, span * denom + 1)), denom)


def random_operator_polynomial(rng, modes=2, degree=4, nterms=4) -> OperatorPolynomial:
    terms = []
    for _ in range(nterms):
        d = int(rng.integers(0, degree + 1))
        f = tuple((int(rng.integers(0, modes)), bool(rng.integers(0, 2))) for _ in range(d))
        terms.append((f, GaussianRational(_rand_rational(rng), _rand_rational(rng))))
    return OperatorPolynomial(modes, terms)


def random_real_symbol(rng, modes=2, degree=4, nterms=5) -> PhaseSpacePolynomial:
    """Real symbol: random monomials plus their conjugates."""
    terms = []
    for _ in range(nterms):
        while True:
            m = rng.integers(0, degree + 1, size=modes)
            n = rng.integers(0, degree + 1, size=modes)
            if m.sum() + n.sum() <= degree:
                break
        c = GaussianRational(_rand_rational(rng), _rand_rational(rng))
        terms.append(((tuple(m), tuple(n)), c))
        terms.append(((tuple(n), tuple(m)), c.conjugate()))
    return PhaseSpacePolynomial(modes, terms)
