"""Phase-space grids, sampled densities and their on-disk formats."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NEG_FLOOR = 1e-9
SUPPORT_THRESHOLD = 1e-10
MEASURE_NOTE = "prod_k (kappa/2) dQ_k dP_k  (= d^2N alpha)"


class SupportOverflowWarning(UserWarning):
    """Density at the grid boundary exceeds the support threshold."""


def _fft_friendly(n):
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        return False
    for p in (2, 3, 5):
        while n % p == 0:
            n //= p
    return n == 1


@dataclass(frozen=True)
class PhaseGrid:
    """Cell-centred uniform grid, axes ordered (Q_1..Q_N, P_1..P_N).

    Points sit at -R + (j + 1/2) h, so the grid is symmetric about every
    axis origin and P -> -P is the index flip j -> n - 1 - j.
    """

    N: int
    n_pts: int
    R: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("need at least one mode")
        if not _fft_friendly(self.n_pts):
            raise ValueError(f"n_pts must be even with no prime factor above 5, got {self.n_pts}")
        if not self.R > 0:
            raise ValueError("extent R must be positive")

    @classmethod
    def from_alpha_extent(cls, N, n_pts, R_alpha, kappa=1.0):
        """Grid whose half-width is R_alpha in Re(alpha) and Im(alpha)."""
        return cls(N, n_pts, R_alpha * math.sqrt(2.0 / kappa))

    @property
    def h(self):
        return 2.0 * self.R / self.n_pts

    @property
    def ndim(self):
        return 2 * self.N

    @property
    def shape(self):
        return (self.n_pts,) * self.ndim

    def axis(self):
        # written about the centre so that x[j] == -x[n-1-j] exactly
        return (np.arange(self.n_pts) + 0.5 - self.n_pts / 2) * self.h

    def coords(self):
        """Open-mesh coordinate arrays, one per axis, broadcastable."""
        x = self.axis()
        out = []
        for a in range(self.ndim):
            shape = [1] * self.ndim
            shape[a] = self.n_pts
            out.append(x.reshape(shape))
        return out

    def alphas(self, kappa=1.0):
        z = self.coords()
        s = math.sqrt(kappa / 2.0)
        return [s * (z[i] + 1j * z[self.N + i]) for i in range(self.N)]

    def cell_measure(self, kappa=1.0):
        return (kappa / 2.0) ** self.N * self.h ** self.ndim

    def wavenumbers(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n_pts, d=self.h)

    def metadata(self):
        return {"modes": self.N, "n_pts": self.n_pts, "extent": self.R}


@dataclass
class DensityGrid:
    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0
    kappa: float = 1.0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.shape}")

    def mass(self):
        return float(self.values.sum() * self.grid.cell_measure(self.kappa))

    def integrate(self, f):
        return complex(np.sum(f * self.values) * self.grid.cell_measure(self.kappa))

    def min_value(self):
        return float(self.values.min())

    def negativity(self):
        """Most negative value below the floor, 0 if none."""
        lo = self.min_value()
        return -lo if lo < -NEG_FLOOR else 0.0

    def boundary_ratio(self):
        v = np.abs(self.values)
        top = v.max()
        if top == 0:
            return 0.0
        edge = 0.0
        for a in range(v.ndim):
            edge = max(edge, np.take(v, 0, axis=a).max(), np.take(v, -1, axis=a).max())
        return float(edge / top)

    def check_support(self, threshold=SUPPORT_THRESHOLD, stacklevel=2):
        r = self.boundary_ratio()
        if r > threshold:
            warnings.warn(f"boundary density {r:.2e} of max exceeds {threshold:.0e}; "
                          f"grid extent may not cover the support",
                          SupportOverflowWarning, stacklevel=stacklevel + 1)
        return r

    def copy(self):
        return DensityGrid(self.grid, self.values.copy(), self.time, self.kappa, dict(self.notes))


# ---------------------------------------------------------------------------
# snapshots: text header, blank "end" line, raw little-endian float64 payload
# ---------------------------------------------------------------------------

SNAPSHOT_MAGIC = "tsfp-snapshot 1"


def write_snapshot(path, rho: DensityGrid):
    path = Path(path)
    g = rho.grid
    header = [
        SNAPSHOT_MAGIC,
        f"modes {g.N}",
        f"n_pts {g.n_pts}",
        f"extent {g.R!r}",
        f"kappa {rho.kappa!r}",
        f"time {rho.time!r}",
        f"axes {' '.join([f'Q{i+1}' for i in range(g.N)] + [f'P{i+1}' for i in range(g.N)])}",
        "points cell-centred: -R + (j + 1/2) h",
        f"measure {MEASURE_NOTE}",
        "dtype float64 little-endian C-order",
        "end",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode())
        fh.write(np.ascontiguousarray(rho.values, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> DensityGrid:
    with open(path, "rb") as fh:
        first = fh.readline().decode().strip()
        if first != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        meta = {}
        while True:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: header has no 'end' line")
            line = line.decode().strip()
            if line == "end":
                break
            key, _, val = line.partition(" ")
            meta[key] = val
        payload = fh.read()
    grid = PhaseGrid(int(meta["modes"]), int(meta["n_pts"]), float(meta["extent"]))
    vals = np.frombuffer(payload, dtype="<f8")
    if vals.size != int(np.prod(grid.shape)):
        raise ValueError(f"{path}: payload has {vals.size} values, expected {np.prod(grid.shape)}")
    return DensityGrid(grid, vals.reshape(grid.shape).astype(float), float(meta["time"]),
                       float(meta["kappa"]))


def write_csv(path, columns, rows):
    """``columns`` is a list of (name, unit); rows are sequences of numbers."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{name} [{unit}]" for name, unit in columns])
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    Path(path).write_text(buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]
