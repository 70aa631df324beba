"""Direct sampling indicators on rectangular grids.

    G(z, xhat)  = dk * sum_j u_inf(xhat, k_j) exp(i k_j xhat . z)
    F(xhat, k)  = |u_inf(xhat, k, tau)|^2 - |u_inf(xhat, k, 0)|^2 - |tau|^2
    I1(z)       = sum_xhat | dk * sum_j F(xhat, k_j) cos(k_j xhat . (z - z0)) |
    I2(z)       = sum_xhat | G(z, xhat) |

All k-sums run over the measurement nodes (midpoint rule) with numpy's
pairwise summation along a fixed axis, so a node's value does not depend on
how the grid is chunked or threaded.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .forward import Dataset, DatasetError, FarFieldData, fmt
from .scene import Direction

CHUNK = 4096


@dataclass(frozen=True)
class SamplingGrid:
    """Corner-inclusive uniform lattice of nx * ny sampling points."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError("sampling grid bounds must be increasing")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("sampling grid needs at least 2 nodes per axis")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_lo, self.y_hi, self.ny)

    def points(self) -> np.ndarray:
        """(ny * nx, 2) array, row-major with y as the slow index."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])


@dataclass(frozen=True, eq=False)
class IndicatorField:
    grid: SamplingGrid
    values: np.ndarray  # (ny, nx)
    name: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("field shape does not match grid")

    def normalized(self) -> np.ndarray:
        lo, hi = float(self.values.min()), float(self.values.max())
        if hi == lo:
            return np.zeros_like(self.values)
        return (self.values - lo) / (hi - lo)

    def argmax_point(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        v = self.values if mask is None else np.where(mask, self.values, -np.inf)
        iy, ix = np.unravel_index(int(np.argmax(v)), v.shape)
        return np.array([self.grid.xs[ix], self.grid.ys[iy]])

    def to_csv(self) -> str:
        lines = ["x,y,value"]
        xs, ys = self.grid.xs, self.grid.ys
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                lines.append(f"{fmt(x)},{fmt(y)},{fmt(self.values[iy, ix])}")
        return "\n".join(lines) + "\n"

    def to_pgm(self) -> str:
        """Plain PGM (P2), min-max scaled to 0..255, first row is y_hi."""
        img = np.rint(self.normalized() * 255).astype(int)[::-1]
        rows = [" ".join(map(str, row)) for row in img]
        return f"P2\n{self.grid.nx} {self.grid.ny}\n255\n" + "\n".join(rows) + "\n"

    def write(self, stem) -> list[Path]:
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        csv_path, pgm_path = stem.with_suffix(".csv"), stem.with_suffix(".pgm")
        csv_path.write_text(self.to_csv())
        pgm_path.write_text(self.to_pgm())
        return [csv_path, pgm_path]


def _projections(points: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """xhat . z for every (point, direction): shape (n_points, n_dir)."""
    return points[:, 0, None] * np.cos(angles)[None, :] + points[:, 1, None] * np.sin(angles)[None, :]


def _as_points(z) -> tuple[np.ndarray, tuple]:
    z = np.asarray(z, float)
    shape = z.shape[:-1]
    return z.reshape(-1, 2), shape


def _slice_for(data: FarFieldData, d: Direction) -> np.ndarray:
    hits = np.flatnonzero(np.abs(data.angles - d.angle) <= 1e-12 * max(1.0, abs(d.angle)))
    if len(hits) != 1:
        raise DatasetError(f"no far-field slice for direction angle {d.angle}")
    return data.values[hits[0]]


def g_functional(z, d: Direction, slice_values: np.ndarray, ks: np.ndarray, dk: float):
    """Midpoint approximation of int u_inf(xhat, k) exp(i k xhat . z) dk."""
    slice_values = np.asarray(slice_values, complex)
    ks = np.asarray(ks, float)
    if slice_values.shape != ks.shape or not np.all(np.isfinite(slice_values)):
        raise DatasetError("far-field slice does not cover the wavenumber nodes")
    pts, shape = _as_points(z)
    proj = pts @ d.unit
    vals = dk * np.sum(slice_values[None, :] * np.exp(1j * proj[:, None] * ks[None, :]), axis=1)
    return vals.reshape(shape) if shape else complex(vals[0])


def f_functional(m_with, m_without, tau: complex):
    m_with, m_without = np.asarray(m_with, float), np.asarray(m_without, float)
    return m_with ** 2 - m_without ** 2 - abs(tau) ** 2


def _resolve_tau(ds: Dataset, tau: Optional[complex]) -> complex:
    nonzero = [complex(t) for t in ds.taus if t != 0]
    if tau is None:
        if len(nonzero) != 1:
            raise DatasetError("dataset needs exactly one non-zero strength, or pass tau")
        tau = nonzero[0]
    return complex(tau)


def indicator_i1(z, ds: Dataset, tau: Optional[complex] = None,
                 angles: Optional[Sequence[float]] = None):
    """Phaseless indicator built from the tau=0 and tau=tau1 records."""
    if angles is not None:
        ds = ds.select(angles)
    tau = _resolve_tau(ds, tau)
    F = f_functional(ds.magnitudes[..., ds.tau_index(tau)], ds.magnitudes[..., ds.tau_index(0)], tau)
    pts, shape = _as_points(z)
    vals = _i1_values(pts, ds.angles, F, ds.grid.nodes, ds.grid.dk, np.asarray(ds.z0, float))
    return vals.reshape(shape) if shape else float(vals[0])


def _i1_values(pts, angles, F, ks, dk, z0):
    out = np.zeros(len(pts))
    for i, a in enumerate(angles):
        u = np.array([np.cos(a), np.sin(a)])
        proj = (pts - z0) @ u
        s = dk * np.sum(F[i][None, :] * np.cos(proj[:, None] * ks[None, :]), axis=1)
        out += np.abs(s)
    return out


def indicator_i2(z, phased: FarFieldData, angles: Optional[Sequence[float]] = None):
    """Phased indicator sum_xhat |G(z, xhat)|."""
    if angles is not None:
        phased = phased.select(angles)
    pts, shape = _as_points(z)
    vals = _i2_values(pts, phased.angles, phased.values, phased.grid.nodes, phased.grid.dk)
    return vals.reshape(shape) if shape else float(vals[0])


def _i2_values(pts, angles, values, ks, dk):
    out = np.zeros(len(pts))
    for i, a in enumerate(angles):
        proj = pts @ np.array([np.cos(a), np.sin(a)])
        g = dk * np.sum(values[i][None, :] * np.exp(1j * proj[:, None] * ks[None, :]), axis=1)
        out += np.abs(g)
    return out


def bind_i1(ds: Dataset, tau: Optional[complex] = None, angles=None) -> Callable:
    return partial(indicator_i1, ds=ds, tau=tau, angles=angles)


def bind_i2(phased: FarFieldData, angles=None) -> Callable:
    return partial(indicator_i2, phased=phased, angles=angles)


def evaluate_on_grid(indicator: Callable, grid: SamplingGrid, name: str = "indicator",
                     meta: Optional[dict] = None, threads: int = 1) -> IndicatorField:
    """Evaluate an indicator (callable on an (n, 2) point array) at every node."""
    pts = grid.points()
    chunks = [pts[i:i + CHUNK] for i in range(0, len(pts), CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(indicator, chunks))
    else:
        parts = [indicator(c) for c in chunks]
    values = np.concatenate(parts).reshape(grid.ny, grid.nx)
    return IndicatorField(grid, values, name, dict(meta or {}))


def combine_min(fields: Sequence[IndicatorField], name: str = "i1-combined") -> IndicatorField:
    """Pointwise minimum of min-max normalised fields on a common grid."""
    if not fields:
        raise ValueError("nothing to combine")
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise ValueError("fields live on different grids")
    vals = np.minimum.reduce([f.normalized() for f in fields])
    return IndicatorField(grid, vals, name, {"combined": [f.meta for f in fields]})
