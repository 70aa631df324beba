"""Multi-frequency far-field synthesis, noise models and dataset CSV I/O.

Far field of a source S(y, k) = f(y) g(k) supported on D:

    u_inf(xhat, k) = g(k) * int_D exp(-i k xhat . y) f(y) dy

and with a reference point source of strength tau at z0:

    u_inf(xhat, k, tau) = u_inf(xhat, k) + tau * exp(-i k xhat . z0)
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .quadrature import shape_rule
from .scene import Direction, Point2, SourceModel, check_reference_point

QUAD_RTOL = 1e-9
MAX_REFINE = 2
GRID_TOL = 1e-12


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, estimate):
        super().__init__(msg)
        self.estimate = estimate


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class WaveNumberGrid:
    """Midpoint lattice k_j = (j - 1/2) * dk, dk = k_max / N, j = 1..N."""

    k_min: float
    k_max: float
    count: int

    def __post_init__(self):
        if not (0 < self.k_min < self.k_max):
            raise ValueError("need 0 < k_min < k_max")
        if self.count < 1:
            raise ValueError("need at least one wavenumber")
        if self.nodes[0] < self.k_min - GRID_TOL:
            raise ValueError(
                f"first node {self.nodes[0]:g} falls below k_min={self.k_min:g}; "
                "increase k_min or decrease count")

    @property
    def dk(self) -> float:
        return self.k_max / self.count

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(1, self.count + 1) - 0.5) * self.dk


@dataclass(frozen=True)
class FarFieldRecord:
    direction: Direction
    k: float
    value: complex


@dataclass(frozen=True)
class PhaselessRecord:
    direction: Direction
    k: float
    tau: complex
    z0: Point2
    magnitude: float


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"  # none | relative | absolute
    level: float = 0.0
    seed: int = 0


@dataclass(frozen=True, eq=False)
class FarFieldData:
    """Phased far field on a (direction x wavenumber) lattice."""

    grid: WaveNumberGrid
    angles: np.ndarray
    values: np.ndarray  # (n_dir, N) complex
    source: str = "truth"

    def __post_init__(self):
        if self.values.shape != (len(self.angles), self.grid.count):
            raise DatasetError("far-field values do not cover the lattice")
        if not np.all(np.isfinite(self.values)):
            raise DatasetError("far-field lattice has missing entries")

    def records(self) -> Iterator[FarFieldRecord]:
        for i, a in enumerate(self.angles):
            d = Direction(float(a))
            for j, k in enumerate(self.grid.nodes):
                yield FarFieldRecord(d, float(k), complex(self.values[i, j]))

    def select(self, angles: Sequence[float]) -> "FarFieldData":
        idx = _angle_indices(self.angles, angles)
        return replace(self, angles=self.angles[idx], values=self.values[idx])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Phaseless measurements |u_inf(xhat, k, tau)| for one reference point z0.

    ``magnitudes`` has shape (n_dir, N, n_tau); lattice order (used for noise
    seeding and CSV rows) is direction-major, then k ascending, then tau.
    """

    grid: WaveNumberGrid
    angles: np.ndarray
    z0: Point2
    taus: np.ndarray
    magnitudes: np.ndarray
    phased: Optional[FarFieldData] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        shape = (len(self.angles), self.grid.count, len(self.taus))
        if self.magnitudes.shape != shape:
            raise DatasetError(f"magnitudes have shape {self.magnitudes.shape}, expected {shape}")
        if not np.all(np.isfinite(self.magnitudes)):
            raise DatasetError("phaseless lattice has missing records")
        if len(set(np.round(self.angles, 15))) != len(self.angles):
            raise DatasetError("duplicate directions")
        if len(set(complex(t) for t in self.taus)) != len(self.taus):
            raise DatasetError("duplicate scattering strengths")

    def tau_index(self, tau: complex) -> int:
        hits = np.flatnonzero(np.abs(self.taus - tau) <= 1e-14 * max(1.0, abs(tau)))
        if len(hits) == 0:
            raise DatasetError(f"no records with tau={tau}")
        return int(hits[0])

    def records(self) -> Iterator[PhaselessRecord]:
        for i, a in enumerate(self.angles):
            d = Direction(float(a))
            for j, k in enumerate(self.grid.nodes):
                for t, tau in enumerate(self.taus):
                    yield PhaselessRecord(d, float(k), complex(tau), self.z0,
                                          float(self.magnitudes[i, j, t]))

    def select(self, angles: Sequence[float]) -> "Dataset":
        idx = _angle_indices(self.angles, angles)
        phased = self.phased.select(angles) if self.phased is not None else None
        return replace(self, angles=self.angles[idx], magnitudes=self.magnitudes[idx], phased=phased)

    @classmethod
    def from_records(cls, records: Sequence[PhaselessRecord], grid: WaveNumberGrid,
                     angles: Optional[Sequence[float]] = None) -> "Dataset":
        if not records:
            raise DatasetError("no records")
        z0 = records[0].z0
        if any(tuple(r.z0) != tuple(z0) for r in records):
            raise DatasetError("records mix several reference points")
        if angles is None:
            angles = sorted({r.direction.angle for r in records})
        angles = np.asarray(angles, float)
        taus = list(dict.fromkeys(r.tau for r in records))
        ks = grid.nodes
        mags = np.full((len(angles), len(ks), len(taus)), np.nan)
        for r in records:
            i = _lookup(angles, r.direction.angle, "direction")
            j = _lookup(ks, r.k, "wavenumber")
            t = taus.index(r.tau)
            if not np.isnan(mags[i, j, t]):
                raise DatasetError(f"duplicate record at angle={r.direction.angle}, k={r.k}, tau={r.tau}")
            mags[i, j, t] = r.magnitude
        if np.isnan(mags).any():
            raise DatasetError(f"{int(np.isnan(mags).sum())} lattice records missing")
        return cls(grid, angles, z0, np.asarray(taus, complex), mags)


def _lookup(values: np.ndarray, v: float, what: str) -> int:
    hits = np.flatnonzero(np.abs(values - v) <= 1e-12 * max(1.0, abs(v)))
    if len(hits) != 1:
        raise DatasetError(f"{what} {v!r} is not on the lattice")
    return int(hits[0])


def _angle_indices(all_angles: np.ndarray, angles: Sequence[float]) -> np.ndarray:
    return np.array([_lookup(all_angles, float(a), "direction") for a in angles], dtype=int)


# --------------------------------------------------------------------------
# Far-field synthesis
# --------------------------------------------------------------------------


def _component_far_field(shape, f, ux: np.ndarray, uy: np.ndarray, k: float, level: int):
    rule = shape_rule(shape, k, level)
    fw = np.broadcast_to(f(x=rule.x, y=rule.y), rule.w.shape) * rule.w
    # phases from local offsets; the anchor contributes a unit-modulus factor
    local = np.exp(-1j * k * (np.outer(ux, rule.dx) + np.outer(uy, rule.dy))) @ fw
    anchor = np.exp(-1j * k * (ux * rule.ox + uy * rule.oy))
    return anchor * local, float(np.sum(np.abs(fw)))


def far_field_batch(model: SourceModel, angles: Sequence[float], ks: Sequence[float]) -> np.ndarray:
    """Far field on the (angles x ks) lattice, shape (n_dir, n_k).

    Each component integral is recomputed on a 1.5x denser rule; the finer
    value is kept once the two agree to ``QUAD_RTOL`` relative to the L1
    norm of the integrand.
    """
    angles = np.atleast_1d(np.asarray(angles, float))
    ks = np.atleast_1d(np.asarray(ks, float))
    if np.any(ks <= 0):
        raise ValueError("wavenumbers must be positive")
    ux, uy = np.cos(angles), np.sin(angles)
    out = np.zeros((len(angles), len(ks)), dtype=complex)
    for j, k in enumerate(ks):
        gk = complex(model.g(k=k))
        total = np.zeros(len(angles), dtype=complex)
        for comp in model.components:
            if comp.f.is_zero:
                continue
            prev, _ = _component_far_field(comp.shape, comp.f, ux, uy, k, 0)
            for level in range(1, MAX_REFINE + 1):
                cur, scale = _component_far_field(comp.shape, comp.f, ux, uy, k, level)
                err = float(np.max(np.abs(cur - prev)))
                if err <= QUAD_RTOL * scale:
                    break
                prev = cur
            else:
                raise QuadratureError(
                    f"quadrature did not converge at k={k}: error {err:.3e} vs scale {scale:.3e}",
                    cur * gk)
            total += cur
        out[:, j] = gk * total
    return out


def far_field(model: SourceModel, d: Direction, k: float) -> complex:
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    return complex(far_field_batch(model, [d.angle], [k])[0, 0])


def point_source_far_field(z0, tau: complex, angles, ks) -> np.ndarray:
    angles = np.atleast_1d(np.asarray(angles, float))
    ks = np.atleast_1d(np.asarray(ks, float))
    proj = np.cos(angles) * z0[0] + np.sin(angles) * z0[1]
    return tau * np.exp(-1j * np.outer(proj, ks))


def far_field_with_ref(model: SourceModel, ref, d: Direction, k: float) -> complex:
    check_reference_point(model, ref.z0)
    return far_field(model, d, k) + complex(point_source_far_field(ref.z0, ref.tau, [d.angle], [k])[0, 0])


def default_directions(count: int = 20) -> np.ndarray:
    """Angles -pi/2 + j*pi/count for j = 1..count."""
    return -np.pi / 2 + np.arange(1, count + 1) * np.pi / count


def synthesize(model: SourceModel, z0, taus: Sequence[complex], angles: Sequence[float],
               grid: WaveNumberGrid) -> Dataset:
    """Noise-free phaseless data for every (direction, k_j, tau) plus the phased truth."""
    taus = np.asarray(list(taus), complex)
    angles = np.asarray(list(angles), float)
    if len(taus) == 0:
        raise ValueError("need at least one scattering strength")
    if len(angles) == 0:
        raise ValueError("need at least one direction")
    z0 = Point2(float(z0[0]), float(z0[1]))
    check_reference_point(model, z0)
    u = far_field_batch(model, angles, grid.nodes)
    ref = point_source_far_field(z0, 1.0, angles, grid.nodes)
    mags = np.abs(u[..., None] + taus[None, None, :] * ref[..., None])
    return Dataset(grid, angles, z0, taus, mags, FarFieldData(grid, angles, u, "truth"))


# --------------------------------------------------------------------------
# Noise
# --------------------------------------------------------------------------


def uniform_draws(seed: int, count: int, start: int = 0) -> np.ndarray:
    """One U(-1, 1) draw per record index from a counter-based generator.

    Record ``i`` uses Philox with key ``seed`` and counter ``start + i``, so a
    draw depends only on (seed, index) and not on evaluation order.  The
    value -1 (probability 2^-53) is rejected to keep the interval open.
    """
    out = np.empty(count)
    for i in range(count):
        gen = np.random.Generator(np.random.Philox(key=seed, counter=start + i))
        v = -1.0
        while v == -1.0:
            v = 2.0 * gen.random() - 1.0
        out[i] = v
    return out


def perturb_relative(m: np.ndarray, delta: float, draws: np.ndarray) -> np.ndarray:
    return m * (1.0 + delta * draws)


def perturb_absolute(m: np.ndarray, delta: float, draws: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, m + delta * draws)


def _apply_noise(ds: Dataset, kind: str, delta: float, seed: int, start: int = 0) -> Dataset:
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    if delta == 0:
        return replace(ds, noise=NoiseSpec(kind, 0.0, seed))
    draws = uniform_draws(seed, ds.magnitudes.size, start).reshape(ds.magnitudes.shape)
    perturb = perturb_relative if kind == "relative" else perturb_absolute
    return replace(ds, magnitudes=perturb(ds.magnitudes, delta, draws), noise=NoiseSpec(kind, delta, seed))


def apply_relative_noise(ds: Dataset, delta: float, seed: int, start: int = 0) -> Dataset:
    """m -> m * (1 + delta * e), e ~ U(-1, 1) per record."""
    return _apply_noise(ds, "relative", delta, seed, start)


def apply_absolute_noise(ds: Dataset, delta: float, seed: int, start: int = 0) -> Dataset:
    """m -> max(0, m + delta * e), e ~ U(-1, 1) per record."""
    return _apply_noise(ds, "absolute", delta, seed, start)


def apply_noise(ds: Dataset, spec: NoiseSpec, start: int = 0) -> Dataset:
    """Apply ``spec``; ``start`` offsets the record counter (one run, several datasets)."""
    if spec.kind == "none":
        return ds
    if spec.kind not in ("relative", "absolute"):
        raise ValueError(f"unknown noise kind {spec.kind!r}")
    return _apply_noise(ds, spec.kind, spec.level, spec.seed, start)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

PHASELESS_HEADER = ["angle_rad", "k", "tau_re", "tau_im", "z0_x", "z0_y", "magnitude"]
PHASED_HEADER = ["angle_rad", "k", "re", "im"]


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def phaseless_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PHASELESS_HEADER)
    for r in ds.records():
        w.writerow([fmt(r.direction.angle), fmt(r.k), fmt(r.tau.real), fmt(r.tau.imag),
                    fmt(r.z0.x), fmt(r.z0.y), fmt(r.magnitude)])
    return buf.getvalue()


def phased_csv(data: FarFieldData) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    retrieved = data.source != "truth"
    w.writerow(PHASED_HEADER + (["source"] if retrieved else []))
    for r in data.records():
        row = [fmt(r.direction.angle), fmt(r.k), fmt(r.value.real), fmt(r.value.imag)]
        w.writerow(row + ([data.source] if retrieved else []))
    return buf.getvalue()


def _grid_from_ks(ks: np.ndarray) -> WaveNumberGrid:
    ks = np.unique(ks)
    n = len(ks)
    dk = 2.0 * ks[0]
    if not np.allclose(ks, (np.arange(1, n + 1) - 0.5) * dk, rtol=1e-12, atol=0):
        raise DatasetError("wavenumbers do not form a midpoint lattice")
    return WaveNumberGrid(float(ks[0]), n * dk, n)


def read_phaseless_csv(path, grid: Optional[WaveNumberGrid] = None) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or list(rows[0].keys()) != PHASELESS_HEADER:
        raise DatasetError(f"{path}: expected header {','.join(PHASELESS_HEADER)}")
    recs = [PhaselessRecord(Direction(float(r["angle_rad"])), float(r["k"]),
                            complex(float(r["tau_re"]), float(r["tau_im"])),
                            Point2(float(r["z0_x"]), float(r["z0_y"])), float(r["magnitude"]))
            for r in rows]
    grid = grid or _grid_from_ks(np.array([r.k for r in recs]))
    angles = list(dict.fromkeys(r.direction.angle for r in recs))
    return Dataset.from_records(recs, grid, angles)


def read_phased_csv(path, grid: Optional[WaveNumberGrid] = None) -> FarFieldData:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or list(rows[0].keys())[:4] != PHASED_HEADER:
        raise DatasetError(f"{path}: expected header {','.join(PHASED_HEADER)}")
    ks = np.array([float(r["k"]) for r in rows])
    grid = grid or _grid_from_ks(ks)
    angles = np.array(list(dict.fromkeys(float(r["angle_rad"]) for r in rows)))
    vals = np.full((len(angles), grid.count), np.nan + 0j)
    for r in rows:
        i = _lookup(angles, float(r["angle_rad"]), "direction")
        j = _lookup(grid.nodes, float(r["k"]), "wavenumber")
        if not np.isnan(vals[i, j]):
            raise DatasetError("duplicate phased record")
        vals[i, j] = complex(float(r["re"]), float(r["im"]))
    if np.isnan(vals).any():
        raise DatasetError("phased lattice has missing records")
    return FarFieldData(grid, angles, vals, rows[0].get("source", "truth") or "truth")


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
