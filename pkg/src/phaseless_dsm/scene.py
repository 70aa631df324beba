"""Source supports, source profiles and reference point sources.

Shapes are immutable and vectorised: ``contains`` takes coordinate arrays and
returns a boolean mask, so the same code serves single-point queries, grid
masks and quadrature checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from .expression import Expression

BOUNDARY_TOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Point2(self.x + other[0], self.y + other[1])


@dataclass(frozen=True)
class Direction:
    """Observation direction on the unit circle, stored by its angle."""

    angle: float

    @property
    def unit(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    @property
    def perp(self) -> np.ndarray:
        return np.array([-math.sin(self.angle), math.cos(self.angle)])

    @classmethod
    def from_vector(cls, vx: float, vy: float) -> "Direction":
        if vx == 0 and vy == 0:
            raise ValueError("direction vector must be non-zero")
        return cls(math.atan2(vy, vx))


# --------------------------------------------------------------------------
# Shapes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Rectangle:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x, y, closed: bool = True):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if closed:
            return (x >= self.x_lo) & (x <= self.x_hi) & (y >= self.y_lo) & (y <= self.y_hi)
        return (x > self.x_lo) & (x < self.x_hi) & (y > self.y_lo) & (y < self.y_hi)

    def vertices(self) -> np.ndarray:
        return np.array([[self.x_lo, self.y_lo], [self.x_hi, self.y_lo],
                         [self.x_hi, self.y_hi], [self.x_lo, self.y_hi]])

    def strip_hull(self, ux: float, uy: float) -> tuple[float, float]:
        p = self.vertices() @ np.array([ux, uy])
        return float(p.min()), float(p.max())

    def bbox(self) -> tuple[float, float, float, float]:
        return self.x_lo, self.x_hi, self.y_lo, self.y_hi

    def translated(self, hx: float, hy: float) -> "Rectangle":
        return Rectangle(self.x_lo + hx, self.x_hi + hx, self.y_lo + hy, self.y_hi + hy)

    def boundary_samples(self, n: int = 64) -> np.ndarray:
        return _polyline_samples(self.vertices(), n)


@dataclass(frozen=True)
class Disc:
    center: Point2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", Point2(float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")

    def contains(self, x, y, closed: bool = True):
        dx = np.asarray(x, float) - self.center.x
        dy = np.asarray(y, float) - self.center.y
        d2 = dx * dx + dy * dy
        r2 = self.radius * self.radius
        return d2 <= r2 if closed else d2 < r2

    def strip_hull(self, ux: float, uy: float) -> tuple[float, float]:
        c = self.center.x * ux + self.center.y * uy
        return c - self.radius, c + self.radius

    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def translated(self, hx: float, hy: float) -> "Disc":
        return Disc(Point2(self.center.x + hx, self.center.y + hy), self.radius)

    def boundary_samples(self, n: int = 64) -> np.ndarray:
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return np.column_stack([self.center.x + self.radius * np.cos(t),
                                self.center.y + self.radius * np.sin(t)])


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counter-clockwise vertices (closing edge implied)."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        verts = tuple(Point2(float(v[0]), float(v[1])) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area = _signed_area(self.array)
        if area <= 0:
            raise ValueError("polygon vertices must be counter-clockwise with positive area")
        if _self_intersects(self.array):
            raise ValueError("polygon is self-intersecting")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def contains(self, x, y, closed: bool = True):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        v = self.array
        inside = np.zeros(x.shape, dtype=bool)
        on_edge = np.zeros(x.shape, dtype=bool)
        scale = BOUNDARY_TOL * max(1.0, float(np.abs(v).max()))
        for (x1, y1), (x2, y2) in zip(v, np.roll(v, -1, axis=0)):
            # even-odd crossing rule
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xc)
            ex, ey = x2 - x1, y2 - y1
            L2 = ex * ex + ey * ey
            t = np.clip(((x - x1) * ex + (y - y1) * ey) / L2, 0.0, 1.0)
            dist = np.hypot(x - (x1 + t * ex), y - (y1 + t * ey))
            on_edge |= dist <= scale
        return (inside | on_edge) if closed else (inside & ~on_edge)

    def strip_hull(self, ux: float, uy: float) -> tuple[float, float]:
        p = self.array @ np.array([ux, uy])
        return float(p.min()), float(p.max())

    def bbox(self) -> tuple[float, float, float, float]:
        v = self.array
        return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())

    def translated(self, hx: float, hy: float) -> "Polygon":
        return Polygon(tuple(Point2(vx + hx, vy + hy) for vx, vy in self.vertices))

    def boundary_samples(self, n: int = 64) -> np.ndarray:
        return _polyline_samples(self.array, n)


@dataclass(frozen=True)
class Difference:
    """Region ``outer`` with ``hole`` removed (membership: outer and not interior(hole))."""

    outer: "Shape"
    hole: "Shape"

    def contains(self, x, y, closed: bool = True):
        return self.outer.contains(x, y, closed) & ~self.hole.contains(x, y, closed=not closed)

    def strip_hull(self, ux: float, uy: float) -> tuple[float, float]:
        return self.outer.strip_hull(ux, uy)

    def bbox(self) -> tuple[float, float, float, float]:
        return self.outer.bbox()

    def translated(self, hx: float, hy: float) -> "Difference":
        return Difference(self.outer.translated(hx, hy), self.hole.translated(hx, hy))

    def boundary_samples(self, n: int = 64) -> np.ndarray:
        pts = np.vstack([self.outer.boundary_samples(n), self.hole.boundary_samples(n)])
        return pts[self.contains(pts[:, 0], pts[:, 1])]


Shape = Union[Rectangle, Disc, Polygon, Difference]


def contains(shape: Shape, p) -> bool:
    return bool(shape.contains(p[0], p[1]))


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4)


def _self_intersects(v: np.ndarray) -> bool:
    n = len(v)
    edges = [(v[i], v[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False


def _polyline_samples(v: np.ndarray, n: int) -> np.ndarray:
    out = []
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        t = np.linspace(0.0, 1.0, max(2, n // len(v)), endpoint=False)[:, None]
        out.append(a + t * (b - a))
    return np.vstack(out)


# --------------------------------------------------------------------------
# Source model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    shape: Shape
    f: Expression

    def __post_init__(self):
        if not self.f.variables <= {"x", "y"}:
            raise ValueError(f"spatial profile may only use x, y: {self.f.text!r}")


@dataclass(frozen=True)
class SourceModel:
    """S(y, k) = f_m(y) g(k) on the m-th component of a union of disjoint shapes."""

    components: tuple[Component, ...]
    g: Expression = field(default_factory=lambda: Expression("1"))

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Component) else Component(*c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("source model needs at least one component")
        if not self.g.variables <= {"k"}:
            raise ValueError(f"frequency profile may only use k: {self.g.text!r}")
        boxes = [c.shape.bbox() for c in comps]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                overlap = a[0] <= b[1] and b[0] <= a[1] and a[2] <= b[3] and b[2] <= a[3]
                if overlap:
                    raise ValueError(f"components {i} and {j} are not well separated")

    def contains(self, x, y):
        mask = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)
        for c in self.components:
            mask |= c.shape.contains(x, y)
        return mask

    def translated(self, hx: float, hy: float) -> "SourceModel":
        return SourceModel(
            tuple(Component(c.shape.translated(hx, hy), c.f.shifted(hx, hy)) for c in self.components),
            self.g,
        )

    def scaled(self, factor: complex) -> "SourceModel":
        """Multiply every spatial profile by ``factor`` (e.g. a unit phase)."""
        return SourceModel(tuple(Component(c.shape, c.f.scaled(factor)) for c in self.components), self.g)


@dataclass(frozen=True)
class ReferenceSource:
    z0: Point2
    tau: complex

    def __post_init__(self):
        object.__setattr__(self, "z0", Point2(float(self.z0[0]), float(self.z0[1])))
        object.__setattr__(self, "tau", complex(self.tau))


def check_reference_point(model: SourceModel, z0) -> None:
    if bool(model.contains(z0[0], z0[1])):
        raise ValueError(f"reference point {tuple(z0)} lies inside the source support")


def eval_source(model: SourceModel, p, k: float):
    """Evaluate S(p, k); p may be a single point or an (..., 2) array."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    out = np.zeros(x.shape, dtype=complex)
    taken = np.zeros(x.shape, dtype=bool)
    gk = complex(model.g(k=k))
    for c in model.components:
        m = c.shape.contains(x, y) & ~taken
        if np.any(m):
            out[m] = np.broadcast_to(c.f(x=x[m], y=y[m]), x[m].shape) * gk
        taken |= m
    return complex(out) if out.ndim == 0 else out


def strip_hull(model: SourceModel, d: Direction) -> tuple[float, float]:
    ux, uy = d.unit
    spans = [c.shape.strip_hull(ux, uy) for c in model.components]
    return min(s[0] for s in spans), max(s[1] for s in spans)


def distance_to_support(model: SourceModel, points: np.ndarray, samples: int = 2048) -> np.ndarray:
    """Approximate distance from each point to the closed support (0 inside)."""
    points = np.asarray(points, float)
    bnd = np.vstack([c.shape.boundary_samples(samples) for c in model.components])
    d = np.full(len(points), np.inf)
    for start in range(0, len(bnd), 256):
        chunk = bnd[start:start + 256]
        dd = np.hypot(points[:, None, 0] - chunk[None, :, 0], points[:, None, 1] - chunk[None, :, 1])
        d = np.minimum(d, dd.min(axis=1))
    d[model.contains(points[:, 0], points[:, 1])] = 0.0
    return d


def l_shape(fat: bool = False) -> Difference:
    """The L-shaped support; ``fat=True`` gives the (0,2)^2 minus (1,2)^2 reading."""
    cut = 1.0 if fat else 1.0 / 16.0
    return Difference(Rectangle(0.0, 2.0, 0.0, 2.0), Rectangle(cut, 2.0, cut, 2.0))


def as_points(points: Sequence) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))
