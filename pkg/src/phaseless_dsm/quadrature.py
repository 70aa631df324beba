"""Spatial quadrature rules for the supported shapes.

Every rule is a ``Rule``: an anchor point plus flat arrays of node offsets and
weights.  Keeping the offsets local lets the far field factor out the anchor's
phase, so oscillatory phases are formed from small numbers.  A Difference
carries the hole's nodes with negated weights so all shapes integrate the
same way.
Node counts scale with the wavenumber: ``max(8, ceil(3 * k * length))`` per
axis, multiplied by ``1.5 ** level`` when refining.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .scene import Difference, Disc, Polygon, Rectangle, Shape

class Rule(NamedTuple):
    ox: float
    oy: float
    dx: np.ndarray
    dy: np.ndarray
    w: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.ox + self.dx

    @property
    def y(self) -> np.ndarray:
        return self.oy + self.dy

    def rebased(self, ox: float, oy: float) -> "Rule":
        return Rule(ox, oy, self.dx + (self.ox - ox), self.dy + (self.oy - oy), self.w)


MIN_NODES = 8
NODES_PER_UNIT_K = 3.0
REFINE_FACTOR = 1.5


def node_count(k: float, length: float, level: int = 0) -> int:
    n = max(MIN_NODES, math.ceil(NODES_PER_UNIT_K * k * length))
    return math.ceil(n * REFINE_FACTOR ** level)


@lru_cache(maxsize=256)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def rectangle_rule(r: Rectangle, k: float, level: int = 0):
    lx, ly = r.x_hi - r.x_lo, r.y_hi - r.y_lo
    tx, wx = gauss_legendre(node_count(k, lx, level))
    ty, wy = gauss_legendre(node_count(k, ly, level))
    X, Y = np.meshgrid(lx * tx, ly * ty, indexing="ij")
    W = np.outer(wx * lx, wy * ly)
    return Rule(r.x_lo, r.y_lo, X.ravel(), Y.ravel(), W.ravel())


def disc_rule(d: Disc, k: float, level: int = 0):
    """Gauss-Legendre in radius times the periodic trapezoid rule in angle."""
    R = d.radius
    tr, wr = gauss_legendre(node_count(k, R, level))
    n_theta = max(2 * MIN_NODES, node_count(k, 2 * np.pi * R, level))
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    r = R * tr
    Rr, T = np.meshgrid(r, theta, indexing="ij")
    W = np.outer(wr * R * r, np.full(n_theta, 2 * np.pi / n_theta))
    return Rule(d.center.x, d.center.y, (Rr * np.cos(T)).ravel(), (Rr * np.sin(T)).ravel(), W.ravel())


def triangle_rule(a, b, c, k: float, level: int = 0):
    """Collapsed (Duffy) tensor Gauss-Legendre rule on a triangle; nodes as (x, y, w)."""
    a, b, c = (np.asarray(p, float) for p in (a, b, c))
    diam = max(np.hypot(*(b - a)), np.hypot(*(c - b)), np.hypot(*(a - c)))
    n = node_count(k, diam, level)
    ts, ws = gauss_legendre(n)
    S, T = np.meshgrid(ts, ts, indexing="ij")
    P = a + S[..., None] * ((b - a) + T[..., None] * (c - b))
    jac = abs((b - a)[0] * (c - b)[1] - (b - a)[1] * (c - b)[0])
    W = np.outer(ws, ws) * S * jac
    return P[..., 0].ravel(), P[..., 1].ravel(), W.ravel()


def triangulate(poly: Polygon) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Fan from the vertex centroid when that is valid, ear clipping otherwise."""
    v = poly.array
    if len(v) == 3:
        return [(v[0], v[1], v[2])]
    c = v.mean(axis=0)
    fan = [(c, v[i], v[(i + 1) % len(v)]) for i in range(len(v))]
    if all(_cross(p, q, r) > 0 for p, q, r in fan):
        return fan
    return _ear_clip(v)


def _cross(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _ear_clip(v: np.ndarray):
    idx = list(range(len(v)))
    tris = []
    while len(idx) > 3:
        for i in range(len(idx)):
            p, q, r = idx[i - 1], idx[i], idx[(i + 1) % len(idx)]
            if _cross(v[p], v[q], v[r]) <= 0:
                continue
            others = [j for j in idx if j not in (p, q, r)]
            if any(_in_triangle(v[j], v[p], v[q], v[r]) for j in others):
                continue
            tris.append((v[p], v[q], v[r]))
            idx.pop(i)
            break
        else:
            raise ValueError("ear clipping failed; polygon is not simple")
    tris.append(tuple(v[j] for j in idx))
    return tris


def _in_triangle(p, a, b, c) -> bool:
    return _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0


def polygon_rule(poly: Polygon, k: float, level: int = 0):
    o = poly.array[0]
    parts = [triangle_rule(a - o, b - o, c - o, k, level) for a, b, c in triangulate(poly)]
    dx, dy, w = (np.concatenate(arrs) for arrs in zip(*parts))
    return Rule(float(o[0]), float(o[1]), dx, dy, w)


def _effective_hole(d: Difference):
    """The part of the hole lying inside ``outer``, as a shape (or None)."""
    outer, hole = d.outer, d.hole
    if isinstance(outer, Rectangle) and isinstance(hole, Rectangle):
        x_lo, x_hi = max(outer.x_lo, hole.x_lo), min(outer.x_hi, hole.x_hi)
        y_lo, y_hi = max(outer.y_lo, hole.y_lo), min(outer.y_hi, hole.y_hi)
        if x_lo >= x_hi or y_lo >= y_hi:
            return None
        return Rectangle(x_lo, x_hi, y_lo, y_hi)
    pts = hole.boundary_samples(512)
    if isinstance(hole, (Rectangle, Polygon)):
        verts = hole.vertices() if isinstance(hole, Rectangle) else hole.array
        pts = np.vstack([pts, verts])
    if np.all(outer.contains(pts[:, 0], pts[:, 1])):
        return hole
    raise ValueError("quadrature for a hole only partly inside its outer shape "
                     "is supported for rectangles only")


def shape_rule(shape: Shape, k: float, level: int = 0) -> Rule:
    if isinstance(shape, Rectangle):
        return rectangle_rule(shape, k, level)
    if isinstance(shape, Disc):
        return disc_rule(shape, k, level)
    if isinstance(shape, Polygon):
        return polygon_rule(shape, k, level)
    if isinstance(shape, Difference):
        outer = shape_rule(shape.outer, k, level)
        hole = _effective_hole(shape)
        if hole is None:
            return outer
        inner = shape_rule(hole, k, level).rebased(outer.ox, outer.oy)
        return Rule(outer.ox, outer.oy, np.concatenate([outer.dx, inner.dx]),
                    np.concatenate([outer.dy, inner.dy]), np.concatenate([outer.w, -inner.w]))
    raise TypeError(f"unsupported shape {type(shape).__name__}")
