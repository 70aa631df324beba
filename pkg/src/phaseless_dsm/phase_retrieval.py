"""Three-circle phase retrieval.

A complex number z is recovered from its distances r_j = |z - z_j| to three
non-collinear anchors.  ``three_circle`` is the plain construction: rotate the
point M on the ray Z2->Z1 (at distance r2 from Z2) about Z2 by +-alpha and keep
the candidate whose distance to Z3 best matches r3.  sin(alpha) is taken
from the triangle's area rather than from cos(alpha) so that nearly
degenerate triangles keep their accuracy.

``retrieve_point`` runs the construction with the anchor pair whose circles
cross most transversally at the solution.  With the pair fixed to (z1, z2),
solutions near the line Z1Z2 lose accuracy like 1/sin(angle Z1 Z Z2); the
third anchor is always well placed in that case.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .forward import DatasetError, Dataset, FarFieldData, point_source_far_field

COLLINEAR_EPS = 1e-10
ZERO_DIST = 1e-14

_ORDERS = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class AnchorError(ValueError):
    pass


class AnchorTriple(NamedTuple):
    z1: complex
    z2: complex
    z3: complex


class DistanceTriple(NamedTuple):
    r1: float
    r2: float
    r3: float


def check_anchors(z1, z2, z3) -> None:
    z1, z2, z3 = (np.asarray(z, complex) for z in (z1, z2, z3))
    a, b = z2 - z1, z3 - z1
    scale = np.maximum(np.abs(a), np.abs(b)) ** 2
    area = np.abs((a * np.conj(b)).imag)
    bad = ~(area > COLLINEAR_EPS * scale) | (z1 == z2) | (z1 == z3) | (z2 == z3)
    if np.any(bad):
        raise AnchorError(f"{int(np.sum(bad))} anchor triple(s) are collinear or repeated")


def three_circle(z1, z2, z3, r1, r2, r3):
    """The four-step construction, vectorised over broadcastable arrays."""
    z1, z2, z3 = np.broadcast_arrays(*(np.asarray(z, complex) for z in (z1, z2, z3)))
    r1, r2, r3 = np.broadcast_arrays(*(np.asarray(r, float) for r in (r1, r2, r3)))
    d12 = np.abs(z1 - z2)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = z2 + (r2 / d12) * (z1 - z2)
        # law of cosines in the triangle (Z2, Z1, Z), numerator in factored form
        cos_a = (d12 * d12 - (r1 - r2) * (r1 + r2)) / (2.0 * r2 * d12)
        sin_a = 2.0 * _triangle_area(d12, r1, r2) / (r2 * d12)
    cos_a = np.clip(cos_a, -1.0, 1.0)
    sin_a = np.clip(sin_a, 0.0, 1.0)
    rot = cos_a + 1j * sin_a
    za = z2 + (m - z2) * np.conj(rot)
    zb = z2 + (m - z2) * rot
    pick_a = np.abs(np.abs(za - z3) - r3) <= np.abs(np.abs(zb - z3) - r3)
    z = np.where(pick_a, za, zb)
    # step 1: a vanishing distance pins z to that anchor
    for zj, rj in ((z3, r3), (z2, r2), (z1, r1)):
        z = np.where(rj <= ZERO_DIST, zj, z)
    return z


def _triangle_area(a, b, c):
    """Heron's formula in Kahan's ordering; 0 when the sides violate the triangle inequality.

    sin(alpha) from sqrt(1 - cos^2) loses all accuracy when alpha is near 0
    or pi; the area keeps full relative precision there.
    """
    a, b, c = np.sort(np.stack(np.broadcast_arrays(a, b, c)), axis=0)[::-1]
    p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(p, 0.0))


def _crossing_sine(z, za, zb):
    u, v = z - za, z - zb
    den = np.abs(u) * np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.abs((u * np.conj(v)).imag) / den
    return np.where(den > 0, s, 1.0)


def retrieve_points(z1, z2, z3, r1, r2, r3, check: bool = True):
    """Vectorised retrieval with well-conditioned pair selection."""
    anchors = [np.asarray(z, complex) for z in (z1, z2, z3)]
    dists = [np.asarray(r, float) for r in (r1, r2, r3)]
    anchors = list(np.broadcast_arrays(*anchors, *dists)[:3])
    dists = list(np.broadcast_arrays(*anchors, *dists)[3:])
    if check:
        check_anchors(*anchors)
    if np.any(np.stack(dists) < 0):
        raise ValueError("distances must be non-negative")
    z = three_circle(*anchors, *dists)
    conds = np.stack([_crossing_sine(z, anchors[a], anchors[b]) for a, b, _ in _ORDERS])
    best = np.argmax(conds, axis=0)
    out = np.array(z, copy=True)
    for o, (a, b, c) in enumerate(_ORDERS[1:], start=1):
        sel = best == o
        if np.any(sel):
            out[sel] = three_circle(anchors[a][sel], anchors[b][sel], anchors[c][sel],
                                    dists[a][sel], dists[b][sel], dists[c][sel])
    # exact hits keep the anchor regardless of pairing
    for zj, rj in zip(anchors[::-1], dists[::-1]):
        out = np.where(rj <= ZERO_DIST, zj, out)
    return out


def retrieve_point(anchors, dists) -> complex:
    z1, z2, z3 = anchors
    r1, r2, r3 = dists
    return complex(retrieve_points(z1, z2, z3, r1, r2, r3))


def check_strengths(taus) -> None:
    """tau2 - tau1 and tau3 - tau1 must be linearly independent over the reals."""
    if len(taus) != 3:
        raise ValueError(f"phase retrieval needs exactly three strengths, got {len(taus)}")
    a, b = complex(taus[1] - taus[0]), complex(taus[2] - taus[0])
    if not abs((a * b.conjugate()).imag) > COLLINEAR_EPS * max(abs(a), abs(b)) ** 2:
        raise ValueError("scattering strengths are collinear in the complex plane")


def retrieve_far_field(ds: Dataset, taus=None) -> FarFieldData:
    """Recover u_inf(xhat, k) at every lattice point from three phaseless records.

    Anchors are z_j = -tau_j exp(-i k xhat . z0) and distances the measured
    magnitudes for tau_j.
    """
    if taus is None:
        if len(ds.taus) != 3:
            raise DatasetError(f"dataset holds {len(ds.taus)} strengths; pass the three to use")
        taus = ds.taus
    taus = [complex(t) for t in taus]
    check_strengths(taus)
    idx = [ds.tau_index(t) for t in taus]
    ref = point_source_far_field(ds.z0, 1.0, ds.angles, ds.grid.nodes)
    anchors = [-t * ref for t in taus]
    dists = [ds.magnitudes[..., i] for i in idx]
    values = retrieve_points(*anchors, *dists)
    return FarFieldData(ds.grid, ds.angles, values, "retrieved")
