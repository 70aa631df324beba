import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from phaseless_dsm.expression import Expression
from phaseless_dsm.forward import DatasetError, WaveNumberGrid, default_directions, synthesize
from phaseless_dsm.phase_retrieval import (AnchorError, check_anchors, check_strengths,
                                           retrieve_far_field, retrieve_point, retrieve_points,
                                           three_circle)
from phaseless_dsm.scene import Component, Rectangle, SourceModel

GRID = WaveNumberGrid(0.5, 20.0, 20)
ANGLES = default_directions(20)

coord = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
point = st.builds(complex, coord, coord)


def rect_model(f="5"):
    return SourceModel((Component(Rectangle(1, 2, 1, 1.6), Expression(f)),))


def well_posed(z1, z2, z3):
    try:
        check_anchors(z1, z2, z3)
    except AnchorError:
        return False
    return True


def generic(z1, z2, z3, min_sine=1e-2):
    """Anchor triangle with no angle flatter than asin(min_sine).

    Nearly collinear triples pass check_anchors but cannot tell the two
    mirror candidates apart to 1e-9; random instances are generic.
    """
    if not well_posed(z1, z2, z3):
        return False
    for a, b, c in ((z1, z2, z3), (z2, z3, z1), (z3, z1, z2)):
        u, v = b - a, c - a
        if abs((u * v.conjugate()).imag) < min_sine * abs(u) * abs(v):
            return False
    return True


def rounding_bound(z, z1, z2, z3):
    """64 eps R^2 / (d s), minimised over anchor pairs at separation d whose circles cross at sine s.

    Exact distances pin z only this well; random instances have d ~ R and
    s of order one, adversarial ones need not.
    """
    r = max(abs(z), abs(z1), abs(z2), abs(z3), 1.0)

    def bound(a, b):
        u, v = z - a, z - b
        den = abs(u) * abs(v)
        sine = abs((u * v.conjugate()).imag) / den if den else 1.0
        return 64 * np.finfo(float).eps * r * r / max(abs(a - b) * sine, 1e-300)
    return min(bound(z1, z2), bound(z2, z3), bound(z3, z1))


def test_example_three_plus_four_i():
    z = retrieve_point((1, -1, 1j), (math.sqrt(20), math.sqrt(32), math.sqrt(18)))
    assert abs(z - (3 + 4j)) <= 1e-12


def test_plain_construction_matches_example():
    z = three_circle(1, -1, 1j, math.sqrt(20), math.sqrt(32), math.sqrt(18))
    assert abs(z - (3 + 4j)) <= 1e-12


@pytest.mark.parametrize("j", [0, 1, 2])
def test_zero_distance_returns_anchor(j):
    anchors = (2 + 1j, -3j, 5)
    dists = [abs(anchors[j] - a) for a in anchors]
    assert retrieve_point(anchors, dists) == anchors[j]


def test_point_on_line_through_first_pair():
    z = retrieve_point((0, 2, 1 + 1j), (1, 1, 1))
    assert abs(z - 1) <= 1e-12
    za = three_circle(0, 2, 1 + 1j, 1, 1, 1)
    assert abs(za - 1) <= 1e-12


@pytest.mark.parametrize("anchors", [(0, 1, 2), (1j, 2j, -5j), (1 + 1j, 1 + 1j, 3), (0, 1, 1 + 1e-12j)])
def test_collinear_or_repeated_anchors_rejected(anchors):
    with pytest.raises(AnchorError):
        retrieve_point(anchors, (1, 1, 1))


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        retrieve_point((1, -1, 1j), (1, -1, 1))


def test_infeasible_distances_are_clamped():
    # circles about 1 and -1 do not meet; the result is still finite
    z = retrieve_point((1, -1, 1j), (0.1, 0.1, 1.5))
    assert np.isfinite(z)


@settings(max_examples=300, deadline=None)
@given(point, point, point, point)
def test_exact_recovery(z, z1, z2, z3):
    assume(generic(z1, z2, z3))
    dists = [abs(z - a) for a in (z1, z2, z3)]
    assert abs(retrieve_point((z1, z2, z3), dists) - z) <= rounding_bound(z, z1, z2, z3)


@settings(max_examples=300, deadline=None)
@given(point, point, point, point)
def test_relabeling_first_pair(z, z1, z2, z3):
    assume(generic(z1, z2, z3) and well_posed(z2, z1, z3))
    r1, r2, r3 = (abs(z - a) for a in (z1, z2, z3))
    a = retrieve_point((z1, z2, z3), (r1, r2, r3))
    b = retrieve_point((z2, z1, z3), (r2, r1, r3))
    assert abs(a - b) <= max(1e-9, 2 * rounding_bound(z, z1, z2, z3))


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(5)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    anchors = [rng.normal(size=50) + 1j * rng.normal(size=50) for _ in range(3)]
    dists = [np.abs(z - a) for a in anchors]
    vec = retrieve_points(*anchors, *dists)
    for i in range(50):
        one = retrieve_point([a[i] for a in anchors], [d[i] for d in dists])
        assert abs(vec[i] - one) <= 1e-13 * abs(one)


def test_lipschitz_in_distance_noise():
    rng = np.random.default_rng(0)
    anchors, z = (1, -1, 1j), 3 + 4j
    exact = np.array([abs(z - a) for a in anchors])

    def worst(eps, n=1000):
        r = exact[:, None] + eps * rng.uniform(-1, 1, (3, n))
        return float(np.max(np.abs(retrieve_points(*anchors, *r) - z)))

    c = worst(1e-2) / 1e-2
    for eps in (1e-3, 1e-4):
        assert worst(eps) <= 1.5 * c * eps


# -- far-field retrieval --------------------------------------------------------------

def test_check_strengths():
    check_strengths([1, -1, 1j])
    with pytest.raises(ValueError):
        check_strengths([1, -1, 2])
    with pytest.raises(ValueError):
        check_strengths([1, 1j])


def test_noiseless_far_field_recovery():
    ds = synthesize(rect_model(), (4, 4), [1, -1, 1j], ANGLES, GRID)
    got = retrieve_far_field(ds)
    truth = ds.phased.values
    assert got.source == "retrieved"
    assert np.max(np.abs(got.values - truth) / np.abs(truth)) <= 1e-10


def test_zero_source_recovers_zero():
    ds = synthesize(rect_model("0"), (4, 4), [1, -1, 1j], ANGLES, GRID)
    got = retrieve_far_field(ds)
    assert np.max(np.abs(got.values)) <= 1e-12


def test_strength_selection_and_errors():
    ds = synthesize(rect_model(), (4, 4), [0, 1, -1, 1j], ANGLES[:2], GRID)
    with pytest.raises(DatasetError):
        retrieve_far_field(ds)
    got = retrieve_far_field(ds, taus=[1j, 1, -1])
    assert np.allclose(got.values, ds.phased.values, rtol=1e-10, atol=0)
    with pytest.raises(DatasetError):
        retrieve_far_field(ds, taus=[1, -1, 2j])
