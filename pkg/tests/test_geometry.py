import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccbisect.errors import DimensionMismatch, StarViolation
from ccbisect.geometry import (AxisBox, Body, Cylinder, Disk, HalfSpace, PolygonRegion, Rotation,
                               StarPolygon, clip_convex, contains, polygon_area, star_fan)

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
finite = st.floats(-3, 3, allow_nan=False)


def body(c, s=1.0, theta=0.0, reflected=False):
    return Body(tuple(c), s, Rotation.from_angle(theta), reflected)


# ---------------------------------------------------------------- contains

def test_contains_disk_scaled():
    assert contains(Disk(1.0), body((0, 0), 2.0), (1.5, 0.0))


def test_contains_box_outside():
    assert not contains(AxisBox((1.0, 1.0)), body((0, 0)), (1.01, 0.0))


def test_contains_rotated_square_polygon():
    sq = StarPolygon(tuple(UNIT_SQUARE), (0.5, 0.5))
    placement = body((0, 0), 1.0, math.pi / 4)
    # inverse-transform oracle: local point = p + R^T x
    R = Rotation.from_angle(math.pi / 4).matrix
    local = np.array([0.5, 0.5]) + R.T @ np.array([0.7, 0.0])
    assert 0 <= local[0] <= 1 and 0 <= local[1] <= 1
    assert contains(sq, placement, (0.7, 0.0))


def test_contains_halfspace():
    h = HalfSpace((1.0, 0.0), 0.5)
    assert contains(Disk(1.0), h, (0.6, 3.0))
    assert not contains(Disk(1.0), h, (0.4, 3.0))


def test_contains_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        contains(Disk(1.0), body((0, 0)), (0.0, 0.0, 0.0))


def test_contains_vectorised_matches_scalar():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2, 2, (50, 2))
    sq = AxisBox((1.0, 0.5))
    pl = body((0.2, -0.1), 1.3, 0.4, True)
    many = contains(sq, pl, pts)
    assert list(many) == [contains(sq, pl, p) for p in pts]


def test_reflection_flips_first_local_coordinate():
    tri = StarPolygon(((0.0, 0.0), (2.0, 0.0), (0.0, 1.0)), (0.5, 0.3))
    plain = body((0, 0), 1.0, 0.0, False)
    mirrored = body((0, 0), 1.0, 0.0, True)
    x = np.array([1.2, 0.1]) - np.array([0.5, 0.3])   # world point of local (1.2, 0.1)
    assert contains(tri, plain, x)
    assert not contains(tri, mirrored, x)
    assert contains(tri, mirrored, x * np.array([-1.0, 1.0]))


def test_cylinder_contains():
    cyl = Cylinder(1.0, 2.0)
    pl = Body((0.0, 0.0, 0.0), 1.0, Rotation.identity(3))
    assert contains(cyl, pl, (0.5, 0.5, 1.9))
    assert not contains(cyl, pl, (0.0, 0.0, 2.1))
    assert not contains(cyl, pl, (0.8, 0.8, 0.0))


@settings(max_examples=60, deadline=None)
@given(cx=finite, cy=finite, s=st.floats(0.1, 3), th=st.floats(0, 2 * math.pi),
       ang=st.floats(0, 2 * math.pi), tx=finite, ty=finite, px=finite, py=finite,
       refl=st.booleans())
def test_contains_rigid_motion_invariance(cx, cy, s, th, ang, tx, ty, px, py, refl):
    cutter = StarPolygon(((0.0, 0.0), (2.0, 0.0), (1.5, 1.0), (0.0, 1.5)), (0.7, 0.6))
    x = np.array([px, py])
    R = Rotation.from_angle(ang).matrix
    t = np.array([tx, ty])
    pl = body((cx, cy), s, th, refl)
    moved = Body(tuple(R @ np.array([cx, cy]) + t), s, Rotation.from_matrix(R @ pl.rotation.matrix), refl)
    # skip points within round-off of the boundary
    local = pl.to_local(cutter, x)
    if float(cutter.boundary_distance_local(local)) * s < 1e-9:
        return
    assert contains(cutter, pl, x) == contains(cutter, moved, R @ x + t)


def test_rotation_invariants():
    for w in np.random.default_rng(0).normal(size=(5, 3)):
        m = Rotation.from_rotvec(w).matrix
        assert abs(np.linalg.det(m) - 1) < 1e-12
        assert np.allclose(m.T @ m, np.eye(3), atol=1e-12)
    assert Rotation.from_angle(7.0).angle == pytest.approx(7.0 - 2 * math.pi)


def test_placement_validation():
    with pytest.raises(ValueError):
        body((0, 0), 0.0)
    with pytest.raises(ValueError):
        HalfSpace((1.0, 1.0), 0.0)


# ---------------------------------------------------------------- clip_convex

def test_clip_same_square():
    assert clip_convex(UNIT_SQUARE, (0, 0, 1, 1)) == pytest.approx(1.0, abs=1e-12)


def test_clip_triangle_listed_example():
    # The hypotenuse x + y = 2 only touches the unit box at (1, 1): the whole box is covered.
    assert clip_convex([(0, 0), (2, 0), (0, 2)], (0, 0, 1, 1)) == pytest.approx(1.0, abs=1e-12)
    # 0.875 is the value for a hypotenuse at x + y = 1.5
    assert clip_convex([(0, 0), (1.5, 0), (0, 1.5)], (0, 0, 1, 1)) == pytest.approx(0.875, abs=1e-12)


def test_clip_triangle_monte_carlo():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 1, (400_000, 2))
    frac = np.mean(pts.sum(axis=1) <= 2.0)
    assert abs(frac - clip_convex([(0, 0), (2, 0), (0, 2)], (0, 0, 1, 1))) <= 1e-3
    frac = np.mean(pts.sum(axis=1) <= 1.5)
    assert abs(frac - clip_convex([(0, 0), (1.5, 0), (0, 1.5)], (0, 0, 1, 1))) <= 1e-3


def test_clip_disjoint_and_degenerate():
    assert clip_convex([(5, 5), (6, 5), (6, 6)], (0, 0, 1, 1)) == 0.0
    assert clip_convex([(0, 0), (1, 1), (2, 2)], (0, 0, 1, 1)) == 0.0


def _convex_polygon(rng, n):
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    r = rng.uniform(0.5, 1.5)
    return np.stack([r * np.cos(ang), r * np.sin(ang)], 1) + rng.uniform(-1, 1, 2)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 9))
def test_clip_additive_over_fan_triangulation(seed, n):
    rng = np.random.default_rng(seed)
    poly = _convex_polygon(rng, n)
    lo = rng.uniform(-1.5, 0.5, 2)
    box = (lo[0], lo[1], lo[0] + rng.uniform(0.2, 2), lo[1] + rng.uniform(0.2, 2))
    whole = clip_convex(poly, box)
    parts = sum(clip_convex([poly[0], poly[i], poly[i + 1]], box) for i in range(1, len(poly) - 1))
    assert whole == pytest.approx(parts, abs=1e-9)


# ---------------------------------------------------------------- star_fan

def test_star_fan_square():
    sq = StarPolygon(tuple(UNIT_SQUARE), (0.5, 0.5))
    tris = star_fan(sq)
    assert len(tris) == 4
    assert sum(polygon_area(t) for t in tris) == pytest.approx(1.0, abs=1e-12)


L_SHAPE = ((0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0))


def test_star_fan_l_shape():
    poly = StarPolygon(L_SHAPE, (0.5, 0.5))
    tris = star_fan(poly)
    assert len(tris) == 6
    assert sum(polygon_area(t) for t in tris) == pytest.approx(polygon_area(np.array(L_SHAPE)), abs=1e-9)
    assert polygon_area(np.array(L_SHAPE)) == pytest.approx(3.0)


def test_star_fan_point_outside_kernel():
    with pytest.raises(StarViolation):
        StarPolygon(L_SHAPE, (1.8, 0.5))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 12))
def test_star_fan_area_matches_shoelace(seed, n):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    if np.max(np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))) >= math.pi:
        return  # origin would not be interior
    rad = rng.uniform(0.3, 1.0, n)
    verts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], 1)
    poly = StarPolygon(tuple(map(tuple, verts)), (0.0, 0.0))
    total = sum(polygon_area(t) for t in star_fan(poly))
    assert total == pytest.approx(polygon_area(verts), abs=1e-9)


def test_polygon_region_holes_oriented():
    outer = [(-2, -2), (2, -2), (2, 2), (-2, 2)]
    hole = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    region = PolygonRegion((tuple(outer), tuple(hole)), (1.5, 0.0))
    assert not region.star_shaped
    assert region.area == pytest.approx(12.0)
    # the body maps the star point to its centre, so world x is local x + p
    assert not contains(region, body((0, 0)), (-1.5, 0.0))
    assert contains(region, body((0, 0)), (0.0, 1.5))
