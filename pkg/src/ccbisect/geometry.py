"""Cutter shapes, placements and the planar/spatial primitives behind them.

A placement of a cutter ``C`` with star point ``p`` is the set
``x = c + s * R @ F @ (y - p)`` for ``y`` in ``C``, where ``F`` flips the first
coordinate when the placement is reflected. Half-spaces ``{x : <x, n> >= o}``
stand in for the limiting copies at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, StarViolation

# Angular width of the window in which polygon vertex normals are blended.
NORMAL_WINDOW = 1e-3


def as_vec(x, d=None) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if d is not None and v.size != d:
        raise DimensionMismatch(f"expected a {d}-vector, got {v.size} coordinates")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite coordinates")
    return v


def _tup(x) -> tuple:
    return tuple(float(t) for t in np.asarray(x, dtype=float).reshape(-1))


def rotation_from_rotvec(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    th = float(np.linalg.norm(w))
    if th < 1e-300:
        return np.eye(3)
    k = w / th
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(th) * Kx + (1 - math.cos(th)) * (Kx @ Kx)


def rotation_aligning(a, b) -> np.ndarray:
    """Proper rotation taking unit vector ``a`` to unit vector ``b`` (d = 2 or 3)."""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    if a.size == 2:
        th = math.atan2(b[1], b[0]) - math.atan2(a[1], a[0])
        c, s = math.cos(th), math.sin(th)
        return np.array([[c, -s], [s, c]])
    v = np.cross(a, b)
    c = float(a @ b)
    sn = float(np.linalg.norm(v))
    if sn < 1e-15:
        if c > 0:
            return np.eye(3)
        # half turn about any axis orthogonal to a
        t = np.eye(3)[np.argmin(np.abs(a))]
        ax = np.cross(a, t)
        return rotation_from_rotvec(math.pi * ax / np.linalg.norm(ax))
    return rotation_from_rotvec(v / sn * math.atan2(sn, c))


@dataclass(frozen=True)
class Rotation:
    """Proper rotation stored as a row-major matrix of tuples."""

    rows: tuple

    def __post_init__(self):
        m = np.asarray(self.rows, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
            raise DimensionMismatch("rotation must be 2x2 or 3x3")
        if not np.allclose(m.T @ m, np.eye(m.shape[0]), atol=1e-12, rtol=0):
            raise ValueError("rotation matrix is not orthonormal")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ValueError("rotation must have determinant +1")

    @classmethod
    def from_matrix(cls, m) -> "Rotation":
        return cls(tuple(tuple(float(x) for x in row) for row in np.asarray(m, dtype=float)))

    @classmethod
    def identity(cls, d: int) -> "Rotation":
        return cls.from_matrix(np.eye(d))

    @classmethod
    def from_angle(cls, theta: float) -> "Rotation":
        c, s = math.cos(theta), math.sin(theta)
        if theta == 0.0:
            c, s = 1.0, 0.0
        return cls(((c, -s), (s, c)))

    @classmethod
    def from_rotvec(cls, w) -> "Rotation":
        return cls.from_matrix(rotation_from_rotvec(w))

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def angle(self) -> float:
        if self.dim != 2:
            raise DimensionMismatch("angle is only defined for planar rotations")
        return math.atan2(self.rows[1][0], self.rows[0][0]) % (2 * math.pi)


def flip_matrix(d: int, reflected: bool) -> np.ndarray:
    f = np.eye(d)
    if reflected:
        f[0, 0] = -1.0
    return f


# --------------------------------------------------------------------------
# Cutters
# --------------------------------------------------------------------------

class Cutter:
    """Base class. Subclasses are frozen dataclasses living in local coordinates."""

    dim: int
    star_shaped = True
    symmetry_period = 2 * math.pi  # planar rotation period of the shape about p
    reflection_symmetric = False

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.star_point, dtype=float)

    def contains_local(self, y) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance_local(self, y) -> np.ndarray:
        """Euclidean distance from local points to the boundary."""
        raise NotImplementedError

    def radial_extent(self) -> tuple[float, float]:
        """(inradius, circumradius) of the shape as seen from the star point."""
        raise NotImplementedError

    def boundary_normal(self, u) -> np.ndarray:
        """Inward unit normal n(u) at the boundary point hit by the ray from p along u."""
        raise NotImplementedError


def _check_star_point(cutter):
    if not bool(cutter.contains_local(cutter.p[None, :])[0]):
        raise ValueError("star point must lie inside the cutter")
    if cutter.boundary_distance_local(cutter.p[None, :])[0] <= 0:
        raise ValueError("star point must be strictly interior")


@dataclass(frozen=True)
class Disk(Cutter):
    """Disk (d = 2) or ball (d = 3) of the given radius centred at the local origin."""

    radius: float
    dim: int = 2
    star_point: tuple = None
    symmetry_period = 0.0
    reflection_symmetric = True

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.dim not in (2, 3):
            raise DimensionMismatch("dimension must be 2 or 3")
        if self.star_point is None:
            object.__setattr__(self, "star_point", (0.0,) * self.dim)
        object.__setattr__(self, "star_point", _tup(as_vec(self.star_point, self.dim)))
        if self.star_point != (0.0,) * self.dim:
            object.__setattr__(self, "symmetry_period", 2 * math.pi)
        _check_star_point(self)

    def contains_local(self, y):
        y = np.asarray(y, dtype=float)
        return np.sum(y * y, axis=-1) <= self.radius ** 2

    def boundary_distance_local(self, y):
        return np.abs(np.linalg.norm(np.asarray(y, dtype=float), axis=-1) - self.radius)

    def radial_extent(self):
        r = float(np.linalg.norm(self.p))
        return self.radius - r, self.radius + r

    def boundary_normal(self, u):
        u = np.asarray(u, dtype=float)
        p = self.p
        b = u @ p
        t = -b + math.sqrt(b * b - p @ p + self.radius ** 2)
        m = p + t * u
        return -m / np.linalg.norm(m)


@dataclass(frozen=True)
class AxisBox(Cutter):
    """Box with the given half extents, centred at the local origin."""

    half_extents: tuple
    star_point: tuple = None
    reflection_symmetric = True

    def __post_init__(self):
        ext = _tup(self.half_extents)
        if len(ext) not in (2, 3):
            raise DimensionMismatch("dimension must be 2 or 3")
        if min(ext) <= 0:
            raise ValueError("half extents must be positive")
        object.__setattr__(self, "half_extents", ext)
        if self.star_point is None:
            object.__setattr__(self, "star_point", (0.0,) * len(ext))
        object.__setattr__(self, "star_point", _tup(as_vec(self.star_point, len(ext))))
        _check_star_point(self)

    @property
    def dim(self):
        return len(self.half_extents)

    @property
    def symmetry_period(self):
        if self.star_point != (0.0,) * self.dim:
            return 2 * math.pi
        if self.dim == 2 and self.half_extents[0] == self.half_extents[1]:
            return math.pi / 2
        return math.pi

    def contains_local(self, y):
        y = np.asarray(y, dtype=float)
        return np.all(np.abs(y) <= np.asarray(self.half_extents), axis=-1)

    def boundary_distance_local(self, y):
        y = np.asarray(y, dtype=float)
        ext = np.asarray(self.half_extents)
        q = np.abs(y) - ext
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = -np.max(q, axis=-1)
        return np.where(np.any(q > 0, axis=-1), outside, inside)

    def radial_extent(self):
        ext = np.asarray(self.half_extents)
        p = self.p
        rin = float(np.min(ext - np.abs(p)))
        rout = float(np.linalg.norm(ext + np.abs(p)))
        return rin, rout

    def rings(self):
        if self.dim != 2:
            raise DimensionMismatch("rings are only defined in the plane")
        a, b = self.half_extents
        return [np.array([[-a, -b], [a, -b], [a, b], [-a, b]])]

    def boundary_normal(self, u):
        if self.dim == 2:
            return _polygon_normal(self.rings()[0], self.p, u)
        return _box_face_normal(np.asarray(self.half_extents), self.p, u)


@dataclass(frozen=True)
class Cylinder(Cutter):
    """Cylinder in R^3: unit-free disk of ``radius`` times segment of ``half_height``."""

    radius: float
    half_height: float
    axis: int = 2
    star_point: tuple = None
    reflection_symmetric = True
    symmetry_period = math.pi

    def __post_init__(self):
        if not (self.radius > 0 and self.half_height > 0):
            raise ValueError("cylinder radius and half height must be positive")
        if self.axis not in (0, 1, 2):
            raise ValueError("axis index must be 0, 1 or 2")
        if self.star_point is None:
            object.__setattr__(self, "star_point", (0.0, 0.0, 0.0))
        object.__setattr__(self, "star_point", _tup(as_vec(self.star_point, 3)))
        _check_star_point(self)

    dim = 3

    def _split(self, y):
        y = np.asarray(y, dtype=float)
        keep = [i for i in range(3) if i != self.axis]
        return np.linalg.norm(y[..., keep], axis=-1), y[..., self.axis]

    def contains_local(self, y):
        rho, z = self._split(y)
        return (rho <= self.radius) & (np.abs(z) <= self.half_height)

    def boundary_distance_local(self, y):
        rho, z = self._split(y)
        qr = rho - self.radius
        qz = np.abs(z) - self.half_height
        outside = np.hypot(np.maximum(qr, 0.0), np.maximum(qz, 0.0))
        inside = -np.maximum(qr, qz)
        return np.where((qr > 0) | (qz > 0), outside, inside)

    def radial_extent(self):
        rho, z = self._split(self.p[None, :])
        rin = float(min(self.radius - rho[0], self.half_height - abs(z[0])))
        rout = float(math.hypot(self.radius + rho[0], self.half_height + abs(z[0])))
        return rin, rout

    def boundary_normal(self, u):
        u = np.asarray(u, dtype=float)
        p = self.p
        from .overlap import chord_intervals
        _, hi, _ = chord_intervals(self.shape_spec(), p[None, :], u[None, :])
        m = p + hi[0] * u
        rho, z = self._split(m[None, :])
        if abs(abs(z[0]) - self.half_height) < 1e-12 * self.half_height and rho[0] < self.radius:
            n = np.zeros(3)
            n[self.axis] = -math.copysign(1.0, z[0])
            return n
        n = -m.copy()
        n[self.axis] = 0.0
        return n / np.linalg.norm(n)

    def shape_spec(self):
        return ("cylinder", self.radius, self.half_height, self.axis)


def _box_face_normal(ext, p, u):
    from .overlap import chord_intervals
    _, hi, _ = chord_intervals(("box", tuple(ext)), p[None, :], np.asarray(u, dtype=float)[None, :])
    m = p + hi[0] * np.asarray(u)
    i = int(np.argmax(np.abs(m) / ext))
    n = np.zeros(len(ext))
    n[i] = -math.copysign(1.0, m[i])
    return n


def _ring_edges(rings):
    a = np.concatenate([r for r in rings])
    b = np.concatenate([np.roll(r, -1, axis=0) for r in rings])
    return a, b


def _signed_area(ring):
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _ray_exit(rings, p, u):
    """Largest ray parameter t with p + t u on the boundary; returns (t, edge index)."""
    a, b = _ring_edges(rings)
    d = b - a
    w = a - p
    den = u[0] * d[:, 1] - u[1] * d[:, 0]
    ok = np.abs(den) > 1e-300
    den_s = np.where(ok, den, 1.0)
    t = (w[:, 0] * d[:, 1] - w[:, 1] * d[:, 0]) / den_s
    s = (w[:, 0] * u[1] - w[:, 1] * u[0]) / den_s
    hit = ok & (s >= -1e-12) & (s <= 1 + 1e-12) & (t > 0)
    if not np.any(hit):
        raise ValueError("ray from star point does not meet the boundary")
    t = np.where(hit, t, -np.inf)
    i = int(np.argmax(t))
    return float(t[i]), i


def _edge_inward_normal(rings, i):
    a, b = _ring_edges(rings)
    d = b[i] - a[i]
    n = np.array([-d[1], d[0]])  # left of CCW edge = inside
    return n / np.linalg.norm(n)


def _slerp(n0, n1, t):
    a0 = math.atan2(n0[1], n0[0])
    a1 = math.atan2(n1[1], n1[0])
    da = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    a = a0 + t * da
    return np.array([math.cos(a), math.sin(a)])


def _polygon_normal(ring_or_rings, p, u):
    rings = ring_or_rings if isinstance(ring_or_rings, list) else [ring_or_rings]
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    _, i = _ray_exit(rings, p, u)
    normal = _edge_inward_normal(rings, i)
    # blend across vertices whose direction from p lies inside the window
    a, b = _ring_edges(rings)
    psi = math.atan2(u[1], u[0])
    verts = [a[i], b[i]]
    # neighbouring edges within the same ring
    starts = np.cumsum([0] + [len(r) for r in rings])
    ring_id = int(np.searchsorted(starts, i, side="right") - 1)
    lo, hi_ = starts[ring_id], starts[ring_id + 1]
    prev_e = lo + (i - lo - 1) % (hi_ - lo)
    next_e = lo + (i - lo + 1) % (hi_ - lo)
    half = NORMAL_WINDOW / 2
    for vert, other, before in ((verts[0], prev_e, True), (verts[1], next_e, False)):
        dv = vert - p
        phi = math.atan2(dv[1], dv[0])
        off = (psi - phi + math.pi) % (2 * math.pi) - math.pi
        if abs(off) < half:
            n_other = _edge_inward_normal(rings, other)
            n_prev, n_next = (n_other, normal) if before else (normal, n_other)
            return _slerp(n_prev, n_next, (off + half) / NORMAL_WINDOW)
    return normal


def _point_in_rings(rings, pts):
    """Even-odd point-in-polygon test for (N, 2) points; holes handled by parity."""
    pts = np.asarray(pts, dtype=float)
    a, b = _ring_edges(rings)
    x, y = pts[..., 0][..., None], pts[..., 1][..., None]
    cond = (a[:, 1] > y) != (b[:, 1] > y)
    dy = b[:, 1] - a[:, 1]
    dy = np.where(dy != 0, dy, 1.0)
    xint = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / dy
    crossing = cond & (x < xint)
    return (np.sum(crossing, axis=-1) % 2) == 1


def _dist_to_edges(rings, pts):
    pts = np.asarray(pts, dtype=float)
    a, b = _ring_edges(rings)
    d = b - a
    L2 = np.sum(d * d, axis=1)
    w = pts[..., None, :] - a
    t = np.clip(np.sum(w * d, axis=-1) / L2, 0.0, 1.0)
    proj = a + t[..., None] * d
    return np.min(np.linalg.norm(pts[..., None, :] - proj, axis=-1), axis=-1)


@dataclass(frozen=True)
class StarPolygon(Cutter):
    """Simple polygon (CCW vertices) star-shaped about ``star_point``."""

    vertices: tuple
    star_point: tuple = None
    smooth: bool = False

    dim = 2

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise DimensionMismatch("polygon needs at least three planar vertices")
        if _signed_area(v) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", tuple(_tup(r) for r in v))
        if self.star_point is None:
            object.__setattr__(self, "star_point", _tup(v.mean(axis=0)))
        object.__setattr__(self, "star_point", _tup(as_vec(self.star_point, 2)))
        _check_star_point(self)
        star_fan(self)  # raises StarViolation

    @property
    def verts(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def rings(self):
        return [self.verts]

    @property
    def symmetry_period(self):
        v = self.verts - self.p
        n = len(v)
        for k in range(1, n):
            if n % k:
                continue
            th = 2 * math.pi * k / n
            c, s = math.cos(th), math.sin(th)
            rot = v @ np.array([[c, s], [-s, c]])
            if np.allclose(rot, np.roll(v, -k, axis=0), atol=1e-12):
                return th
        return 2 * math.pi

    def contains_local(self, y):
        y = np.asarray(y, dtype=float)
        inside = _point_in_rings(self.rings(), y)
        return inside | (_dist_to_edges(self.rings(), y) <= 1e-14)

    def boundary_distance_local(self, y):
        return _dist_to_edges(self.rings(), y)

    def radial_extent(self):
        v = self.verts
        return float(self.boundary_distance_local(self.p[None, :])[0]), \
            float(np.max(np.linalg.norm(v - self.p, axis=1)))

    def boundary_normal(self, u):
        return _polygon_normal(self.rings(), self.p, u)


@dataclass(frozen=True)
class PolygonRegion(Cutter):
    """Planar region bounded by several rings: CCW outer boundaries, CW holes.

    Need not be star-shaped; the star point is only the centre of scaling and
    must lie in the interior.
    """

    rings_: tuple
    star_point: tuple = None

    dim = 2
    star_shaped = False

    def __post_init__(self):
        rings = []
        for r in self.rings_:
            r = np.asarray(r, dtype=float)
            if r.ndim != 2 or r.shape[1] != 2 or r.shape[0] < 3:
                raise DimensionMismatch("each ring needs at least three planar vertices")
            rings.append(tuple(_tup(q) for q in r))
        object.__setattr__(self, "rings_", tuple(rings))
        # orient: a ring nested inside an odd number of others is a hole
        arrs = [np.asarray(r) for r in rings]
        fixed = []
        for i, r in enumerate(arrs):
            depth = sum(bool(_point_in_rings([o], r[:1])[0]) for j, o in enumerate(arrs) if j != i)
            want_ccw = depth % 2 == 0
            if (_signed_area(r) > 0) != want_ccw:
                r = r[::-1]
            fixed.append(tuple(_tup(q) for q in r))
        object.__setattr__(self, "rings_", tuple(fixed))
        if self.star_point is None:
            raise ValueError("PolygonRegion needs an explicit interior star point")
        object.__setattr__(self, "star_point", _tup(as_vec(self.star_point, 2)))
        _check_star_point(self)

    def rings(self):
        return [np.asarray(r, dtype=float) for r in self.rings_]

    def contains_local(self, y):
        y = np.asarray(y, dtype=float)
        return _point_in_rings(self.rings(), y) | (_dist_to_edges(self.rings(), y) <= 1e-14)

    def boundary_distance_local(self, y):
        return _dist_to_edges(self.rings(), y)

    def radial_extent(self):
        allv = np.concatenate(self.rings())
        return float(self.boundary_distance_local(self.p[None, :])[0]), \
            float(np.max(np.linalg.norm(allv - self.p, axis=1)))

    def boundary_normal(self, u):
        return _polygon_normal(self.rings(), self.p, u)

    @property
    def area(self) -> float:
        return sum(_signed_area(r) for r in self.rings())


# --------------------------------------------------------------------------
# Placements
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Body:
    """Placed copy ``c + s R F (C - p)``."""

    center: tuple
    scale: float
    rotation: Rotation
    reflected: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", _tup(as_vec(self.center)))
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("placement scale must be positive and finite")
        object.__setattr__(self, "scale", float(self.scale))
        if self.rotation.dim != len(self.center):
            raise DimensionMismatch("rotation and center dimensions differ")

    @property
    def dim(self):
        return len(self.center)

    def linear(self) -> np.ndarray:
        """Matrix taking local offsets (y - p) to world offsets."""
        return self.scale * self.rotation.matrix @ flip_matrix(self.dim, self.reflected)

    def to_local(self, cutter: Cutter, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        R = self.rotation.matrix
        F = flip_matrix(self.dim, self.reflected)
        return cutter.p + (x - np.asarray(self.center)) @ (R @ F) / self.scale

    def to_world(self, cutter: Cutter, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.asarray(self.center) + (y - cutter.p) @ self.linear().T


@dataclass(frozen=True)
class HalfSpace:
    """Closed half-space ``{x : <x, normal> >= offset}``."""

    normal: tuple
    offset: float

    def __post_init__(self):
        n = as_vec(self.normal)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("half-space normal must be a unit vector")
        object.__setattr__(self, "normal", _tup(n))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return len(self.normal)


Placement = Body | HalfSpace


def contains(cutter: Cutter, placement, x) -> bool | np.ndarray:
    """Membership of ``x`` (one point or an (N, d) array) in the placed cutter."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    if d != placement.dim or (isinstance(placement, Body) and d != cutter.dim):
        raise DimensionMismatch(f"point has {d} coordinates, placement has {placement.dim}")
    if isinstance(placement, HalfSpace):
        out = x @ np.asarray(placement.normal) >= placement.offset
    else:
        out = cutter.contains_local(placement.to_local(cutter, x))
    return bool(out) if np.ndim(out) == 0 else out


def boundary_distance(cutter: Cutter, placement, x) -> np.ndarray:
    """Distance from world points to the boundary of the placed cutter."""
    x = np.asarray(x, dtype=float)
    if isinstance(placement, HalfSpace):
        return np.abs(x @ np.asarray(placement.normal) - placement.offset)
    return placement.scale * cutter.boundary_distance_local(placement.to_local(cutter, x))


# --------------------------------------------------------------------------
# Convex clipping and star fans
# --------------------------------------------------------------------------

def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    return _signed_area(poly)


def clip_convex(poly: Sequence, box) -> float:
    """Area of a convex CCW polygon intersected with box (xmin, ymin, xmax, ymax).

    Plain Sutherland-Hodgman against the four box sides. Degenerate input
    yields 0.
    """
    out = [tuple(map(float, q)) for q in poly]
    if len(out) < 3 or abs(polygon_area(out)) == 0.0:
        return 0.0
    xmin, ymin, xmax, ymax = map(float, box)
    # each clip line: inside test value f(q) >= 0, linear in q
    sides = (
        lambda q: q[0] - xmin,
        lambda q: xmax - q[0],
        lambda q: q[1] - ymin,
        lambda q: ymax - q[1],
    )
    for f in sides:
        if not out:
            return 0.0
        inp, out = out, []
        prev = inp[-1]
        fp = f(prev)
        for cur in inp:
            fc = f(cur)
            if fc >= 0:
                if fp < 0:
                    t = fp / (fp - fc)
                    out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
                out.append(cur)
            elif fp >= 0:
                t = fp / (fp - fc)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            prev, fp = cur, fc
    if len(out) < 3:
        return 0.0
    return max(polygon_area(out), 0.0)


def star_fan(cutter) -> list[np.ndarray]:
    """Triangles (p, v_i, v_{i+1}) covering a star-shaped polygon.

    Raises StarViolation when a fan triangle is negatively oriented, i.e. the
    star point does not see the whole boundary.
    """
    if isinstance(cutter, AxisBox):
        verts = cutter.rings()[0]
    elif isinstance(cutter, StarPolygon):
        verts = cutter.verts
    else:
        raise TypeError("star_fan needs a polygonal cutter")
    p = cutter.p
    tris = []
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        orient = (a[0] - p[0]) * (b[1] - p[1]) - (a[1] - p[1]) * (b[0] - p[0])
        if orient < 0:
            raise StarViolation(f"fan triangle {i} is negatively oriented; "
                                "star point is outside the kernel of the polygon")
        tris.append(np.array([p, a, b]))
    return tris
