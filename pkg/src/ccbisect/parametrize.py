"""Compact charts of candidate placements and the residual map on them.

Every chart output bisects the pinning measure mu_0 by construction, so a zero
of the residual (the normalised imbalance of mu_1..mu_d) is a simultaneous
bisection. The charts share one convention for their frame: parameter space
is centred at ``origin`` and ``unit`` sets how fast centres run off to
infinity; the defaults (0, 1) give the textbook formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainError
from .geometry import (AxisBox, Cylinder, HalfSpace, Rotation, as_vec, flip_matrix,
                       rotation_aligning)
from .mass_eval import (PlacementBatch, bisect_scales, canonical_sign, enumerate_scale_roots,
                        halfspace_offsets, masses, scale_function)
from .measures import Measure, MeasureSet

NORM_SLACK = 1e-12
DELTA = 1.0 / 16.0


@dataclass(frozen=True)
class ChartFrame:
    origin: tuple = None
    unit: float = 1.0

    def origin_vec(self, d):
        return np.zeros(d) if self.origin is None else np.asarray(self.origin, dtype=float)

    @classmethod
    def for_measures(cls, measures: MeasureSet) -> "ChartFrame":
        lo, hi = measures.bbox()
        return cls(tuple(0.5 * (lo + hi)), 0.5 * float(np.linalg.norm(hi - lo)))


# --------------------------------------------------------------------------
# Chart points
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Homothety:
    v: tuple


@dataclass(frozen=True)
class Axis:
    u: tuple
    alpha: float


@dataclass(frozen=True)
class Similarity:
    theta: float | Rotation
    reflected: bool
    v: tuple


@dataclass(frozen=True)
class Branch:
    base: Homothety | Similarity
    root_index: int


def _frame_matrix(rotation, reflected, d):
    if rotation is None:
        R = np.eye(d)
    elif isinstance(rotation, Rotation):
        R = rotation.matrix
    else:
        R = Rotation.from_angle(float(rotation)).matrix
    return R @ flip_matrix(d, reflected)


def _check_ball(V):
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms > 1 + NORM_SLACK):
        raise DomainError(f"chart point outside the unit ball (|v| = {norms.max():.6g})")
    return np.minimum(norms, 1.0)


def inner_center(v, frame: ChartFrame = ChartFrame()):
    """Centre (|v| / (2|v| - 1)) v for |v| < 1/2, in the chart frame."""
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    return frame.origin_vec(v.shape[-1]) + frame.unit * (r / (2 * r - 1)) * v


def interpolated_normal(n_u, u, alpha):
    """Unit vector moving from n(u) at alpha = 1/2 to -u at alpha = 1."""
    w = (2 - 2 * alpha)[..., None] * n_u + (1 - 2 * alpha)[..., None] * u
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def homothety_batch(cutter, mu0: Measure, V, frame_matrix=None,
                    frame: ChartFrame = ChartFrame()) -> PlacementBatch:
    """Placements of the ball chart for an (N, d) array of chart points.

    ``frame_matrix`` (rotation @ flip) turns the cutter first; identity gives
    the pure homothety chart.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    N, d = V.shape
    if d != mu0.dim or d != cutter.dim:
        raise DimensionMismatch("chart dimension differs from cutter or measure")
    M = np.eye(d) if frame_matrix is None else np.asarray(frame_matrix, dtype=float)
    norms = _check_ball(V)
    inner = norms < 0.5
    out = PlacementBatch.bodies(np.zeros((N, d)), np.ones(N), M)
    out = PlacementBatch(out.is_half.copy(), out.centers.copy(), out.scales.copy(),
                         np.array(out.frames), np.full(N, bool(np.linalg.det(M) < 0)),
                         out.normals.copy(), out.offsets.copy())
    ii = np.flatnonzero(inner)
    if ii.size:
        c = inner_center(V[ii], frame)
        out.centers[ii] = c
        out.scales[ii] = bisect_scales(cutter, mu0, c, M)
    oo = np.flatnonzero(~inner)
    if oo.size:
        alpha = norms[oo]
        u = V[oo] / alpha[:, None]
        n_u = np.array([M @ cutter.boundary_normal(M.T @ uu) for uu in u])
        n = interpolated_normal(n_u, u, alpha)
        # exact -u on the sphere keeps boundary antipodality bitwise
        n = np.where((alpha >= 1.0)[:, None], -u, n)
        out.is_half[oo] = True
        out.normals[oo] = n
        out.offsets[oo] = halfspace_offsets(mu0, n)
    return out


def axis_index(cutter) -> int:
    if isinstance(cutter, Cylinder):
        return cutter.axis
    if isinstance(cutter, AxisBox) and cutter.dim == 2:
        return 1
    raise ValueError("axis chart needs a Cylinder (d = 3) or a planar AxisBox")


def axis_rotations(cutter, U) -> np.ndarray:
    """Rotations taking the cutter axis to +-u; the sign is canonical so K(u) = K(-u)."""
    U = np.atleast_2d(U)
    d = U.shape[1]
    e = np.zeros(d)
    e[axis_index(cutter)] = 1.0
    sg = canonical_sign(U)
    return np.array([rotation_aligning(e, s * u) for s, u in zip(sg, U)])


def axis_batch(cutter, mu0: Measure, U, alpha, frame: ChartFrame = ChartFrame()) -> PlacementBatch:
    """Placements of the sphere-times-interval chart (direction u, position alpha)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    N, d = U.shape
    if d != cutter.dim or d != mu0.dim:
        raise DimensionMismatch("chart dimension differs from cutter or measure")
    axis_index(cutter)
    if any(abs(x) > 1e-12 for x in cutter.star_point):
        raise ValueError("axis chart needs the star point at the cutter's centre")
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (N,))
    if np.any((alpha < 0) | (alpha > 1)):
        raise DomainError("alpha must lie in [0, 1]")
    R = axis_rotations(cutter, U)
    out = PlacementBatch(np.zeros(N, bool), np.zeros((N, d)), np.ones(N), R,
                         np.zeros(N, bool), np.zeros((N, d)), np.zeros(N))
    bi = np.flatnonzero(alpha < 1)
    if bi.size:
        a = alpha[bi]
        c = frame.origin_vec(d) + frame.unit * (a / (1 - a))[:, None] * U[bi]
        out.centers[bi] = c
        out.scales[bi] = bisect_scales(cutter, mu0, c, R[bi])
    hi = np.flatnonzero(alpha >= 1)
    if hi.size:
        out.is_half[hi] = True
        out.normals[hi] = U[hi]
        out.offsets[hi] = halfspace_offsets(mu0, U[hi])
    return out


def residual_batch(measures: MeasureSet, cutter, batch: PlacementBatch) -> np.ndarray:
    """(N, d) normalised imbalances (mu_i(C) - mu_i(outside)) / mu_i(R^d), i = 1..d."""
    cols = [2.0 * masses(m, cutter, batch) / m.total - 1.0 for m in measures.measures[1:]]
    return np.stack(cols, axis=-1)


# --------------------------------------------------------------------------
# Scalar operations
# --------------------------------------------------------------------------

def homothety_chart(cutter, mu0: Measure, v, frame: ChartFrame = ChartFrame()):
    v = as_vec(v, mu0.dim)
    return homothety_batch(cutter, mu0, v[None, :], None, frame).placement(0)


def similarity_chart(cutter, mu0: Measure, theta, reflected: bool, v,
                     frame: ChartFrame = ChartFrame()):
    """Homothety chart applied to the cutter turned by ``theta`` (angle or Rotation)."""
    v = as_vec(v, mu0.dim)
    M = _frame_matrix(theta, reflected, mu0.dim)
    pl = homothety_batch(cutter, mu0, v[None, :], M, frame).placement(0)
    return pl


def axis_chart(cutter, mu0: Measure, u, alpha: float, frame: ChartFrame = ChartFrame()):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = np.array([math.cos(float(u)), math.sin(float(u))])
    u = as_vec(u, mu0.dim)
    if abs(np.linalg.norm(u) - 1) > 1e-9:
        raise DomainError("axis direction must be a unit vector")
    return axis_batch(cutter, mu0, u[None, :], np.array([float(alpha)]), frame).placement(0)


def residual(measures: MeasureSet, cutter, placement) -> np.ndarray:
    batch = PlacementBatch.from_placements([placement], measures.dim)
    return residual_batch(measures, cutter, batch)[0]


def chart_placement(cutter, measures: MeasureSet, point, frame: ChartFrame = ChartFrame()):
    """Placement for any ChartPoint variant."""
    mu0 = measures[0]
    if isinstance(point, Homothety):
        return homothety_chart(cutter, mu0, point.v, frame)
    if isinstance(point, Similarity):
        return similarity_chart(cutter, mu0, point.theta, point.reflected, point.v, frame)
    if isinstance(point, Axis):
        return axis_chart(cutter, mu0, point.u, point.alpha, frame)
    if isinstance(point, Branch):
        return branch_placement(cutter, mu0, point.base, point.root_index, frame)
    raise TypeError(f"unknown chart point {point!r}")


# --------------------------------------------------------------------------
# Non-star-shaped cutters: compactified scale and branches
# --------------------------------------------------------------------------

def phi(s, delta=DELTA):
    """Homeomorphism [0, inf] -> [-1 + delta, 1 - delta], phi(1) = 0."""
    s = np.asarray(s, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (1 - delta) * (s - 1) / (s + 1)
    return np.where(np.isinf(s), 1 - delta, out)


def phi_inv(x, delta=DELTA):
    y = np.asarray(x, dtype=float) / (1 - delta)
    with np.errstate(divide="ignore"):
        return np.where(y >= 1, np.inf, (1 + y) / (1 - y))


@dataclass(frozen=True)
class CompactifiedScale:
    """x -> g'(c, x) on [-1, 1] for one centre and rotation.

    On |x| <= 1 - delta the value is (1 - eps) g(c, phi^{-1}(x)); the end
    pieces interpolate linearly to -1 and +1, so interior values stay inside
    (-1, 1) even where the copy misses or swallows the whole support.
    """

    cutter: object
    mu0: Measure
    center: tuple
    rotation: Rotation | None = None
    delta: float = DELTA
    shrink: float = DELTA

    def g(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape)
        zero = s <= 0
        inf = np.isinf(s)
        mid = ~(zero | inf)
        out[zero] = -1.0
        out[inf] = 1.0
        if np.any(mid):
            out[mid] = scale_function(self.cutter, self.mu0, self.center, self.rotation, s[mid])
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1):
            raise DomainError("compactified scale is defined on [-1, 1]")
        lim = 1 - self.delta
        k = 1 - self.shrink
        xc = np.clip(x, -lim, lim)
        out = k * self.g(phi_inv(xc, self.delta))
        lo = x < -lim
        hi = x > lim
        t_lo = (x + 1) / self.delta          # 0 at -1, 1 at -lim
        t_hi = (1 - x) / self.delta          # 0 at +1, 1 at +lim
        out = np.where(lo, -1 + t_lo * (1 - k), out)
        out = np.where(hi, 1 - t_hi * (1 - k), out)
        return out


def compactified_scale(cutter, mu0: Measure, c, rot: Rotation | None = None,
                       delta: float = DELTA) -> CompactifiedScale:
    return CompactifiedScale(cutter, mu0, tuple(as_vec(c, mu0.dim)), rot, delta, delta)


def branch_roots(cutter, mu0, base, frame: ChartFrame = ChartFrame()):
    """Centre, frame matrix and scale roots for the base point of a Branch."""
    d = mu0.dim
    if isinstance(base, Similarity):
        M = _frame_matrix(base.theta, base.reflected, d)
        v = as_vec(base.v, d)
        rot = Rotation.from_matrix(M @ flip_matrix(d, base.reflected))
        refl = base.reflected
    else:
        M = np.eye(d)
        v = as_vec(base.v, d)
        rot, refl = None, False
    if np.linalg.norm(v) >= 0.5:
        return None, M, []
    c = inner_center(v, frame)
    return c, M, enumerate_scale_roots(cutter, mu0, c, rot, reflected=refl)


def branch_placement(cutter, mu0: Measure, base, j: int, frame: ChartFrame = ChartFrame()):
    """Placement on the j-th scale root over the base point (0-based index)."""
    c, M, roots = branch_roots(cutter, mu0, base, frame)
    if c is None:
        # beyond |v| = 1/2 every branch collapses onto the same half-space
        b = base if isinstance(base, Similarity) else Similarity(0.0, False, base.v)
        return similarity_chart(cutter, mu0, b.theta, b.reflected, b.v, frame)
    if not 0 <= j < len(roots):
        raise DomainError(f"branch {j} does not exist here ({len(roots)} scale roots)")
    batch = PlacementBatch.bodies(c[None, :], np.array([roots[j]]), M)
    batch.reflected = np.array([bool(np.linalg.det(M) < 0)])
    return batch.placement(0)
