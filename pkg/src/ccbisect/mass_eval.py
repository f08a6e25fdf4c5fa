"""Mass of placed cutters, midpoint-rule bisecting scales and scale roots."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import overlap
from .errors import DimensionMismatch, NoBracket
from .geometry import (AxisBox, Body, Cylinder, Disk, HalfSpace, PolygonRegion,
                       Rotation, StarPolygon, flip_matrix)
from .measures import Measure

# Relative bisection tolerance on scales and offsets.
SCALE_RTOL = 1e-10
# Mass differences below this fraction of the total count as "exactly half".
MASS_TIE = 1e-12
MAX_DOUBLINGS = 200
# Upper bound on elements of one broadcast temporary.
_CHUNK = 400_000


@dataclass
class PlacementBatch:
    """Struct-of-arrays form of many placements of one cutter."""

    is_half: np.ndarray      # (B,) bool
    centers: np.ndarray      # (B, d)
    scales: np.ndarray       # (B,)
    frames: np.ndarray       # (B, d, d) rotation @ flip
    reflected: np.ndarray    # (B,) bool
    normals: np.ndarray      # (B, d)
    offsets: np.ndarray      # (B,)

    def __len__(self):
        return self.is_half.shape[0]

    @property
    def dim(self):
        return self.centers.shape[1]

    @classmethod
    def bodies(cls, centers, scales, frames, reflected=None):
        centers = np.asarray(centers, dtype=float)
        B, d = centers.shape
        frames = np.broadcast_to(np.asarray(frames, dtype=float), (B, d, d))
        refl = np.zeros(B, bool) if reflected is None else np.broadcast_to(reflected, (B,))
        return cls(np.zeros(B, bool), centers, np.broadcast_to(np.asarray(scales, float), (B,)),
                   frames, np.asarray(refl, bool), np.zeros((B, d)), np.zeros(B))

    @classmethod
    def halfspaces(cls, normals, offsets):
        normals = np.asarray(normals, dtype=float)
        B, d = normals.shape
        return cls(np.ones(B, bool), np.zeros((B, d)), np.ones(B),
                   np.broadcast_to(np.eye(d), (B, d, d)), np.zeros(B, bool),
                   normals, np.broadcast_to(np.asarray(offsets, float), (B,)))

    @classmethod
    def from_placements(cls, placements, d):
        B = len(placements)
        out = cls(np.zeros(B, bool), np.zeros((B, d)), np.ones(B),
                  np.tile(np.eye(d), (B, 1, 1)), np.zeros(B, bool), np.zeros((B, d)), np.zeros(B))
        for i, pl in enumerate(placements):
            if pl.dim != d:
                raise DimensionMismatch("placement dimension differs from measure dimension")
            if isinstance(pl, HalfSpace):
                out.is_half[i] = True
                out.normals[i] = pl.normal
                out.offsets[i] = pl.offset
            else:
                out.centers[i] = pl.center
                out.scales[i] = pl.scale
                out.frames[i] = pl.rotation.matrix @ flip_matrix(d, pl.reflected)
                out.reflected[i] = pl.reflected
        return out

    @staticmethod
    def concat(batches):
        return PlacementBatch(*(np.concatenate([getattr(b, f) for b in batches])
                                for f in ("is_half", "centers", "scales", "frames",
                                          "reflected", "normals", "offsets")))

    def take(self, idx):
        return PlacementBatch(self.is_half[idx], self.centers[idx], self.scales[idx],
                              self.frames[idx], self.reflected[idx], self.normals[idx],
                              self.offsets[idx])

    def placement(self, i):
        if self.is_half[i]:
            return HalfSpace(tuple(self.normals[i]), float(self.offsets[i]))
        F = flip_matrix(self.dim, bool(self.reflected[i]))
        rot = Rotation.from_matrix(self.frames[i] @ F)
        return Body(tuple(self.centers[i]), float(self.scales[i]), rot, bool(self.reflected[i]))


def canonical_sign(normals) -> np.ndarray:
    """+1/-1 per row so that sign * n has its first non-zero coordinate positive."""
    n = np.asarray(normals, dtype=float)
    idx = np.argmax(n != 0, axis=-1)
    lead = np.take_along_axis(n, idx[..., None], axis=-1)[..., 0]
    return np.where(lead < 0, -1.0, 1.0)


def _halfspace_fractions(normals, offsets, kc, kr):
    sgn = canonical_sign(normals)
    f = overlap.halfspace_cube_fraction((sgn[:, None] * normals)[:, None, :],
                                        (sgn * offsets)[:, None], kc[None], kr[None])
    return np.where(sgn[:, None] > 0, f, 1.0 - f)


def _polygon_edges(cutter):
    rings = cutter.rings()
    a = np.concatenate(rings) - cutter.p
    b = np.concatenate([np.roll(r, -1, axis=0) for r in rings]) - cutter.p
    return a, b


def _body_fractions(cutter, centers, scales, frames, kc, kr):
    d = centers.shape[1]
    if d != cutter.dim:
        raise DimensionMismatch("cutter and measure dimensions differ")
    lin = scales[:, None, None] * frames
    if d == 2 and isinstance(cutter, Disk):
        wc = centers - np.einsum("bij,j->bi", lin, cutter.p)
        R = scales * cutter.radius
        area = overlap.disk_box_area(wc[:, 0:1], wc[:, 1:2], R[:, None],
                                     (kc[:, 0] - kr)[None], (kc[:, 1] - kr)[None],
                                     (kc[:, 0] + kr)[None], (kc[:, 1] + kr)[None])
        return area / (4.0 * kr * kr)[None]
    if d == 2 and isinstance(cutter, (AxisBox, StarPolygon, PolygonRegion)):
        a, b = _polygon_edges(cutter)
        wa = centers[:, None, :] + np.einsum("bij,ej->bei", lin, a)
        wb = centers[:, None, :] + np.einsum("bij,ej->bei", lin, b)
        orient = np.sign(np.linalg.det(frames))[:, None]
        area = overlap.polygon_box_area(
            wa[:, None, :, 0], wa[:, None, :, 1], wb[:, None, :, 0], wb[:, None, :, 1],
            (kc[:, 0] - kr)[None], (kc[:, 1] - kr)[None], (kc[:, 0] + kr)[None], (kc[:, 1] + kr)[None])
        return np.clip(orient * area / (4.0 * kr * kr)[None], 0.0, 1.0)
    if d == 3:
        body_centers = centers - np.einsum("bij,j->bi", lin, cutter.p)
        if isinstance(cutter, Disk):
            return overlap.ball_cube_fraction(body_centers, scales * cutter.radius, kc, kr)
        if isinstance(cutter, Cylinder):
            axes = frames[:, :, cutter.axis]
            return overlap.cylinder_cube_fraction(body_centers, axes, scales * cutter.radius,
                                                  scales * cutter.half_height, kc, kr)
        if not isinstance(cutter, AxisBox):
            raise DimensionMismatch(f"{type(cutter).__name__} is not available in R^3")
        shape = ("box", cutter.half_extents)
        inv = np.linalg.inv(lin)
        off = cutter.p[None, :] - np.einsum("bij,bj->bi", inv, centers)
        return overlap.convex_cube_fraction(shape, inv, off, kc, kr)
    raise DimensionMismatch(f"{type(cutter).__name__} is not available in R^{d}")


def _per_item_cost(cutter, d):
    if d == 3:
        if isinstance(cutter, Cylinder):
            return 40
        if isinstance(cutter, Disk):
            return 20
        return overlap.CHORD_NODES ** 2 * 4
    if isinstance(cutter, Disk):
        return 60
    return 4 * sum(len(r) for r in cutter.rings()) + 4


def fraction_matrix(cutter, batch: PlacementBatch, kc, kr) -> np.ndarray:
    """(B, K) covered fraction of every kernel box under every placement."""
    B = len(batch)
    K = kc.shape[0]
    out = np.empty((B, K))
    hs = np.flatnonzero(batch.is_half)
    bd = np.flatnonzero(~batch.is_half)
    if hs.size:
        out[hs] = _halfspace_fractions(batch.normals[hs], batch.offsets[hs], kc, kr)
    if bd.size:
        step = max(1, _CHUNK // max(1, K * _per_item_cost(cutter, batch.dim)))
        for s in range(0, bd.size, step):
            idx = bd[s:s + step]
            out[idx] = _body_fractions(cutter, batch.centers[idx], batch.scales[idx],
                                       batch.frames[idx], kc, kr)
    return out


def masses(measure: Measure, cutter, batch: PlacementBatch) -> np.ndarray:
    """Mass of ``measure`` inside each placement of the batch."""
    if batch.dim != measure.dim:
        raise DimensionMismatch("placement and measure dimensions differ")
    if len(batch) == 0:
        return np.zeros(0)
    return fraction_matrix(cutter, batch, measure.centers, measure.radii) @ measure.weights


def mass_in(measure: Measure, cutter, placement) -> float:
    """Mass of ``measure`` inside one placed cutter (or half-space)."""
    batch = PlacementBatch.from_placements([placement], measure.dim)
    return float(masses(measure, cutter, batch)[0])


# --------------------------------------------------------------------------
# Bracketed root finding (vectorised Illinois with bisection safeguard)
# --------------------------------------------------------------------------

def _illinois(func, lo, hi, flo, fhi, rtol, log_space, max_iter=300):
    """Shrink brackets [lo, hi] with func(lo) < 0 <= func(hi) for every row.

    ``func(idx, x)`` evaluates rows ``idx`` at abscissae ``x``. Returns the
    final (lo, hi). Widths are measured in log space when ``log_space``.
    """
    a = np.log(lo) if log_space else np.array(lo, dtype=float)
    b = np.log(hi) if log_space else np.array(hi, dtype=float)
    fa = np.array(flo, dtype=float)
    fb = np.array(fhi, dtype=float)
    last = np.zeros(a.shape, dtype=int)  # +1 if b moved last, -1 if a moved last
    scale = np.maximum(np.abs(a), np.abs(b)) if not log_space else np.ones_like(a)
    scale = np.where(scale > 0, scale, 1.0)
    prev_w = b - a
    for it in range(max_iter):
        w = b - a
        active = np.flatnonzero(w > rtol * (scale if not log_space else 1.0))
        if active.size == 0:
            break
        aa, bb, ffa, ffb = a[active], b[active], fa[active], fb[active]
        den = ffb - ffa
        z = np.where(den != 0, bb - ffb * (bb - aa) / np.where(den != 0, den, 1.0), 0.5 * (aa + bb))
        wa = bb - aa
        stalled = (wa > 0.5 * prev_w[active]) & (it % 3 == 2)
        bad = ~np.isfinite(z) | stalled
        z = np.where(bad, 0.5 * (aa + bb), z)
        # a secant point hugging an endpoint is nudged inward by a fraction of
        # the tolerance, so the next evaluation usually closes the bracket
        nudge = np.minimum(0.4 * rtol * (scale[active] if not log_space else 1.0), 0.25 * wa)
        z = np.clip(z, aa + nudge, bb - nudge)
        if it % 3 == 2:
            prev_w[active] = wa
        fz = func(active, np.exp(z) if log_space else z)
        up = fz >= 0
        ia = active[~up]
        ib = active[up]
        # Illinois: halve the stale endpoint value when one side repeats
        rep_b = ib[last[ib] == 1]
        fa[rep_b] *= 0.5
        rep_a = ia[last[ia] == -1]
        fb[rep_a] *= 0.5
        b[ib] = z[up]
        fb[ib] = fz[up]
        last[ib] = 1
        a[ia] = z[~up]
        fa[ia] = fz[~up]
        last[ia] = -1
    if log_space:
        return np.exp(a), np.exp(b)
    return a, b


def _scale_bounds(cutter, measure, centers):
    """(s_hit, s_cover): below s_hit the copy misses the support, above s_cover it covers it."""
    rin, rout = cutter.radial_extent()
    lo, hi = measure.bbox()
    gap = np.maximum(np.maximum(lo - centers, centers - hi), 0.0)
    dist_near = np.linalg.norm(gap, axis=1)
    far = np.maximum(np.abs(centers - lo), np.abs(centers - hi))
    dist_far = np.linalg.norm(far, axis=1)
    s_cover = dist_far / rin * (1 + 1e-9) + 1e-300
    s_hit = dist_near / rout * (1 - 1e-9)
    return s_hit, s_cover


def bisect_scales(cutter, measure: Measure, centers, frames, rtol=SCALE_RTOL):
    """Midpoint-rule bisecting scale for each centre (batched form of bisect_scale)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    B, d = centers.shape
    frames = np.broadcast_to(np.asarray(frames, dtype=float), (B, d, d))
    T = measure.total
    half = 0.5 * T
    tie = MASS_TIE * T
    s_hit, s_cover = _scale_bounds(cutter, measure, centers)

    # rows 0..B-1 search s_min (f + tie), rows B..2B-1 search s_max (f - tie)
    shift = np.concatenate([np.full(B, tie), np.full(B, -tie)])
    cen2 = np.concatenate([centers, centers])
    fr2 = np.concatenate([frames, frames])

    def f(idx, s):
        batch = PlacementBatch.bodies(cen2[idx], s, fr2[idx])
        return masses(measure, cutter, batch) - half + shift[idx]

    hi = np.concatenate([s_cover, s_cover])
    fhi = np.full(2 * B, half) + shift
    lo = np.concatenate([s_hit, s_hit])
    flo = np.full(2 * B, -half) + shift
    need = np.flatnonzero(lo <= 0)
    if need.size:
        lo[need] = hi[need] * 2.0 ** -8
        flo[need] = f(need, lo[need])
        doublings = 8
        bad = need[flo[need] >= 0]
        while bad.size:
            doublings += 8
            if doublings > MAX_DOUBLINGS:
                raise NoBracket(f"no bisecting scale bracket after {MAX_DOUBLINGS} doublings")
            lo[bad] *= 2.0 ** -8
            flo[bad] = f(bad, lo[bad])
            bad = bad[flo[bad] >= 0]
    a, b = _illinois(f, lo, hi, flo, fhi, rtol, log_space=True)
    ends = 0.5 * (a + b)
    return 0.5 * (ends[:B] + ends[B:])


def bisect_scale(cutter, mu0: Measure, c, rot: Rotation | None = None, reflected=False) -> float:
    """Midpoint of the interval of scales s with mu0(C(c, s)) = mu0(R^d) / 2."""
    c = np.asarray(c, dtype=float)
    d = c.size
    if d != mu0.dim:
        raise DimensionMismatch("centre and measure dimensions differ")
    if not np.all(np.isfinite(c)):
        raise ValueError("centre must be finite")
    R = np.eye(d) if rot is None else rot.matrix
    frame = R @ flip_matrix(d, reflected)
    return float(bisect_scales(cutter, mu0, c[None, :], frame[None])[0])


def halfspace_offsets(measure: Measure, normals, rtol=SCALE_RTOL) -> np.ndarray:
    """Midpoint-rule offsets o with measure({<x, n> >= o}) = total / 2.

    Offsets are solved for the canonical orientation of each normal and negated
    for the opposite one, so antipodal normals get the same boundary hyperplane.
    """
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    B, d = normals.shape
    sgn = canonical_sign(normals)
    nc = sgn[:, None] * normals
    T = measure.total
    half = 0.5 * T
    tie = MASS_TIE * T
    corners = measure.corners()
    proj = nc @ corners.T
    span = np.max(proj, axis=1) - np.min(proj, axis=1)
    lo1 = np.min(proj, axis=1) - 1e-9 * span - 1e-300
    hi1 = np.max(proj, axis=1) + 1e-9 * span + 1e-300
    shift = np.concatenate([np.full(B, tie), np.full(B, -tie)])
    n2 = np.concatenate([nc, nc])

    def g(idx, o):
        batch = PlacementBatch.halfspaces(n2[idx], o)
        return half - masses(measure, None, batch) + shift[idx]

    lo = np.concatenate([lo1, lo1])
    hi = np.concatenate([hi1, hi1])
    a, b = _illinois(g, lo, hi, -half + shift, half + shift, rtol, log_space=False)
    ends = 0.5 * (a + b)
    return sgn * 0.5 * (ends[:B] + ends[B:])


def halfspace_offset(measure: Measure, normal) -> float:
    return float(halfspace_offsets(measure, np.asarray(normal, dtype=float)[None, :])[0])


# --------------------------------------------------------------------------
# Scale profiles and scale roots
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleProfile:
    """Samples (s, g(s)) of the normalised scale function at one centre/rotation."""

    center: tuple
    rotation: Rotation
    samples: tuple


def scale_function(cutter, mu0: Measure, c, rot: Rotation | None, scales, reflected=False):
    """g(c, s) = (2 mu0(C(c, s)) - T) / T for an array of scales."""
    c = np.asarray(c, dtype=float)
    d = c.size
    R = np.eye(d) if rot is None else rot.matrix
    scales = np.asarray(scales, dtype=float)
    batch = PlacementBatch.bodies(np.broadcast_to(c, (scales.size, d)), scales.ravel(),
                                  R @ flip_matrix(d, reflected))
    m = masses(mu0, cutter, batch)
    return np.clip(2.0 * m / mu0.total - 1.0, -1.0, 1.0).reshape(scales.shape)


def scale_profile(cutter, mu0, c, rot=None, scales=None, n=64) -> ScaleProfile:
    c = np.asarray(c, dtype=float)
    if scales is None:
        s_hit, s_cover = _scale_bounds(cutter, mu0, c[None, :])
        lo = s_hit[0] if s_hit[0] > 0 else s_cover[0] * 2.0 ** -20
        scales = np.geomspace(lo, s_cover[0], n)
    g = scale_function(cutter, mu0, c, rot, scales)
    rot = rot or Rotation.identity(c.size)
    return ScaleProfile(tuple(c), rot, tuple(zip(map(float, scales), map(float, g))))


def scan_bounds(cutter, mu0, centers):
    """Scan range (s_hit / 64, s_cover * 64) per centre used for root enumeration."""
    s_hit, s_cover = _scale_bounds(cutter, mu0, np.atleast_2d(centers))
    floor = s_cover * 2.0 ** -30
    return np.maximum(s_hit, floor) / 64.0, s_cover * 64.0


def enumerate_scale_roots(cutter, mu0: Measure, c, rot: Rotation | None = None,
                          s_max: float | None = None, n_scan: int = 512,
                          reflected=False) -> list[float]:
    """All sign changes of s -> g(c, s) found on a log-spaced scan, refined by bisection.

    Works for any compact cutter. Tangential zeros without a sign change are
    not reported.
    """
    c = np.asarray(c, dtype=float)
    lo, hi = scan_bounds(cutter, mu0, c[None, :])
    hi = hi[0] if s_max is None else float(s_max)
    grid = np.geomspace(lo[0], hi, n_scan)
    g = scale_function(cutter, mu0, c, rot, grid, reflected)
    pos = g > 0
    flips = np.flatnonzero(pos[1:] != pos[:-1])
    if flips.size == 0:
        return []
    a = grid[flips]
    b = grid[flips + 1]
    ga = g[flips]
    gb = g[flips + 1]
    # orient every bracket so that the function is increasing through it
    sgn = np.where(ga <= 0, 1.0, -1.0)
    d = c.size
    R = np.eye(d) if rot is None else rot.matrix
    frame = R @ flip_matrix(d, reflected)

    def f(idx, s):
        batch = PlacementBatch.bodies(np.broadcast_to(c, (len(idx), d)), s, frame)
        return sgn[idx] * (2.0 * masses(mu0, cutter, batch) / mu0.total - 1.0)

    # g > 0 is the "up" side in both orientations after the sign flip
    fa, fb = sgn * ga, sgn * gb
    fa = np.where(fa > 0, -0.0, fa)
    lo_, hi_ = _illinois(f, a, b, np.minimum(fa, -1e-300), fb, 1e-12, log_space=True)
    return sorted(float(x) for x in 0.5 * (lo_ + hi_))
