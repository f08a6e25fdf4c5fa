"""Brute-force references: exhaustive placement grids and a Monte-Carlo mass estimate.

The grid search shares the mass primitive with the solver but none of the
chart or degree logic, so agreement between the two checks the search. The
Monte-Carlo estimate touches only point membership, so it checks the mass
primitive itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Body, HalfSpace, Rotation, boundary_distance, contains, flip_matrix
from .mass_eval import (PlacementBatch, bisect_scales, enumerate_scale_roots, halfspace_offsets)
from .measures import Measure, MeasureSet
from .parametrize import axis_index, axis_rotations, residual_batch

_BATCH = 4096


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution. ``n_c`` nodes per centre axis, ``n_theta`` rotations.

    ``lo``/``hi`` bound the centre box; when omitted the measures' bounding box
    grown by ``margin`` diameters on every side is used. ``n_s`` scales are
    only swept for cutters without a pinned scale (the axis chart's alpha).
    """

    n_c: int = 64
    n_theta: int = 64
    n_s: int = 64
    lo: tuple | None = None
    hi: tuple | None = None
    margin: float = 2.0
    reflections: bool = True

    def bounds(self, measures: MeasureSet):
        if self.lo is not None and self.hi is not None:
            return np.asarray(self.lo, float), np.asarray(self.hi, float)
        lo, hi = measures.bbox()
        diam = measures.diameter()
        return lo - self.margin * diam, hi + self.margin * diam

    def doubled(self) -> "GridSpec":
        return GridSpec(2 * self.n_c - 1, 2 * self.n_theta, 2 * self.n_s - 1, self.lo, self.hi,
                        self.margin, self.reflections)


@dataclass
class OracleResult:
    best_placement: object
    best_max_residual: float
    best_residual: np.ndarray
    spec: GridSpec
    evaluations: int


def _center_grid(spec: GridSpec, measures: MeasureSet):
    lo, hi = spec.bounds(measures)
    axes = [np.linspace(lo[i], hi[i], spec.n_c) for i in range(measures.dim)]
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(measures.dim, -1).T


def _rotation_grid(cutter, spec: GridSpec, d, mode):
    """List of frame matrices (rotation @ flip) searched in this mode."""
    if mode == "homothety":
        return [np.eye(d)]
    refl = [False]
    if spec.reflections and not cutter.reflection_symmetric:
        refl.append(True)
    out = []
    if d == 2:
        period = cutter.symmetry_period
        for r in refl:
            for k in range(spec.n_theta):
                out.append(Rotation.from_angle(period * k / spec.n_theta).matrix @ flip_matrix(2, r))
        return out
    # d = 3: deterministic quasi-uniform rotations from a Fibonacci axis grid and spins
    n_axis = max(1, int(round(spec.n_theta ** (2 / 3))))
    n_spin = max(1, spec.n_theta // n_axis)
    k = np.arange(n_axis) + 0.5
    z = 1 - 2 * k / n_axis
    ph = math.pi * (3 - math.sqrt(5)) * k
    axes = np.stack([np.sqrt(1 - z * z) * np.cos(ph), np.sqrt(1 - z * z) * np.sin(ph), z], 1)
    for r in refl:
        for a in axes:
            for j in range(n_spin):
                w = a * (2 * math.pi * j / n_spin)
                out.append(Rotation.from_rotvec(w).matrix @ flip_matrix(3, r))
    return out


def _bodies_for(cutter, mu0, centers, frame):
    """Placement batch for centres under one frame; one body per scale root."""
    if cutter.star_shaped:
        s = bisect_scales(cutter, mu0, centers, frame)
        return PlacementBatch.bodies(centers, s, frame,
                                     np.full(len(centers), np.linalg.det(frame) < 0))
    d = centers.shape[1]
    refl = bool(np.linalg.det(frame) < 0)
    rot = Rotation.from_matrix(frame @ flip_matrix(d, refl))
    cs, ss = [], []
    for c in centers:
        for t in enumerate_scale_roots(cutter, mu0, c, rot, reflected=refl):
            cs.append(c)
            ss.append(t)
    if not cs:
        return None
    return PlacementBatch.bodies(np.array(cs), np.array(ss), frame, np.full(len(cs), refl))


def grid_search(measures: MeasureSet, cutter, mode: str = "homothety",
                spec: GridSpec | None = None) -> OracleResult:
    """Exhaustive search for the placement minimising the max-norm residual.

    Homothety and similarity modes sweep centres (``n_c`` per axis) and, for
    similarity, ``n_theta`` rotations (times reflection for asymmetric
    cutters); the scale is pinned by the bisecting-scale rule, or every scale
    root is tried for cutters that are not star-shaped. Axis mode sweeps
    ``n_theta`` directions and ``n_s`` positions along them. Only genuine
    copies are searched, never half-spaces.
    """
    spec = spec or GridSpec()
    mu0 = measures[0]
    d = measures.dim
    best = (math.inf, None, None)
    evals = 0

    def consider(batch):
        nonlocal best, evals
        if batch is None or len(batch) == 0:
            return
        r = residual_batch(measures, cutter, batch)
        evals += len(batch)
        sc = np.max(np.abs(r), axis=1)
        i = int(np.argmin(sc))
        if sc[i] < best[0]:
            best = (float(sc[i]), batch.placement(i), r[i])

    if mode == "axis":
        axis_index(cutter)
        if d == 2:
            th = 2 * math.pi * np.arange(spec.n_theta) / spec.n_theta
            U = np.stack([np.cos(th), np.sin(th)], 1)
        else:
            k = np.arange(spec.n_theta) + 0.5
            z = 1 - 2 * k / spec.n_theta
            ph = math.pi * (3 - math.sqrt(5)) * k
            U = np.stack([np.sqrt(1 - z * z) * np.cos(ph), np.sqrt(1 - z * z) * np.sin(ph), z], 1)
        lo, hi = spec.bounds(measures)
        origin = 0.5 * (lo + hi)
        reach = 0.5 * float(np.linalg.norm(hi - lo))
        R = axis_rotations(cutter, U)
        for t in np.linspace(0.0, reach, spec.n_s):
            centers = origin + t * U
            consider(PlacementBatch.bodies(centers, bisect_scales(cutter, mu0, centers, R), R))
    elif mode in ("homothety", "similarity"):
        grid = _center_grid(spec, measures)
        for frame in _rotation_grid(cutter, spec, d, mode):
            for s in range(0, len(grid), _BATCH):
                consider(_bodies_for(cutter, mu0, grid[s:s + _BATCH], frame))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return OracleResult(best[1], best[0], best[2], spec, evals)


# --------------------------------------------------------------------------
# Monte-Carlo mass
# --------------------------------------------------------------------------

def mc_mass(measure: Measure, cutter, placement, n_samples: int = 10_000_000,
            rng=None, chunk: int = 2_000_000) -> float:
    """Stratified Monte-Carlo estimate of the measure's mass inside a placement.

    Samples are allotted to kernels in proportion to their weight, exactly as
    plain sampling of ``n_samples`` points would in expectation. Kernels whose
    centre lies farther from the boundary than their circumradius are wholly
    on one side and are counted exactly instead of sampled.
    """
    rng = rng or np.random.default_rng(0)
    d = measure.dim
    C, W, Rk = measure.centers, measure.weights, measure.radii
    dist = boundary_distance(cutter, placement, C)
    inside = np.asarray(contains(cutter, placement, C), dtype=bool)
    sure = dist > Rk * math.sqrt(d) * (1 + 1e-9)
    total = float(np.sum(W[sure & inside]))
    todo = np.flatnonzero(~sure)
    if todo.size == 0:
        return total
    counts = np.maximum(1, np.round(n_samples * W[todo] / measure.total).astype(int))
    for j, n in zip(todo, counts):
        hits = 0
        left = int(n)
        while left > 0:
            m = min(left, chunk)
            pts = C[j] + Rk[j] * rng.uniform(-1.0, 1.0, (m, d))
            hits += int(np.count_nonzero(contains(cutter, placement, pts)))
            left -= m
        total += W[j] * hits / n
    return total


def mc_residual(measures: MeasureSet, cutter, placement, n_samples: int = 10_000_000,
                rng=None) -> np.ndarray:
    rng = rng or np.random.default_rng(0)
    return np.array([2.0 * mc_mass(m, cutter, placement, n_samples, rng) / m.total - 1.0
                     for m in measures.measures[1:]])
