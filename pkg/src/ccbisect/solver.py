"""Top-level solve: choose a chart for the mode and cutter, then find a zero of its residual."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import AmbiguousWinding, DimensionMismatch, NoZeroFound
from .geometry import AxisBox, Cylinder, Disk, Rotation, flip_matrix, rotation_from_rotvec
from .mass_eval import PlacementBatch
from .measures import MeasureSet
from .parametrize import (Axis, Branch, ChartFrame, Homothety, Similarity, axis_batch,
                          axis_index, branch_roots, homothety_batch, residual, residual_batch)
from .zerofind import SolveReport, damped_newton, multistart_solve, subdivide_solve

MODES = ("homothety", "axis", "similarity")
# Finite-difference step for 3D Newton: well above the slice-quadrature noise (~1e-5).
STEP_3D = 1e-3


@dataclass
class SolverConfig:
    tol: float = 1e-6
    max_depth: int = 12
    seed: int = 0
    n_theta: int = 16
    reflections: bool = True
    max_active: int = 8

    def __post_init__(self):
        if not 0 < self.tol < 0.1:
            raise ValueError("tol must lie in (0, 0.1)")
        if not 0 <= self.max_depth <= 20:
            raise ValueError("max depth must lie in [0, 20]")


@dataclass
class BisectionResult:
    placement: object
    residuals: np.ndarray
    chart: str
    chart_point: object
    report: SolveReport
    mode: str
    elapsed: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------

def _clamp_ball(V):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = np.linalg.norm(V, axis=1, keepdims=True)
    return np.where(n > 1, V / np.maximum(n, 1e-300), V)


def _project_ball(v):
    n = np.linalg.norm(v)
    return v / n if n > 1 else v


def _ball_grid(d, n):
    g = np.linspace(-1, 1, n)
    pts = np.array(np.meshgrid(*([g] * d), indexing="ij")).reshape(d, -1).T
    return pts[np.linalg.norm(pts, axis=1) <= 1 + 1e-12]


def _sphere_points(n, d):
    if d == 2:
        a = 2 * math.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = math.pi * (3 - math.sqrt(5)) * k
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _score(vals):
    return np.max(np.abs(np.atleast_2d(vals)), axis=1)


def _least_squares_fallback(F, x0, lo, hi, tol, post=None):
    """Residual-norm descent when Newton stalls (no certificate)."""
    def fun(x):
        return F(x[None, :])[0]
    res = least_squares(fun, np.clip(x0, lo, hi), bounds=(lo, hi), diff_step=1e-6,
                        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=400)
    x = res.x if post is None else post(res.x)
    val = F(x[None, :])[0]
    return x, val, float(np.max(np.abs(val)))


# --------------------------------------------------------------------------
# Strategies
# --------------------------------------------------------------------------

def _homothety_map(measures, cutter, frame, frame_matrix=None):
    mu0 = measures[0]

    def F(V):
        b = homothety_batch(cutter, mu0, _clamp_ball(V), frame_matrix, frame)
        return residual_batch(measures, cutter, b)
    return F


def _solve_homothety(measures, cutter, cfg, frame, frame_matrix=None, max_active=None):
    d = measures.dim
    F = _homothety_map(measures, cutter, frame, frame_matrix)
    if d == 2:
        grid = _ball_grid(2, 9)
        vals = F(grid)
        seeds = grid[np.argsort(_score(vals))[:3]]
        rep = subdivide_solve(F, (-1.0, -1.0, 1.0, 1.0), cfg.tol, cfg.max_depth,
                              project=_project_ball, seeds=seeds,
                              rng=np.random.default_rng(cfg.seed),
                              max_active=max_active or cfg.max_active)
        return rep, _clamp_ball(rep.zero)[0]
    starts = _ball_grid(3, 13)
    try:
        rep = multistart_solve(F, starts, cfg.tol, project=_project_ball, step=STEP_3D)
        return rep, rep.zero
    except NoZeroFound as exc:
        x0 = np.asarray(exc.diagnostics.get("best_point", np.zeros(3)))
        x, val, nrm = _least_squares_fallback(F, x0, -np.ones(3), np.ones(3), cfg.tol,
                                              post=_project_ball)
        if nrm <= cfg.tol:
            return SolveReport(x, val, nrm, [], exc.diagnostics.get("evaluations", 0), 0), x
        exc.diagnostics["best_norm"] = min(nrm, exc.diagnostics.get("best_norm", math.inf))
        raise


def _axis_map_2d(measures, cutter, frame):
    mu0 = measures[0]

    def F(X):
        X = np.atleast_2d(X)
        th = 2 * math.pi * X[:, 0]
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
        a = np.clip(X[:, 1], 0.0, 1.0)
        return residual_batch(measures, cutter, axis_batch(cutter, mu0, U, a, frame))
    return F


def _axis_map_3d(measures, cutter, frame):
    mu0 = measures[0]

    def F(X):
        X = np.atleast_2d(X)
        W = X[:, :3]
        n = np.linalg.norm(W, axis=1, keepdims=True)
        U = W / np.maximum(n, 1e-300)
        a = np.clip(X[:, 3], 0.0, 1.0)
        return residual_batch(measures, cutter, axis_batch(cutter, mu0, U, a, frame))
    return F


def _solve_axis(measures, cutter, cfg, frame):
    d = measures.dim
    if d == 2:
        F = _axis_map_2d(measures, cutter, frame)
        gx, gy = np.meshgrid((np.arange(16) + 0.5) / 16, np.linspace(0.05, 0.95, 10), indexing="ij")
        grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
        seeds = grid[np.argsort(_score(F(grid)))[:3]]

        def project(x):
            return np.array([x[0] % 1.0, min(max(x[1], 0.0), 1.0)])
        rep = subdivide_solve(F, (0.0, 0.0, 1.0, 1.0), cfg.tol, cfg.max_depth, project=project,
                              seeds=seeds, rng=np.random.default_rng(cfg.seed),
                              max_active=cfg.max_active)
        x = project(rep.zero)
        th = 2 * math.pi * x[0]
        return rep, (np.array([math.cos(th), math.sin(th)]), float(x[1]))
    F = _axis_map_3d(measures, cutter, frame)
    U = _sphere_points(96, 3)
    alphas = np.linspace(0.0, 0.9, 10)
    starts = np.array([[*u, a] for u in U for a in alphas])

    def project(x):
        w = x[:3] / max(np.linalg.norm(x[:3]), 1e-300)
        return np.array([*w, min(max(x[3], 0.0), 1.0)])
    try:
        rep = multistart_solve(F, starts, cfg.tol, project=project, n_best=16, neighbours=16,
                               step=STEP_3D)
    except NoZeroFound as exc:
        x0 = np.asarray(exc.diagnostics.get("best_point", starts[0]))
        x, val, nrm = _least_squares_fallback(F, x0, np.array([-2, -2, -2, 0.0]),
                                              np.array([2, 2, 2, 1.0]), cfg.tol, post=project)
        if nrm > cfg.tol:
            exc.diagnostics["best_norm"] = min(nrm, exc.diagnostics.get("best_norm", math.inf))
            raise
        rep = SolveReport(x, val, nrm, [], exc.diagnostics.get("evaluations", 0), 0)
    x = project(rep.zero)
    return rep, (x[:3], float(x[3]))


def _frame_matrices(cutter, cfg, d):
    """Rotation grid (times optional reflection) for the similarity scan."""
    refl = [False] if (cutter.reflection_symmetric or not cfg.reflections) else [False, True]
    out = []
    if d == 2:
        period = cutter.symmetry_period
        for r in refl:
            for k in range(cfg.n_theta):
                th = period * k / cfg.n_theta
                out.append((th, r, Rotation.from_angle(th).matrix @ flip_matrix(2, r)))
        return out
    rng = np.random.default_rng(cfg.seed)
    for r in refl:
        out.append((Rotation.identity(3), r, flip_matrix(3, r)))
        for _ in range(cfg.n_theta - 1):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            w, x, y, z = q
            R = np.array([[1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                          [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                          [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)]])
            out.append((Rotation.from_matrix(R), r, R @ flip_matrix(3, r)))
    return out


def _rotation_of(d, base, extra):
    """Compose a base frame rotation with a small extra rotation parameter."""
    if d == 2:
        return Rotation.from_angle(float(base) + float(extra[0])).matrix
    return rotation_from_rotvec(extra) @ base.matrix


def _solve_similarity(measures, cutter, cfg, frame, notes):
    d = measures.dim
    mu0 = measures[0]
    if isinstance(cutter, Disk):
        notes.append("rotations act trivially on a disk; solved in the homothety chart")
        rep, v = _solve_homothety(measures, cutter, cfg, frame)
        return rep, Similarity(0.0, False, tuple(v)), np.eye(d)
    if d == 2 and isinstance(cutter, AxisBox):
        try:
            rep, (u, a) = _solve_axis(measures, cutter, cfg, frame)
            notes.append("solved in the axis chart (rotating box, centre along the axis)")
            return rep, Axis(tuple(u), a), None
        except (NoZeroFound, AmbiguousWinding) as exc:
            notes.append(f"axis chart failed: {exc}")

    frames = _frame_matrices(cutter, cfg, d)
    grid = _ball_grid(d, 9 if d == 2 else 5)
    n_rot = 1 if d == 2 else 3
    scored = []
    for k, (rot, refl, M) in enumerate(frames):
        vals = _homothety_map(measures, cutter, frame, M)(grid)
        sc = _score(vals)
        j = int(np.argmin(sc))
        scored.append((float(sc[j]), k, grid[j]))
    scored.sort(key=lambda t: t[0])

    # joint Newton over (rotation, v) from the best frames
    best = None
    for _, k, v0 in scored[:8]:
        rot, refl, _ = frames[k]
        F_ref = flip_matrix(d, refl)

        def F(X, rot=rot, F_ref=F_ref):
            X = np.atleast_2d(X)
            out = []
            for x in X:
                M = _rotation_of(d, rot, x[:n_rot]) @ F_ref
                b = homothety_batch(cutter, mu0, _clamp_ball(x[n_rot:]), M, frame)
                out.append(residual_batch(measures, cutter, b)[0])
            return np.array(out)

        def project(x):
            return np.concatenate([x[:n_rot], _project_ball(x[n_rot:])])
        res = damped_newton(F, np.concatenate([np.zeros(n_rot), v0]), cfg.tol, project)
        if best is None or res.norm < best[0].norm:
            best = (res, rot, refl)
        if res.norm <= cfg.tol:
            break
    if best is not None and best[0].norm <= cfg.tol:
        res, rot, refl = best
        rep = SolveReport(res.x, res.value, res.norm, [], 0, 0)
        Rm = _rotation_of(d, rot, res.x[:n_rot])
        theta = math.atan2(Rm[1, 0], Rm[0, 0]) % (2 * math.pi) if d == 2 else Rotation.from_matrix(Rm)
        v = _clamp_ball(res.x[n_rot:])[0]
        return rep, Similarity(theta, refl, tuple(v)), Rm @ flip_matrix(d, refl)

    if d == 2:
        for _, k, _ in scored[:6]:
            rot, refl, M = frames[k]
            try:
                rep, v = _solve_homothety(measures, cutter, cfg, frame, M, max_active=4)
                return rep, Similarity(rot, refl, tuple(v)), M
            except (NoZeroFound, AmbiguousWinding) as exc:
                notes.append(f"theta={rot:.4f} reflected={refl}: {exc}")
    diag = {"best_norm": best[0].norm if best else None, "notes": list(notes)}
    raise NoZeroFound("no similar copy found below tolerance", diagnostics=diag)


def _solve_branches(measures, cutter, cfg, frame, notes):
    """Non-star cutters: Newton on each scale-root branch over the inner chart."""
    mu0 = measures[0]
    d = measures.dim

    def placement_for(v, j):
        c, M, roots = branch_roots(cutter, mu0, Homothety(tuple(v)), frame)
        if c is None or j >= len(roots):
            return None
        return PlacementBatch.bodies(c[None, :], np.array([roots[j]]), M)

    def make_F(j):
        def F(V):
            out = []
            for v in np.atleast_2d(V):
                v = _clamp_ball(v)[0]
                if np.linalg.norm(v) >= 0.5:
                    v = v * (0.499 / np.linalg.norm(v))
                b = placement_for(v, j)
                out.append(np.full(d, 2.0) if b is None else residual_batch(measures, cutter, b)[0])
            return np.array(out)
        return F

    grid = _ball_grid(d, 9)
    grid = grid[np.linalg.norm(grid, axis=1) < 0.5]
    best = None
    for j in range(3):
        F = make_F(j)
        vals = F(grid)
        sc = _score(vals)
        for i in np.argsort(sc)[:4]:
            if sc[i] > 1.5:
                break
            res = damped_newton(F, grid[i], cfg.tol)
            if best is None or res.norm < best[0].norm:
                best = (res, j)
            if res.norm <= cfg.tol:
                rep = SolveReport(res.x, res.value, res.norm, [], 0, 0)
                notes.append(f"solved on scale-root branch {j}")
                return rep, Branch(Homothety(tuple(res.x)), j)
    from .oracle import GridSpec, grid_search
    notes.append("branch Newton failed; falling back to the grid oracle")
    orc = grid_search(measures, cutter, "homothety", GridSpec(n_c=24, n_theta=1))
    if orc.best_max_residual <= cfg.tol:
        rep = SolveReport(np.zeros(d), orc.best_residual, orc.best_max_residual, [], 0, 0)
        return rep, orc.best_placement
    raise NoZeroFound("no branch converged", diagnostics={
        "best_norm": best[0].norm if best else None, "oracle_best": orc.best_max_residual})


# --------------------------------------------------------------------------
# Public entry point
# --------------------------------------------------------------------------

def solve(measures: MeasureSet, cutter, mode: str = "homothety", config: SolverConfig | None = None,
          **overrides) -> BisectionResult:
    """Find a placement of ``cutter`` bisecting every measure of ``measures``.

    Modes: ``homothety`` (scale and translate), ``axis`` (boxes and cylinders
    turned so their axis points along the centre direction) and ``similarity``
    (rotations, and reflections for asymmetric shapes). Raises NoZeroFound
    when no zero below ``tol`` is found.
    """
    cfg = config or SolverConfig(**overrides)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if cutter.dim != measures.dim:
        raise DimensionMismatch("cutter and measures live in different dimensions")
    t0 = time.perf_counter()
    frame = ChartFrame.for_measures(measures)
    mu0 = measures[0]
    notes: list[str] = []
    if mode == "axis":
        axis_index(cutter)
        rep, (u, a) = _solve_axis(measures, cutter, cfg, frame)
        point = Axis(tuple(u), a)
        placement = axis_batch(cutter, mu0, u[None, :], np.array([a]), frame).placement(0)
        chart = "axis"
    elif not cutter.star_shaped:
        rep, point = _solve_branches(measures, cutter, cfg, frame, notes)
        if isinstance(point, Branch):
            c, M, roots = branch_roots(cutter, mu0, point.base, frame)
            placement = PlacementBatch.bodies(c[None, :], np.array([roots[point.root_index]]),
                                              M).placement(0)
        else:
            placement = point
        chart = "branch"
    elif mode == "homothety":
        rep, v = _solve_homothety(measures, cutter, cfg, frame)
        point = Homothety(tuple(v))
        placement = homothety_batch(cutter, mu0, v[None, :], None, frame).placement(0)
        chart = "homothety"
    else:
        rep, point, M = _solve_similarity(measures, cutter, cfg, frame, notes)
        if isinstance(point, Axis):
            placement = axis_batch(cutter, mu0, np.array(point.u)[None, :],
                                   np.array([point.alpha]), frame).placement(0)
            chart = "axis"
        else:
            placement = homothety_batch(cutter, mu0, np.array(point.v)[None, :], M,
                                        frame).placement(0)
            chart = "similarity"
    res = residual(measures, cutter, placement)
    return BisectionResult(placement, res, chart, point, rep, mode,
                           time.perf_counter() - t0, notes)
