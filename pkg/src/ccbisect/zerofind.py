"""Zeros of planar residual maps by winding-number subdivision, plus Newton polishing.

Maps are batched: ``F`` takes an (N, k) array of domain points and returns an
(N, m) array. Planar searches run on dyadic boxes so that points shared by
neighbouring edges are bitwise identical and hit the evaluation cache.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import AmbiguousWinding, NoZeroFound

FD_STEP = 1e-6
NEWTON_ITERS = 50
# a row is dropped once STALL_WINDOW iterations shrink |F| by less than 1 - STALL_RATIO
STALL_WINDOW = 5
STALL_RATIO = 0.95
MAX_DEPTH = 12
JITTER = 1e-7
JITTER_ATTEMPTS = 3
EDGE_SAMPLES = 8
MAX_EDGE_LEVEL = 16
QUARTER_TURN = 0.5 * math.pi


class CachedMap:
    """Memoising wrapper around a batched map; counts fresh evaluations."""

    def __init__(self, F):
        self.F = F
        self.cache: dict[tuple, np.ndarray] = {}
        self.evaluations = 0

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        keys = [tuple(p) for p in pts]
        todo = [i for i, k in enumerate(keys) if k not in self.cache]
        if todo:
            uniq = list(dict.fromkeys(keys[i] for i in todo))
            vals = np.atleast_2d(np.asarray(self.F(np.array(uniq)), dtype=float))
            self.evaluations += len(uniq)
            for k, v in zip(uniq, vals):
                self.cache[k] = v
        return np.array([self.cache[k] for k in keys])

    def fresh(self, pts) -> np.ndarray:
        """Evaluate without touching the cache (Newton probes are one-off points)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        self.evaluations += len(pts)
        return np.atleast_2d(np.asarray(self.F(pts), dtype=float))


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


# --------------------------------------------------------------------------
# Winding numbers
# --------------------------------------------------------------------------

def _path_turn(G, a, b, eps, n0=EDGE_SAMPLES, max_level=MAX_EDGE_LEVEL):
    """Total angle swept by G along the segment a -> b, refined to < quarter turns."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ts = np.linspace(0.0, 1.0, n0 + 1)
    vals = G(a + np.outer(ts, b - a))
    for _ in range(max_level + 1):
        norms = np.linalg.norm(vals, axis=1)
        if np.any(norms < eps):
            k = int(np.argmin(norms))
            raise AmbiguousWinding(f"|F| = {norms[k]:.3g} below floor on the loop",
                                   point=tuple(a + ts[k] * (b - a)))
        ang = np.arctan2(vals[:, 1], vals[:, 0])
        dang = _wrap(np.diff(ang))
        bad = np.flatnonzero(np.abs(dang) >= QUARTER_TURN)
        if bad.size == 0:
            return float(np.sum(dang))
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        if np.any(np.diff(ts)[bad] < 2.0 ** -(max_level + 8)):
            break
        mvals = G(a + np.outer(mids, b - a))
        ts = np.insert(ts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals, axis=0)
    k = int(bad[0])
    raise AmbiguousWinding("angle steps stay above a quarter turn after refinement",
                           point=tuple(a + ts[k] * (b - a)))


def winding_number(loop, F, eps: float = 1e-12, n0: int = 64) -> int:
    """Winding number of F around 0 along a closed loop.

    ``loop`` is either a callable t -> points on [0, 1] (with loop(0) == loop(1))
    or an (n, 2) array of polygon vertices. ``F`` maps (N, 2) -> (N, 2).
    """
    if callable(loop):
        ts = np.linspace(0.0, 1.0, n0 + 1)
        return _winding_param(loop, F, eps, ts)
    verts = np.asarray(loop, dtype=float)
    total = 0.0
    for i in range(len(verts)):
        total += _path_turn(F, verts[i], verts[(i + 1) % len(verts)], eps)
    return int(round(total / (2 * math.pi)))


def _winding_param(loop, F, eps, ts, max_level=MAX_EDGE_LEVEL):
    vals = np.atleast_2d(F(np.atleast_2d(loop(ts))))
    for _ in range(max_level + 8):
        norms = np.linalg.norm(vals, axis=1)
        if np.any(norms < eps):
            k = int(np.argmin(norms))
            raise AmbiguousWinding(f"|F| = {norms[k]:.3g} below floor on the loop",
                                   point=tuple(np.atleast_2d(loop(ts[k:k + 1]))[0]))
        ang = np.arctan2(vals[:, 1], vals[:, 0])
        dang = _wrap(np.diff(ang))
        bad = np.flatnonzero(np.abs(dang) >= QUARTER_TURN)
        if bad.size == 0:
            return int(round(np.sum(dang) / (2 * math.pi)))
        if np.min(np.diff(ts)[bad]) < 2.0 ** -(max_level + 8):
            break
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        mvals = np.atleast_2d(F(np.atleast_2d(loop(mids))))
        ts = np.insert(ts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals, axis=0)
    raise AmbiguousWinding("angle steps stay above a quarter turn after refinement")


# --------------------------------------------------------------------------
# Damped Newton
# --------------------------------------------------------------------------

@dataclass
class NewtonResult:
    x: np.ndarray
    value: np.ndarray
    norm: float
    iterations: int
    history: list = field(default_factory=list)


def newton_batch(F, X0, tol: float, project=None, step: float = FD_STEP,
                 max_iter: int = NEWTON_ITERS, max_halvings: int = 30,
                 radius: float | None = None, first: bool = False) -> list[NewtonResult]:
    """Damped Newton from several starts at once (one map call per stage).

    Finite-difference Jacobian with forward step ``step``, least-squares
    steps (so singular and non-square systems are fine) and step halving:
    a step is accepted only if it lowers the Euclidean norm of F, so every
    history is non-increasing. Convergence is tested on the max-norm. Rows
    that wander farther than ``radius`` from their start, or that stall, are abandoned.
    With ``first`` the batch stops as soon as one row has converged.
    """
    proj = project or (lambda z: z)
    X = np.array([proj(np.asarray(x, dtype=float)) for x in np.atleast_2d(X0)])
    K, n = X.shape
    start = X.copy()
    FX = np.atleast_2d(np.asarray(F(X), dtype=float))
    norms = np.linalg.norm(FX, axis=1)
    hist = [[float(v)] for v in norms]
    iters = np.zeros(K, dtype=int)
    active = np.max(np.abs(FX), axis=1) > tol
    eye = step * np.eye(n)
    for _ in range(max_iter):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        probes = (X[act, None, :] + eye[None]).reshape(-1, n)
        FP = np.asarray(F(probes), dtype=float).reshape(act.size, n, -1)
        steps = np.empty((act.size, n))
        for r, i in enumerate(act):
            J = (FP[r] - FX[i][None, :]).T / step
            steps[r] = np.linalg.lstsq(J, -FX[i], rcond=None)[0]
        iters[act] += 1
        ok = np.all(np.isfinite(steps), axis=1)
        active[act[~ok]] = False
        pend = act[ok]
        dx = dict(zip(act[ok], steps[ok]))
        lam = 1.0
        moved = np.zeros(K, dtype=bool)
        for _h in range(max_halvings):
            if pend.size == 0:
                break
            XT = np.array([proj(X[i] + lam * dx[i]) for i in pend])
            FT = np.atleast_2d(np.asarray(F(XT), dtype=float))
            NT = np.linalg.norm(FT, axis=1)
            good = np.all(np.isfinite(FT), axis=1) & (NT < norms[pend])
            for r in np.flatnonzero(good):
                i = pend[r]
                X[i], FX[i], norms[i] = XT[r], FT[r], NT[r]
                moved[i] = True
            pend = pend[~good]
            lam *= 0.5
        for i in act:
            hist[i].append(float(norms[i]))
            h = hist[i]
            if len(h) > STALL_WINDOW and h[-1] > STALL_RATIO * h[-1 - STALL_WINDOW]:
                active[i] = False
        active[act[~moved[act]]] = False
        conv = np.max(np.abs(FX), axis=1) <= tol
        active &= ~conv
        if first and conv.any():
            break
        if radius is not None:
            far = np.linalg.norm(X - start, axis=1) > radius
            active &= ~far
    return [NewtonResult(X[i].copy(), FX[i].copy(), float(np.max(np.abs(FX[i]))), int(iters[i]), hist[i])
            for i in range(K)]


def damped_newton(F, x0, tol: float, project=None, step: float = FD_STEP,
                  max_iter: int = NEWTON_ITERS, max_halvings: int = 30) -> NewtonResult:
    """Single-start form of :func:`newton_batch`."""
    return newton_batch(F, np.asarray(x0, dtype=float)[None, :], tol, project, step,
                        max_iter, max_halvings)[0]


# --------------------------------------------------------------------------
# Quadtree subdivision
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    box: tuple          # (xlo, ylo, xhi, yhi)
    winding: int
    depth: int


@dataclass
class SolveReport:
    zero: np.ndarray
    value: np.ndarray
    residual_norm: float
    certificates: list
    evaluations: int
    depth: int
    converged: bool = True


def _edge_turns(G: CachedMap, edges, eps, n0=EDGE_SAMPLES, max_level=MAX_EDGE_LEVEL):
    """Turn angles of G along many segments, refined together.

    Returns (turns, trouble): ``turns`` maps edge -> angle; ``trouble`` maps
    edges whose angle could not be read off to the offending point.
    """
    edges = list(edges)
    turns: dict = {}
    trouble: dict = {}
    if not edges:
        return turns, trouble
    A = np.array([e[0] for e in edges], dtype=float)
    B = np.array([e[1] for e in edges], dtype=float)
    ts = [np.linspace(0.0, 1.0, n0 + 1) for _ in edges]
    pts = np.concatenate([A[i] + np.outer(ts[i], B[i] - A[i]) for i in range(len(edges))])
    flat = G(pts)
    vals = [flat[i * (n0 + 1):(i + 1) * (n0 + 1)] for i in range(len(edges))]
    live = list(range(len(edges)))
    for _ in range(max_level + 1):
        mids_all, owners = [], []
        still = []
        for i in live:
            nv = np.linalg.norm(vals[i], axis=1)
            if np.any(nv < eps):
                k = int(np.argmin(nv))
                trouble[edges[i]] = tuple(A[i] + ts[i][k] * (B[i] - A[i]))
                continue
            ang = np.arctan2(vals[i][:, 1], vals[i][:, 0])
            dang = _wrap(np.diff(ang))
            bad = np.flatnonzero(np.abs(dang) >= QUARTER_TURN)
            if bad.size == 0:
                turns[edges[i]] = float(np.sum(dang))
                continue
            if np.min(np.diff(ts[i])[bad]) < 2.0 ** -(max_level + 8):
                trouble[edges[i]] = tuple(A[i] + ts[i][bad[0]] * (B[i] - A[i]))
                continue
            mids = 0.5 * (ts[i][bad] + ts[i][bad + 1])
            mids_all.append(A[i] + np.outer(mids, B[i] - A[i]))
            owners.append((i, bad, mids))
            still.append(i)
        if not still:
            break
        mv = G(np.concatenate(mids_all))
        off = 0
        for i, bad, mids in owners:
            m = mv[off:off + mids.size]
            off += mids.size
            ts[i] = np.insert(ts[i], bad + 1, mids)
            vals[i] = np.insert(vals[i], bad + 1, m, axis=0)
        live = still
    for i in live:
        if edges[i] not in turns and edges[i] not in trouble:
            trouble[edges[i]] = tuple(A[i])
    return turns, trouble


def _box_edges(box):
    x0, y0, x1, y1 = box
    c = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    return [(c[i], c[(i + 1) % 4]) for i in range(4)]


class _Winder:
    """Box windings with a shared cache of edge turns (each edge is swept once)."""

    def __init__(self, G: CachedMap, eps):
        self.G = G
        self.eps = eps
        self.turns: dict = {}
        self.trouble: dict = {}

    def _lookup(self, e):
        if e in self.turns:
            return self.turns[e]
        r = (e[1], e[0])
        if r in self.turns:
            return -self.turns[r]
        return None

    def windings(self, boxes):
        """Winding per box, or (None, point) when an edge passes too close to a zero."""
        need = []
        for bx in boxes:
            for e in _box_edges(bx):
                if self._lookup(e) is None and e not in self.trouble and (e[1], e[0]) not in self.trouble \
                        and e not in need:
                    need.append(e)
        t, tr = _edge_turns(self.G, need, self.eps)
        self.turns.update(t)
        self.trouble.update(tr)
        out = []
        for bx in boxes:
            total, bad = 0.0, None
            for e in _box_edges(bx):
                v = self._lookup(e)
                if v is None:
                    bad = self.trouble.get(e, self.trouble.get((e[1], e[0])))
                    break
                total += v
            out.append((None, bad) if bad is not None else (int(round(total / (2 * math.pi))), None))
        return out

    def floor(self, box):
        x0, y0, x1, y1 = box
        best = math.inf
        for k, v in self.G.cache.items():
            if x0 <= k[0] <= x1 and y0 <= k[1] <= y1:
                best = min(best, float(np.linalg.norm(v)))
        return best


def _split(box, frac=(0.5, 0.5)):
    x0, y0, x1, y1 = box
    xm = x0 + (x1 - x0) * frac[0]
    ym = y0 + (y1 - y0) * frac[1]
    return [(x0, y0, xm, ym), (xm, y0, x1, ym), (xm, ym, x1, y1), (x0, ym, xm, y1)]


def subdivide_solve(F, domain, tol: float, max_depth: int = MAX_DEPTH, eps: float = 1e-12,
                    project=None, seeds=(), rng=None, max_active: int = 8,
                    newton_starts: int = 4, newton_from_depth: int = 0) -> SolveReport:
    """Find a zero of a batched planar map F on the axis box ``domain``.

    The search is level-synchronous: all children of the current boxes are
    wound in one batched sweep, boxes with non-zero winding survive (the
    ``max_active`` ones with the smallest boundary |F| are kept), and damped
    Newton is started from the centres of the survivors. Ambiguous windings
    (an edge passing through a near-zero) trigger Newton from that point and
    a jittered re-split. Raises NoZeroFound when the search is exhausted.
    """
    rng = rng or np.random.default_rng(0)
    G = CachedMap(F)
    W = _Winder(G, eps)
    certs: list[Certificate] = []
    best: list = [None]

    def run_newton(starts, radius=None):
        if len(starts) == 0:
            return None
        for res in newton_batch(G.fresh, np.asarray(starts, dtype=float), tol, project, radius=radius,
                                first=True):
            if best[0] is None or res.norm < best[0].norm:
                best[0] = res
            if res.norm <= tol:
                return res
        return None

    def report(depth):
        r = best[0]
        return SolveReport(r.x, r.value, r.norm, certs, G.evaluations, depth)

    def fail(msg, **extra):
        diag = {"evaluations": G.evaluations,
                "windings": [{"box": list(c.box), "winding": c.winding, "depth": c.depth}
                             for c in certs[:400]], **extra}
        if best[0] is not None:
            diag["best_norm"] = best[0].norm
            diag["best_point"] = best[0].x.tolist()
        return NoZeroFound(msg, diagnostics=diag)

    if len(seeds) and run_newton(seeds) is not None:
        return report(0)

    root = tuple(float(t) for t in domain)
    w0 = None
    for attempt in range(JITTER_ATTEMPTS + 1):
        box = root
        if attempt:
            span = np.array([root[2] - root[0], root[3] - root[1]])
            j = rng.uniform(-1, 1, 4) * JITTER * np.concatenate([span, span])
            box = tuple(float(t) for t in np.array(root) + j)
        (w, bad), = W.windings([box])
        if w is not None:
            w0, root = w, box
            break
        if run_newton([bad]) is not None:
            return report(0)
    if w0 is None:
        raise fail("winding of the domain boundary is ambiguous")
    certs.append(Certificate(root, w0, 0))
    if w0 == 0:
        raise fail("domain boundary has winding number 0", winding=0)

    level = [root]
    for depth in range(1, max_depth + 1):
        nxt = []
        pending = [(bx, 0) for bx in level]
        while pending:
            kids_of = []
            for bx, attempt in pending:
                frac = (0.5, 0.5) if attempt == 0 else tuple(0.5 + rng.uniform(-1, 1, 2) * 1e3 * JITTER)
                kids_of.append((bx, attempt, _split(bx, frac)))
            flat = [k for _, _, ks in kids_of for k in ks]
            wins = W.windings(flat)
            pending = []
            trouble_pts = []
            for idx, (bx, attempt, ks) in enumerate(kids_of):
                ws = wins[4 * idx:4 * idx + 4]
                if any(w is None for w, _ in ws):
                    trouble_pts.extend(p for w, p in ws if w is None)
                    if attempt < JITTER_ATTEMPTS:
                        pending.append((bx, attempt + 1))
                    continue
                for k, (w, _) in zip(ks, ws):
                    certs.append(Certificate(k, w, depth))
                    if w != 0:
                        nxt.append(k)
            if trouble_pts and run_newton(trouble_pts[:newton_starts]) is not None:
                return report(depth)
        if not nxt:
            raise fail("no sub-box with non-zero winding", max_depth=depth)
        nxt.sort(key=W.floor)
        level = nxt[:max_active]
        if depth >= newton_from_depth:
            centres = [((b[0] + b[2]) / 2, (b[1] + b[3]) / 2) for b in level[:newton_starts]]
            size = max(level[0][2] - level[0][0], level[0][3] - level[0][1])
            radius = None if depth >= max_depth else 4 * size
            if run_newton(centres, radius) is not None:
                return report(depth)
    raise fail("maximum depth reached without a zero below tolerance", max_depth=max_depth)


# --------------------------------------------------------------------------
# Multistart search (no degree certificate)
# --------------------------------------------------------------------------

def grid_minima(points, scores, k: int = 12) -> np.ndarray:
    """Indices of sample points whose score is no larger than that of their k neighbours.

    Sorted by score. Starting Newton from distinct basins is what makes the
    multistart search robust; the plain best-k would cluster in one basin.
    """
    points = np.atleast_2d(points)
    k = min(k, len(points) - 1)
    if k < 1:
        return np.arange(len(points))
    _, nb = cKDTree(points).query(points, k + 1)
    mins = np.flatnonzero(scores <= np.min(scores[nb[:, 1:]], axis=1))
    return mins[np.argsort(scores[mins])]


MULTISTART_HALVINGS = 12


def multistart_solve(F, starts, tol: float, project=None, n_best: int = 16,
                     max_iter: int = NEWTON_ITERS, neighbours: int = 12,
                     step: float = FD_STEP) -> SolveReport:
    """Newton from the local minima of |F| over the start set (one batch); no certificate.

    Raises NoZeroFound if no start converges.
    """
    G = CachedMap(F)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    vals = G.fresh(starts)
    score = np.linalg.norm(vals, axis=1)
    picks = list(grid_minima(starts, score, neighbours)[:n_best])
    if len(picks) < n_best:
        rest = [i for i in np.argsort(score) if i not in set(picks)]
        picks += rest[:n_best - len(picks)]
    results = newton_batch(G.fresh, starts[picks], tol, project, step, max_iter=max_iter,
                           max_halvings=MULTISTART_HALVINGS, first=True)
    best = min(results, key=lambda r: r.norm)
    if best.norm <= tol:
        return SolveReport(best.x, best.value, best.norm, [], G.evaluations, 0)
    diag = {"evaluations": G.evaluations, "starts": len(starts), "best_norm": best.norm,
            "best_point": best.x.tolist()}
    raise NoZeroFound("multistart Newton did not converge", diagnostics=diag)


# --------------------------------------------------------------------------
# Degree parity along the axis-chart homotopy
# --------------------------------------------------------------------------

@dataclass
class ParityReport:
    deg_even_end: int | None     # winding of u -> F(u, 0)
    deg_odd_end: int | None      # winding of u -> F(u, 1)
    trace: list                  # (alpha, winding or None)
    conclusive: bool

    @property
    def status(self) -> str:
        return "ok" if self.conclusive else "inconclusive"


def _circle(ts):
    ang = 2 * math.pi * np.asarray(ts, dtype=float)
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def homotopy_parity_check(measures, cutter, n_alpha: int = 17, eps: float = 1e-9,
                          frame=None) -> ParityReport:
    """Windings of u -> F(u, alpha) on the unit circle along the axis chart.

    At alpha = 0 the map is even (the centred copy for u and -u coincide),
    at alpha = 1 it is odd (complementary half-spaces), so a conclusive
    report has an even first and an odd second degree.
    """
    from .parametrize import ChartFrame, axis_batch, residual_batch

    if measures.dim != 2:
        raise ValueError("the parity check runs on planar instances")
    frame = frame or ChartFrame.for_measures(measures)
    mu0 = measures[0]

    def at(alpha):
        def F(U):
            U = np.atleast_2d(U)
            return residual_batch(measures, cutter,
                                  axis_batch(cutter, mu0, U, np.full(len(U), alpha), frame))
        try:
            return winding_number(_circle, F, eps)
        except AmbiguousWinding:
            return None

    alphas = np.linspace(0.0, 1.0, n_alpha)
    trace = [(float(a), at(float(a))) for a in alphas]
    w0, w1 = trace[0][1], trace[-1][1]
    return ParityReport(w0, w1, trace, w0 is not None and w1 is not None)
