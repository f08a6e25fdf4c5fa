"""Command-line interface: solve, verify, oracle, generate, parity-check, render.

Cutter files are JSON objects with a ``type`` key:

    {"type": "disk", "radius": 1.0, "dim": 2, "star_point": [0, 0]}
    {"type": "axis_box", "half_extents": [1, 1], "star_point": [0, 0]}
    {"type": "cylinder", "radius": 1.0, "half_height": 1.0, "axis": 2}
    {"type": "star_polygon", "vertices": [[x, y], ...], "star_point": [x, y]}
    {"type": "polygon_region", "rings": [[[x, y], ...], ...], "star_point": [x, y]}

``star_point`` is optional except for polygon regions. Measure files are CSV
(``measure_id,x,y[,z],weight[,radius]``) or JSON. Results are JSON objects
tagged ``"schema": "ccbisect/1"``.

Exit codes: 0 success, 1 input/schema errors or unsupported requests,
2 no zero found (diagnostics are still written), 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .errors import CCBisectError, CutterParseError, NoZeroFound
from .geometry import (AxisBox, Body, Cylinder, Disk, HalfSpace, PolygonRegion, Rotation,
                       StarPolygon)
from .instances import random_instance
from .mass_eval import mass_in
from .measures import MeasureSet, load_measures, write_measures_csv
from .oracle import GridSpec, grid_search
from .parametrize import DELTA
from .solver import MODES, SolverConfig, solve
from .zerofind import homotopy_parity_check

SCHEMA = "ccbisect/1"


class Unsupported(CCBisectError):
    pass


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _plain(x):
    """Recursively convert numpy values and dataclasses to JSON-ready objects."""
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {"type": type(x).__name__, **{f.name: _plain(getattr(x, f.name))
                                             for f in dataclasses.fields(x)}}
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    return x


def cutter_to_json(cutter) -> dict:
    if isinstance(cutter, Disk):
        return {"type": "disk", "radius": cutter.radius, "dim": cutter.dim,
                "star_point": list(cutter.star_point)}
    if isinstance(cutter, AxisBox):
        return {"type": "axis_box", "half_extents": list(cutter.half_extents),
                "star_point": list(cutter.star_point)}
    if isinstance(cutter, Cylinder):
        return {"type": "cylinder", "radius": cutter.radius, "half_height": cutter.half_height,
                "axis": cutter.axis, "star_point": list(cutter.star_point)}
    if isinstance(cutter, StarPolygon):
        return {"type": "star_polygon", "vertices": [list(v) for v in cutter.vertices],
                "star_point": list(cutter.star_point), "smooth": cutter.smooth}
    if isinstance(cutter, PolygonRegion):
        return {"type": "polygon_region", "rings": [[list(v) for v in r] for r in cutter.rings_],
                "star_point": list(cutter.star_point)}
    raise CutterParseError(f"cannot serialize {type(cutter).__name__}")


def cutter_from_json(obj, path=None):
    where = f"{path}: " if path else ""
    if not isinstance(obj, dict) or "type" not in obj:
        raise CutterParseError(f"{where}cutter must be an object with a 'type' key")
    kind = obj["type"]
    sp = obj.get("star_point")
    try:
        if kind == "disk":
            return Disk(float(obj["radius"]), int(obj.get("dim", 2)), sp)
        if kind == "axis_box":
            return AxisBox(tuple(obj["half_extents"]), sp)
        if kind == "cylinder":
            return Cylinder(float(obj["radius"]), float(obj["half_height"]),
                            int(obj.get("axis", 2)), sp)
        if kind == "star_polygon":
            return StarPolygon(tuple(map(tuple, obj["vertices"])), sp, bool(obj.get("smooth", False)))
        if kind == "polygon_region":
            return PolygonRegion(tuple(tuple(map(tuple, r)) for r in obj["rings"]), sp)
    except KeyError as exc:
        raise CutterParseError(f"{where}{kind} cutter is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise CutterParseError(f"{where}invalid {kind} cutter: {exc}") from None
    raise CutterParseError(f"{where}unknown cutter type {kind!r}")


def load_cutter(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CutterParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return cutter_from_json(obj, path)


def placement_to_json(p) -> dict:
    if isinstance(p, HalfSpace):
        return {"kind": "halfspace", "normal": list(p.normal), "offset": p.offset}
    return {"kind": "body", "center": list(p.center), "scale": p.scale,
            "rotation": p.rotation.matrix.tolist(), "reflected": bool(p.reflected)}


def placement_from_json(obj, path=None):
    where = f"{path}: " if path else ""
    try:
        if obj["kind"] == "halfspace":
            return HalfSpace(tuple(obj["normal"]), float(obj["offset"]))
        if obj["kind"] == "body":
            return Body(tuple(obj["center"]), float(obj["scale"]),
                        Rotation.from_matrix(np.asarray(obj["rotation"], dtype=float)),
                        bool(obj.get("reflected", False)))
    except (KeyError, TypeError, ValueError) as exc:
        raise CutterParseError(f"{where}invalid placement: {exc}") from None
    raise CutterParseError(f"{where}unknown placement kind {obj.get('kind')!r}")


@dataclasses.dataclass
class Config:
    tol: float = 1e-6
    max_depth: int = 12
    mode: str = "homothety"
    seed: int = 0
    delta: float = DELTA
    kernel_radius: float | None = None
    out: str | None = None

    def __post_init__(self):
        if not 0 < self.tol < 0.1:
            raise ValueError("tol must lie in (0, 0.1)")
        if not 0 <= self.max_depth <= 20:
            raise ValueError("max depth must lie in [0, 20]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def measure_table(measures: MeasureSet, cutter, placement) -> list[dict]:
    """Masses inside and outside, recomputed one measure at a time from the placement."""
    rows = []
    for i, m in enumerate(measures):
        inside = float(mass_in(m, cutter, placement))
        total = float(m.total)
        rows.append({"index": i, "total": total, "inside": inside, "outside": total - inside,
                     "residual": 2.0 * inside / total - 1.0,
                     "deviation": abs(inside - 0.5 * total) / total})
    return rows


def result_record(result, measures, cutter, config: Config) -> dict:
    rows = measure_table(measures, cutter, result.placement)
    rep = result.report
    return {
        "schema": SCHEMA,
        "mode": result.mode,
        "chart": result.chart,
        "chart_point": _plain(result.chart_point),
        "placement": placement_to_json(result.placement),
        "measures": rows,
        "residuals": [r["residual"] for r in rows],
        "max_residual": max(abs(r["residual"]) for r in rows),
        "certificates": _plain([dataclasses.asdict(c) for c in rep.certificates]),
        "solver": {"evaluations": int(rep.evaluations), "depth": int(rep.depth),
                   "converged": bool(rep.converged), "notes": list(result.notes)},
        "config": _plain({k: v for k, v in dataclasses.asdict(config).items() if k != "out"}),
        "timing": {"elapsed_s": result.elapsed},
    }


def _write_json(obj, out):
    text = json.dumps(_plain(obj), indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _load_inputs(args):
    measures = load_measures(args.measures, default_radius=getattr(args, "kernel_radius", None))
    cutter = load_cutter(args.cutter)
    return measures, cutter


def cmd_solve(args) -> int:
    config = Config(args.tol, args.max_depth, args.mode, args.seed, DELTA, args.kernel_radius, args.out)
    measures, cutter = _load_inputs(args)
    try:
        result = solve(measures, cutter, args.mode,
                       SolverConfig(tol=args.tol, max_depth=args.max_depth, seed=args.seed))
    except NoZeroFound as exc:
        _write_json({"schema": SCHEMA, "error": "NoZeroFound", "message": str(exc),
                     "diagnostics": exc.diagnostics, "config": dataclasses.asdict(config)}, args.out)
        print(f"error: no zero found: {exc}", file=sys.stderr)
        return 2
    _write_json(result_record(result, measures, cutter, config), args.out)
    return 0


def cmd_verify(args) -> int:
    with open(args.result, encoding="utf-8") as fh:
        try:
            record = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CutterParseError(f"{args.result}: invalid JSON at line {exc.lineno}") from None
    if record.get("schema") != SCHEMA:
        raise CutterParseError(f"{args.result}: expected schema {SCHEMA!r}")
    if "placement" not in record:
        raise CutterParseError(f"{args.result}: no placement recorded")
    measures, cutter = _load_inputs(args)
    placement = placement_from_json(record["placement"], args.result)
    tol = args.tol if args.tol is not None else float(record.get("config", {}).get("tol", 1e-6))
    rows = measure_table(measures, cutter, placement)
    for r in rows:
        print(f"measure {r['index']}: |mass - total/2| / total = {r['deviation']:.3e}")
    worst = max(rows, key=lambda r: r["deviation"])
    if worst["deviation"] > tol:
        print(f"FAIL: measure {worst['index']} deviates by {worst['deviation']:.3e} > {tol:.1e}")
        return 3
    print(f"OK: all deviations <= {tol:.1e}")
    return 0


def cmd_oracle(args) -> int:
    measures, cutter = _load_inputs(args)
    spec = GridSpec(n_c=args.grid, n_theta=args.theta, n_s=args.scales, margin=args.margin)
    t0 = time.perf_counter()
    res = grid_search(measures, cutter, args.mode, spec)
    out = {"schema": SCHEMA, "mode": args.mode, "grid": dataclasses.asdict(spec),
           "evaluations": res.evaluations, "best_max_residual": res.best_max_residual,
           "timing": {"elapsed_s": time.perf_counter() - t0}}
    if res.best_placement is not None:
        out["placement"] = placement_to_json(res.best_placement)
        out["residuals"] = res.best_residual
    _write_json(out, args.out)
    return 0


def generate_files(out_dir, seed: int, dim: int, blobs: int, spread: float, cutter_kind: str | None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    measures = random_instance(seed, d=dim, blobs=blobs, spread=spread)
    kind = cutter_kind or ("axis_box" if dim == 2 else "cylinder")
    if kind == "disk":
        cutter = Disk(1.0, dim)
    elif kind == "axis_box":
        cutter = AxisBox((1.0,) * dim)
    elif kind == "cylinder":
        if dim != 3:
            raise Unsupported("cylinders need dimension 3")
        cutter = Cylinder(1.0, 1.0)
    else:
        raise CutterParseError(f"unknown cutter kind {kind!r}")
    mpath = out_dir / "measures.csv"
    cpath = out_dir / "cutter.json"
    write_measures_csv(measures, mpath)
    cpath.write_text(json.dumps(cutter_to_json(cutter), indent=2) + "\n", encoding="utf-8")
    return mpath, cpath


def cmd_generate(args) -> int:
    mpath, cpath = generate_files(args.out_dir, args.seed, args.dim, args.blobs, args.spread,
                                  args.cutter_type)
    print(mpath)
    print(cpath)
    return 0


def cmd_parity(args) -> int:
    measures = load_measures(args.measures)
    cutter = load_cutter(args.cutter) if args.cutter else AxisBox((1.0, 1.0))
    if measures.dim != 2:
        raise Unsupported("the parity check runs on planar instances")
    rep = homotopy_parity_check(measures, cutter, n_alpha=args.steps)
    ok = (not rep.conclusive or (rep.deg_even_end % 2 == 0 and rep.deg_odd_end % 2 == 1))
    _write_json({"schema": SCHEMA, "status": rep.status, "deg_even_end": rep.deg_even_end,
                 "deg_odd_end": rep.deg_odd_end, "parity_ok": bool(ok),
                 "trace": [{"alpha": a, "winding": w} for a, w in rep.trace]}, args.out)
    return 0 if ok else 3


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _outline_path(cutter, placement, n_arc: int = 180) -> str:
    """SVG path data for the placed cutter outline (one closed subpath per ring), y flipped."""
    if isinstance(cutter, Disk):
        t = np.linspace(0, 2 * math.pi, n_arc, endpoint=False)
        rings = [cutter.radius * np.stack([np.cos(t), np.sin(t)], 1)]
    else:
        rings = [np.asarray(r, dtype=float) for r in cutter.rings()]
    parts = []
    for r in rings:
        w = placement.to_world(cutter, r)
        pts = " L ".join(f"{x:.6g} {-y:.6g}" for x, y in w)
        parts.append(f"M {pts} Z")
    return " ".join(parts)


def _clip_line(normal, offset, lo, hi):
    """Segment of {x : <x, n> = offset} inside the box [lo, hi]; None if it misses."""
    n = np.asarray(normal, dtype=float)
    pts = []
    for axis in (0, 1):
        other = 1 - axis
        if abs(n[other]) < 1e-15:
            continue
        for v in (lo[axis], hi[axis]):
            w = (offset - n[axis] * v) / n[other]
            if lo[other] - 1e-12 <= w <= hi[other] + 1e-12:
                p = [0.0, 0.0]
                p[axis], p[other] = v, w
                pts.append(p)
    if len(pts) < 2:
        return None
    pts = np.array(pts)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    return pts[i], pts[j]


def render_svg(measures: MeasureSet, cutter=None, placement=None, width: int = 640) -> str:
    if measures.dim != 2:
        raise Unsupported("rendering is only available in the plane")
    lo = np.min([np.min(m.centers - m.radii[:, None], axis=0) for m in measures], axis=0)
    hi = np.max([np.max(m.centers + m.radii[:, None], axis=0) for m in measures], axis=0)
    pad = 0.1 * np.maximum(hi - lo, 1e-9)
    lo, hi = lo - pad, hi + pad
    span = hi - lo
    height = max(1, int(round(width * span[1] / span[0])))
    unit = float(max(span))
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
           f'viewBox="{lo[0]:.6g} {-hi[1]:.6g} {span[0]:.6g} {span[1]:.6g}">']
    wmax = max(float(np.max(m.weights)) for m in measures)
    for i, m in enumerate(measures):
        color = _PALETTE[i % len(_PALETTE)]
        out.append(f'<g fill="{color}" fill-opacity="0.6" stroke="none">')
        for c, w in zip(m.centers, m.weights):
            r = 0.02 * unit * math.sqrt(float(w) / wmax)
            out.append(f'<circle cx="{c[0]:.6g}" cy="{-c[1]:.6g}" r="{r:.6g}"/>')
        out.append("</g>")
    stroke = f'stroke="black" stroke-width="{0.004 * unit:.6g}"'
    residuals = None
    if placement is not None and cutter is not None:
        if isinstance(placement, HalfSpace):
            seg = _clip_line(placement.normal, placement.offset, lo, hi)
            if seg is not None:
                (x0, y0), (x1, y1) = seg
                out.append(f'<line x1="{x0:.6g}" y1="{-y0:.6g}" x2="{x1:.6g}" y2="{-y1:.6g}" {stroke}/>')
        else:
            out.append(f'<path d="{_outline_path(cutter, placement)}" fill="none" {stroke}/>')
        residuals = [r["residual"] for r in measure_table(measures, cutter, placement)]
    if residuals is not None:
        size = 0.03 * unit
        for i, r in enumerate(residuals):
            y = -hi[1] + size * (1.3 * i + 1.2)
            out.append(f'<text x="{lo[0] + size * 0.5:.6g}" y="{y:.6g}" font-size="{size:.6g}" '
                       f'fill="{_PALETTE[i % len(_PALETTE)]}">measure {i}: residual {r:.2e}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(args) -> int:
    measures = load_measures(args.measures)
    if measures.dim != 2:
        raise Unsupported("rendering is only available in the plane")
    cutter = load_cutter(args.cutter) if args.cutter else None
    placement = None
    if args.result:
        with open(args.result, encoding="utf-8") as fh:
            record = json.load(fh)
        if "placement" in record:
            placement = placement_from_json(record["placement"], args.result)
        if cutter is None and placement is not None:
            raise CutterParseError("rendering a result needs --cutter")
    svg = render_svg(measures, cutter, placement)
    if args.out:
        Path(args.out).write_text(svg, encoding="utf-8")
    else:
        sys.stdout.write(svg)
    return 0


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccbisect",
                                 description="Bisect d + 1 measures with a copy of a shape.")
    sub = ap.add_subparsers(dest="command", required=True)

    def inputs(p, cutter_required=True):
        p.add_argument("--measures", required=True, help="measure file (CSV or JSON)")
        p.add_argument("--cutter", required=cutter_required, help="cutter JSON file")
        p.add_argument("--kernel-radius", type=float, default=None,
                       help="kernel half-width for CSV rows without a radius column")

    p = sub.add_parser("solve", help="find a bisecting placement")
    inputs(p)
    p.add_argument("--mode", choices=MODES, default="homothety")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="recompute the masses of a saved result")
    p.add_argument("result")
    inputs(p)
    p.add_argument("--tol", type=float, default=None, help="default: the tolerance of the result")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force grid search")
    inputs(p)
    p.add_argument("--mode", choices=MODES, default="homothety")
    p.add_argument("--grid", type=int, default=64, help="centre nodes per axis")
    p.add_argument("--theta", type=int, default=64, help="rotations or axis directions")
    p.add_argument("--scales", type=int, default=64, help="positions along the axis (axis mode)")
    p.add_argument("--margin", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--blobs", type=int, default=3)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--cutter-type", choices=("disk", "axis_box", "cylinder"), default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("parity-check", help="winding numbers at both ends of the axis homotopy")
    inputs(p, cutter_required=False)
    p.add_argument("--steps", type=int, default=17)
    p.add_argument("--out")
    p.set_defaults(func=cmd_parity)

    p = sub.add_parser("render", help="draw an instance and optionally a result as SVG")
    p.add_argument("--measures", required=True)
    p.add_argument("--cutter")
    p.add_argument("--result")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CCBisectError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
