"""Absolutely continuous mass distributions as box-kernel mixtures or rasters.

A kernel is the uniform density on an axis-aligned square (cube in 3D) of
half-width ``r`` around its centre, carrying mass ``weight``. Rasters are
stored as kernels too (one per non-empty cell), so every mass evaluation goes
through the same overlap code.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DimensionMismatch, MeasureParseError, MissingColumns,
                     NonPositiveWeight, TooFewMeasures)
from .geometry import Body, Cutter, HalfSpace

DEFAULT_RADIUS_FRACTION = 1e-3


@dataclass(frozen=True, eq=False)
class Measure:
    centers: np.ndarray
    weights: np.ndarray
    radii: np.ndarray
    kind: str = "kernels"
    raster: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        r = np.broadcast_to(np.asarray(self.radii, dtype=float), w.shape).copy()
        if c.shape[0] != w.size:
            raise ValueError("centers and weights disagree in length")
        if c.shape[1] not in (2, 3):
            raise DimensionMismatch("measures live in R^2 or R^3")
        if w.size == 0:
            raise ValueError("a measure needs at least one kernel")
        if np.any(w <= 0):
            raise ValueError("kernel weights must be positive")
        if np.any(r <= 0):
            raise ValueError("kernel radii must be positive (atoms are not allowed)")
        for a in (c, w, r):
            a.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "radii", r)

    @classmethod
    def kernels(cls, centers, weights, radii) -> "Measure":
        return cls(centers, weights, radii)

    @classmethod
    def from_raster(cls, origin, cell, values) -> "Measure":
        """Raster on cells ``origin + cell * index``; ``values`` indexed [i_x, i_y(, i_z)]."""
        values = np.asarray(values, dtype=float)
        origin = np.asarray(origin, dtype=float)
        if values.ndim != origin.size:
            raise DimensionMismatch("raster shape and origin dimension differ")
        if not cell > 0:
            raise ValueError("raster cell size must be positive")
        if np.any(values < 0):
            raise ValueError("raster values must be non-negative")
        idx = np.argwhere(values > 0)
        centers = origin + (idx + 0.5) * cell
        weights = values[tuple(idx.T)] * cell ** values.ndim
        meta = {"origin": origin.tolist(), "cell": float(cell),
                "shape": list(values.shape), "values": values.ravel().tolist()}
        return cls(centers, weights, np.full(len(weights), cell / 2), kind="raster", raster=meta)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.min(self.centers - self.radii[:, None], axis=0)
        hi = np.max(self.centers + self.radii[:, None], axis=0)
        return lo, hi

    def corners(self) -> np.ndarray:
        """Corners of every kernel box, shape (K * 2^d, d)."""
        d = self.dim
        signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T
        return (self.centers[:, None, :] + self.radii[:, None, None] * signs[None]).reshape(-1, d)

    def to_json(self) -> dict:
        if self.kind == "raster" and self.raster is not None:
            return {"type": "raster", **self.raster}
        return {"type": "kernels",
                "kernels": [{"center": c.tolist(), "weight": float(w), "radius": float(r)}
                            for c, w, r in zip(self.centers, self.weights, self.radii)]}


@dataclass(frozen=True, eq=False)
class MeasureSet:
    measures: tuple

    def __post_init__(self):
        ms = tuple(self.measures)
        if not ms:
            raise TooFewMeasures("empty measure set")
        d = ms[0].dim
        if any(m.dim != d for m in ms):
            raise DimensionMismatch("all measures must share one dimension")
        if len(ms) != d + 1:
            raise TooFewMeasures(f"need exactly {d + 1} measures in R^{d}, got {len(ms)}")
        object.__setattr__(self, "measures", ms)

    @property
    def dim(self) -> int:
        return self.measures[0].dim

    def __len__(self):
        return len(self.measures)

    def __getitem__(self, i) -> Measure:
        return self.measures[i]

    def __iter__(self):
        return iter(self.measures)

    def bbox(self):
        los, his = zip(*(m.bbox() for m in self.measures))
        return np.min(los, axis=0), np.max(his, axis=0)

    def diameter(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def to_json(self) -> dict:
        return {"dimension": self.dim, "measures": [m.to_json() for m in self.measures]}


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------

def _parse_float(text, path, row, column):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise MeasureParseError(f"column {column!r}: cannot parse {text!r} as a number",
                                path, row) from None
    if not np.isfinite(v):
        raise MeasureParseError(f"column {column!r}: non-finite value", path, row)
    return v


def _load_csv(path, default_radius):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in (reader.fieldnames or [])]
        reader.fieldnames = cols
        required = ["measure_id", "x", "y", "weight"]
        missing = [c for c in required if c not in cols]
        if missing:
            raise MissingColumns(f"missing columns {missing}", path, 1)
        d = 3 if "z" in cols else 2
        axes = ["x", "y", "z"][:d]
        has_radius = "radius" in cols
        groups: dict[int, list] = {}
        for rowno, rec in enumerate(reader, start=2):
            try:
                mid = int(rec["measure_id"])
            except (TypeError, ValueError):
                raise MeasureParseError(f"bad measure_id {rec['measure_id']!r}", path, rowno) from None
            xyz = [_parse_float(rec[a], path, rowno, a) for a in axes]
            w = _parse_float(rec["weight"], path, rowno, "weight")
            if w <= 0:
                raise NonPositiveWeight(f"weight must be positive, got {w}", path, rowno)
            r = None
            if has_radius and rec.get("radius") not in (None, ""):
                r = _parse_float(rec["radius"], path, rowno, "radius")
                if r <= 0:
                    raise MeasureParseError(f"radius must be positive, got {r}", path, rowno)
            groups.setdefault(mid, []).append((xyz, w, r))
    if len(groups) < d + 1:
        raise TooFewMeasures(f"found {len(groups)} distinct measure ids, need {d + 1} in R^{d}", path)
    if len(groups) > d + 1:
        raise MeasureParseError(f"found {len(groups)} distinct measure ids, need exactly {d + 1}", path)
    allpts = np.array([p for g in groups.values() for p, _, _ in g])
    if default_radius is None:
        diam = float(np.linalg.norm(allpts.max(axis=0) - allpts.min(axis=0)))
        default_radius = DEFAULT_RADIUS_FRACTION * (diam if diam > 0 else 1.0)
    measures = []
    for mid in sorted(groups):
        g = groups[mid]
        measures.append(Measure(np.array([p for p, _, _ in g]), np.array([w for _, w, _ in g]),
                                np.array([default_radius if r is None else r for _, _, r in g])))
    return MeasureSet(tuple(measures))


def measure_from_json(obj, path=None, index=None) -> Measure:
    where = f"measure {index}" if index is not None else "measure"
    try:
        kind = obj.get("type", "raster" if "values" in obj else "kernels")
        if kind == "raster":
            shape = tuple(int(n) for n in obj["shape"])
            values = np.asarray(obj["values"], dtype=float)
            if values.size != int(np.prod(shape)):
                raise MeasureParseError(f"{where}: {values.size} values for shape {shape}", path)
            return Measure.from_raster(obj["origin"], float(obj["cell"]), values.reshape(shape))
        if kind == "kernels":
            ks = obj["kernels"]
            for j, k in enumerate(ks):
                if float(k["weight"]) <= 0:
                    raise NonPositiveWeight(f"{where}, kernel {j}: weight must be positive", path)
            return Measure(np.array([k["center"] for k in ks], dtype=float),
                           np.array([k["weight"] for k in ks], dtype=float),
                           np.array([k["radius"] for k in ks], dtype=float))
    except MeasureParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MeasureParseError(f"{where}: {exc}", path) from None
    raise MeasureParseError(f"{where}: unknown measure type {kind!r}", path)


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeasureParseError(f"invalid JSON: {exc}", path, exc.lineno) from None
    items = obj["measures"] if isinstance(obj, dict) and "measures" in obj else obj
    if not isinstance(items, list):
        raise MeasureParseError("expected a list of measures", path)
    ms = [measure_from_json(m, path, i) for i, m in enumerate(items)]
    if not ms:
        raise TooFewMeasures("no measures in file", path)
    d = ms[0].dim
    if len(ms) < d + 1:
        raise TooFewMeasures(f"found {len(ms)} measures, need {d + 1} in R^{d}", path)
    return MeasureSet(tuple(ms))


def load_measures(path, format: str | None = None, default_radius: float | None = None) -> MeasureSet:
    """Read a MeasureSet from CSV (measure_id,x,y[,z],weight[,radius]) or JSON."""
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        return _load_csv(path, default_radius)
    if fmt == "json":
        return _load_json(path)
    raise MeasureParseError(f"unknown measure format {fmt!r}", path)


def write_measures_csv(ms: MeasureSet, path) -> None:
    axes = ["x", "y", "z"][:ms.dim]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["measure_id", *axes, "weight", "radius"])
        for i, m in enumerate(ms):
            for c, wt, r in zip(m.centers, m.weights, m.radii):
                w.writerow([i, *(repr(float(t)) for t in c), repr(float(wt)), repr(float(r))])


# --------------------------------------------------------------------------
# Kernel overlap
# --------------------------------------------------------------------------

def kernel_mass_fraction(kernel, cutter: Cutter, placement) -> float:
    """Fraction of one kernel box ``(center, radius)`` covered by the placed cutter."""
    from .mass_eval import fraction_matrix, PlacementBatch
    center, radius = kernel[0], kernel[-1]
    center = np.asarray(center, dtype=float)[None, :]
    radius = np.asarray([float(radius)])
    batch = PlacementBatch.from_placements([placement], center.shape[1])
    return float(fraction_matrix(cutter, batch, center, radius)[0, 0])
