"""Find a scaled, translated (optionally rotated or reflected) copy of a shape bisecting d + 1 measures."""

import os as _os

# CCBISECT_THREADS caps the BLAS/OpenMP pools; it has to be set before numpy loads.
_threads = _os.environ.get("CCBISECT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import (AmbiguousWinding, CCBisectError, CutterParseError, DimensionMismatch,  # noqa: E402
                     DomainError, MeasureParseError, MissingColumns, NoBracket, NonPositiveWeight,
                     NoZeroFound, StarViolation, TooFewMeasures)
from .geometry import (AxisBox, Body, Cylinder, Disk, HalfSpace, PolygonRegion, Rotation,  # noqa: E402
                       StarPolygon, clip_convex, contains, star_fan)
from .mass_eval import bisect_scale, halfspace_offset, mass_in, scale_function  # noqa: E402
from .measures import Measure, MeasureSet, load_measures  # noqa: E402
from .oracle import GridSpec, grid_search, mc_mass  # noqa: E402
from .parametrize import (axis_chart, compactified_scale, homothety_chart, residual,  # noqa: E402
                          similarity_chart)
from .solver import BisectionResult, SolverConfig, solve  # noqa: E402
from .zerofind import homotopy_parity_check, subdivide_solve, winding_number  # noqa: E402

__all__ = [
    "AmbiguousWinding", "AxisBox", "BisectionResult", "Body", "CCBisectError", "CutterParseError",
    "Cylinder", "DimensionMismatch", "Disk", "DomainError", "GridSpec", "HalfSpace", "Measure",
    "MeasureParseError", "MeasureSet", "MissingColumns", "NoBracket", "NoZeroFound",
    "NonPositiveWeight", "PolygonRegion", "Rotation", "SolverConfig", "StarPolygon",
    "StarViolation", "TooFewMeasures", "axis_chart", "bisect_scale", "clip_convex",
    "compactified_scale", "contains", "grid_search", "halfspace_offset", "homothety_chart",
    "homotopy_parity_check", "load_measures", "mass_in", "mc_mass", "residual", "scale_function",
    "similarity_chart", "solve", "star_fan", "subdivide_solve", "winding_number",
]
