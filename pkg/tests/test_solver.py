import numpy as np
import pytest

from ccbisect.errors import DimensionMismatch, NoZeroFound
from ccbisect.geometry import AxisBox, Body, Cylinder, Disk, HalfSpace, PolygonRegion, StarPolygon
from ccbisect.instances import random_instance
from ccbisect.mass_eval import mass_in
from ccbisect.parametrize import Branch, chart_placement, residual
from ccbisect.solver import SolverConfig, solve

ANNULUS = PolygonRegion((((-2, -2), (2, -2), (2, 2), (-2, 2)), ((-1, -1), (1, -1), (1, 1), (-1, 1))),
                        (1.5, 0.0))


def check_bisects(ms, cutter, placement, tol):
    for m in ms:
        assert abs(2 * mass_in(m, cutter, placement) / m.total - 1) <= tol


@pytest.mark.parametrize("cutter,mode", [(Disk(1.0), "homothety"), (AxisBox((1.0, 1.0)), "axis"),
                                         (AxisBox((1.0, 1.0)), "similarity"),
                                         (AxisBox((2.0, 1.0)), "similarity"),
                                         (StarPolygon(((0, 0), (2, 0), (1.5, 1.0), (0, 1.5)), (0.6, 0.5)),
                                          "similarity")])
def test_planar_solves_bisect_everything(cutter, mode):
    ms = random_instance(31)
    r = solve(ms, cutter, mode, tol=1e-6)
    assert r.max_residual <= 1e-6
    check_bisects(ms, cutter, r.placement, 1e-6)


def test_branch_solve_non_star_cutter():
    ms = random_instance(1)
    r = solve(ms, ANNULUS, "homothety", tol=1e-6)
    assert r.chart == "branch"
    assert isinstance(r.chart_point, Branch)
    check_bisects(ms, ANNULUS, r.placement, 1e-6)


def test_chart_point_reproduces_placement():
    ms = random_instance(32)
    r = solve(ms, Disk(1.0), "homothety", tol=1e-8)
    from ccbisect.parametrize import ChartFrame
    again = chart_placement(Disk(1.0), ms, r.chart_point, ChartFrame.for_measures(ms))
    assert np.max(np.abs(residual(ms, Disk(1.0), again) - r.residuals)) <= 1e-12


def test_ball_homothety_3d():
    ms = random_instance(1, d=3)
    r = solve(ms, Disk(1.0, dim=3), "homothety", tol=1e-2)
    assert r.max_residual <= 1e-2
    assert isinstance(r.placement, (Body, HalfSpace))


def test_cylinder_axis_3d():
    ms = random_instance(2, d=3)
    r = solve(ms, Cylinder(1.0, 1.0), "axis", tol=1e-2)
    assert r.max_residual <= 1e-2
    axis = r.placement.rotation.matrix[:, 2]
    assert abs(np.linalg.norm(axis) - 1) < 1e-12


def test_failure_is_reported_not_returned():
    # 3D quadrature noise (~1e-5) rules out a 1e-12 zero: NoZeroFound, never a bad answer
    ms = random_instance(4, d=3)
    with pytest.raises(NoZeroFound) as exc:
        solve(ms, Disk(1.0, dim=3), "homothety", tol=1e-12)
    assert exc.value.diagnostics["best_norm"] > 1e-12


def test_bad_mode_and_dimension():
    ms = random_instance(0)
    with pytest.raises(ValueError):
        solve(ms, Disk(1.0), "affine")
    with pytest.raises(DimensionMismatch):
        solve(ms, Disk(1.0, dim=3), "homothety")
    with pytest.raises(ValueError):
        solve(ms, Disk(1.0), "axis")   # the axis chart needs a box or cylinder


def test_config_object():
    cfg = SolverConfig(tol=1e-5, seed=3)
    r = solve(random_instance(33), Disk(1.0), "homothety", cfg)
    assert r.max_residual <= 1e-5
