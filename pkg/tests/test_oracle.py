import numpy as np
import pytest

from ccbisect.geometry import AxisBox, Body, Disk, Rotation
from ccbisect.instances import diagonal_instance, random_instance, symmetric_instance
from ccbisect.mass_eval import mass_in
from ccbisect.oracle import GridSpec, grid_search, mc_mass
from ccbisect.parametrize import homothety_chart, residual

SQUARE = AxisBox((1.0, 1.0))


def test_symmetric_instance_grid_reaches_zero():
    ms = symmetric_instance(3)
    spec = GridSpec(n_c=33, n_theta=1)
    lo, hi = spec.bounds(ms)
    assert np.allclose(0.5 * (lo + hi), 0.0, atol=1e-12)   # odd grid: the origin is a node
    at_origin = residual(ms, Disk(1.0), homothety_chart(Disk(1.0), ms[0], (0.0, 0.0)))
    res = grid_search(ms, Disk(1.0), "homothety", spec)
    assert np.max(np.abs(at_origin)) <= 1e-9
    assert res.best_max_residual <= np.max(np.abs(at_origin))


def test_best_is_min_over_grid():
    ms = random_instance(4)
    res = grid_search(ms, SQUARE, "similarity", GridSpec(n_c=9, n_theta=4))
    assert res.best_max_residual == pytest.approx(np.max(np.abs(res.best_residual)))
    again = residual(ms, SQUARE, res.best_placement)
    assert np.max(np.abs(again)) == pytest.approx(res.best_max_residual, abs=1e-12)
    assert res.evaluations == 9 * 9 * 4


def test_doubling_never_worse():
    ms = random_instance(4)
    spec = GridSpec(n_c=9, n_theta=4)
    prev = grid_search(ms, SQUARE, "similarity", spec).best_max_residual
    for _ in range(2):
        spec = spec.doubled()
        cur = grid_search(ms, SQUARE, "similarity", spec).best_max_residual
        assert cur <= prev
        prev = cur


def test_diagonal_axis_parallel_floor():
    res = grid_search(diagonal_instance(), SQUARE, "homothety", GridSpec(n_c=64, n_theta=1))
    assert res.best_max_residual >= 0.05


def test_diagonal_rotated_squares_bisect():
    res = grid_search(diagonal_instance(), SQUARE, "similarity", GridSpec(n_c=16, n_theta=128))
    assert res.best_max_residual <= 1e-2


def test_axis_mode_sweeps_directions():
    ms = random_instance(4)
    res = grid_search(ms, SQUARE, "axis", GridSpec(n_theta=16, n_s=16))
    assert res.evaluations == 16 * 16
    assert isinstance(res.best_placement, Body)


def test_unknown_mode():
    with pytest.raises(ValueError):
        grid_search(random_instance(0), SQUARE, "affine", GridSpec(n_c=3))


def test_mc_mass_exact_when_far_from_boundary():
    m = random_instance(5)[0]
    assert mc_mass(m, Disk(1.0), Body((0.0, 0.0), 100.0, Rotation.identity(2)), 1000) == pytest.approx(m.total)
    assert mc_mass(m, Disk(1.0), Body((50.0, 0.0), 1.0, Rotation.identity(2)), 1000) == 0.0


def test_mc_mass_agrees_with_mass_in():
    m = random_instance(5)[0]
    pl = Body((0.1, 0.2), 0.8, Rotation.from_angle(0.3))
    est = mc_mass(m, SQUARE, pl, 1_000_000, np.random.default_rng(1))
    assert abs(est - mass_in(m, SQUARE, pl)) <= 2e-3 * m.total
