"""Minimizing-movement interpolation: solver, sampling, energy identity."""
import math

import numpy as np
import pytest

from mbo.grid import Grid, PhaseField
from mbo.scheme import mbo_step
from mbo.shapes import parse_shape, rasterize
from mbo.tensions import uniform_sigma
from mbo.testfields import zeta_constant, zeta_cos_bump
from mbo.variational import (
    InterpolantCurve,
    SolverSettings,
    _midpoint_weights,
    degiorgi_interpolant_curve,
    interpolate,
    log_spaced_times,
    moreau_yosida_value,
    project_simplex,
)
from mbo.errors import ValidationError

from brute_force import BatchFunctional, zoom_minimize


def _disk_case(n=32, ratio=5.0, r=0.3):
    grid = Grid(n, 2)
    h = (ratio * grid.dx) ** 2
    chi = rasterize(parse_shape(f"disk:{r}"), grid)
    sigma = uniform_sigma(2)
    return grid, h, chi, sigma


def test_projection_lands_on_simplex():
    rng = np.random.default_rng(7)
    v = rng.normal(size=(4, 9, 9))
    p = project_simplex(v)
    assert p.min() >= 0.0
    np.testing.assert_allclose(p.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)


def test_fast_path_matches_thresholding_bitwise():
    grid, h, chi, sigma = _disk_case()
    zeta = zeta_cos_bump(grid)
    res = interpolate(chi, h, h, zeta, sigma)
    assert res.converged and res.iterations == 0
    stepped = mbo_step(chi, sigma, h)
    assert np.array_equal(res.u.values, stepped.phase_indicators().astype(np.float64))


def test_time_out_of_range_rejected():
    grid, h, chi, sigma = _disk_case(n=16)
    zeta = zeta_constant(grid)
    for t in (0.0, -h, 2.0 * h):
        with pytest.raises(ValidationError):
            interpolate(chi, t, h, zeta, sigma)


def test_small_time_limit_returns_to_start():
    # u(t) -> chi as t -> 0: the metric term pins the minimizer
    grid, h, chi, sigma = _disk_case()
    zeta = zeta_cos_bump(grid)
    res = interpolate(chi, h / 4096.0, h, zeta, sigma)
    assert res.converged
    l1 = grid.integrate(np.abs(res.u.values - chi.phase_indicators()).sum(axis=0))
    assert l1 < 1e-3


def test_nonconvergence_is_flagged_not_raised():
    grid, h, chi, sigma = _disk_case(n=16)
    zeta = zeta_cos_bump(grid)
    res = interpolate(chi, h / 64.0, h, zeta, sigma, settings=SolverSettings(max_iter=2))
    assert not res.converged
    assert res.iterations == 2


def test_log_spaced_times_shape():
    h = 0.01
    times = log_spaced_times(h, 9)
    assert times.size == 9
    assert times[-1] == h
    np.testing.assert_allclose(times[0], h / 4096.0)
    ratios = times[1:] / times[:-1]
    np.testing.assert_allclose(ratios, ratios[0])
    assert log_spaced_times(h, 1).tolist() == [h]
    with pytest.raises(ValidationError):
        log_spaced_times(h, 0)


def test_midpoint_weights_partition_the_interval():
    h = 0.02
    times = log_spaced_times(h, 6)
    w = _midpoint_weights(times, h)
    assert w.shape == times.shape
    assert (w > 0.0).all()
    assert abs(w.sum() - h) < 1e-15


def test_moreau_values_nonincreasing_in_time():
    grid, h, chi, sigma = _disk_case()
    zeta = zeta_cos_bump(grid)
    times = log_spaced_times(h, 5, span=64.0)
    vals = [moreau_yosida_value(chi, t, h, zeta, sigma) for t in times]
    diffs = np.diff(vals)
    assert (diffs <= 1e-10).all()


def test_curve_energy_identity_residual_shrinks():
    grid, h, chi, sigma = _disk_case()
    zeta = zeta_cos_bump(grid)
    chi_next = mbo_step(chi, sigma, h)
    residuals = {}
    for count in (16, 32):
        curve = degiorgi_interpolant_curve(
            chi, h, zeta, sigma, times=log_spaced_times(h, count), chi_next=chi_next
        )
        assert curve.all_converged
        assert curve.metric_integral >= 0.0
        assert (np.diff(curve.times) > 0.0).all()
        residuals[count] = curve.energy_identity_residual(chi, zeta, sigma, h)
    assert residuals[16] < 0.05
    assert residuals[32] < 0.01
    assert residuals[32] / residuals[16] < 0.75


def test_curve_rejects_inconsistent_next_partition():
    grid, h, chi, sigma = _disk_case(n=16)
    zeta = zeta_constant(grid)
    wrong = rasterize(parse_shape("stripe"), grid)
    assert not np.array_equal(wrong.labels, mbo_step(chi, sigma, h).labels)
    with pytest.raises(ValidationError):
        degiorgi_interpolant_curve(chi, h, zeta, sigma, chi_next=wrong)


def test_curve_rejects_times_outside_step():
    grid, h, chi, sigma = _disk_case(n=16)
    zeta = zeta_constant(grid)
    with pytest.raises(ValidationError):
        degiorgi_interpolant_curve(chi, h, zeta, sigma, times=np.array([h / 2, 2 * h]))


def test_warm_start_agrees_with_cold_start():
    grid, h, chi, sigma = _disk_case()
    zeta = zeta_cos_bump(grid)
    t = h / 8.0
    warm_src = interpolate(chi, h / 4.0, h, zeta, sigma)
    warm = interpolate(chi, t, h, zeta, sigma, warm_start=warm_src.u)
    cold = interpolate(chi, t, h, zeta, sigma)
    assert abs(warm.value - cold.value) <= 1e-8 * abs(cold.value)


def test_solver_matches_exhaustive_search_small_instance():
    # 8 cells, two phases: full 5^8 zoom search brackets the same minimum
    grid = Grid(8, 1)
    h = (2.0 * grid.dx) ** 2
    labels = np.ones(8, dtype=np.uint8)
    labels[3:5] = 0  # width-2 block, erased by thresholding
    from mbo.grid import Partition

    chi = Partition(grid, 2, labels)
    sigma = uniform_sigma(2)
    zeta = zeta_cos_bump(grid)
    t = h / 2.0

    res = interpolate(chi, t, h, zeta, sigma, settings=SolverSettings(tol_scale=1e-12))
    assert res.converged

    functional = BatchFunctional(grid, chi, zeta, sigma, h)
    np.testing.assert_allclose(
        functional(res.u.values[0][None], t)[0], res.value, rtol=0, atol=1e-12
    )
    best_val, best_f = zoom_minimize(functional, t, grid.n, stages=16)
    assert abs(best_val - res.value) <= 1e-6
    assert np.abs(best_f - res.u.values[0]).max() <= 1e-4
