"""First variations along transport fields and metric-slope lower bounds."""
import math

import numpy as np
import pytest

from mbo.energetics import dissipation_sq, energy_eh, localized_energy, metric_d
from mbo.grid import Grid, Partition
from mbo.scheme import mbo_step, run
from mbo.shapes import parse_shape, rasterize
from mbo.tensions import uniform_sigma
from mbo.testfields import (
    build_dictionary,
    constant_vector_field,
    fourier_vector_field,
    radial_vector_field,
    zeta_constant,
    zeta_cos_bump,
    zeta_gauss_bump,
)
from mbo.variations import (
    curvature_rayleigh,
    first_variation_dissipation,
    first_variation_energy,
    first_variation_energy_direct,
    localized_first_variation,
    localized_gradient,
    slope_lower_bound,
)
from mbo.errors import ValidationError

C0 = 1.0 / math.sqrt(2.0 * math.pi)


def _advective_tangent(grid, u, xi):
    """-(xi . grad)u via div(xi u) - (div xi) u, plain numpy FFT path."""
    axes = tuple(range(-grid.dim, 0))
    out = -xi.divergence * u
    for m in range(grid.dim):
        k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx)
        shape = [1] * grid.dim
        shape[m] = grid.n
        km = k.reshape(shape)
        spec = np.fft.fftn(xi.values[m] * u, axes=axes)
        out = out + np.fft.ifftn(1j * km * spec, axes=axes).real
    return -out


def _smooth_mixture(grid, seed):
    """Random band-limited simplex-valued field, three phases."""
    rng = np.random.default_rng(seed)
    x = grid.cell_centers()
    logits = np.stack(
        [
            sum(
                rng.normal() * np.cos(2.0 * np.pi * (a * x[0] + b * x[1]))
                + rng.normal() * np.sin(2.0 * np.pi * (a * x[0] + b * x[1]))
                for a in range(-2, 3)
                for b in range(-2, 3)
            )
            for _ in range(3)
        ]
    )
    expv = np.exp(logits - logits.max(axis=0))
    return expv / expv.sum(axis=0)


def test_constant_field_gives_zero_variation():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    u = _smooth_mixture(grid, 3)
    sigma = uniform_sigma(3)
    for axis in (0, 1):
        xi = constant_vector_field(grid, axis)
        assert abs(first_variation_energy(u, xi, sigma, h, grid=grid)) < 1e-10
        assert abs(first_variation_energy_direct(u, xi, sigma, h, grid=grid)) < 1e-10


def test_closed_form_converges_to_transport_form():
    # remainder is O(sqrt(h) |grad^2 xi| E_h): second order in sqrt(h) here
    sigma = uniform_sigma(2)
    gaps = []
    for n in (128, 256, 512):
        grid = Grid(n, 2)
        h = (6.0 * grid.dx) ** 2
        u = rasterize(parse_shape("disk:0.3"), grid).phase_indicators()
        xi = fourier_vector_field(grid, (1, 2), 0, "sin")
        a = first_variation_energy(u, xi, sigma, h, grid=grid)
        b = first_variation_energy_direct(u, xi, sigma, h, grid=grid)
        gaps.append(abs(a - b))
    assert gaps[1] / gaps[0] < 0.35
    assert gaps[2] / gaps[1] < 0.35
    assert gaps[2] < 0.1


def test_energy_variation_matches_finite_difference():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(3)
    u = _smooth_mixture(grid, 11)
    xi = fourier_vector_field(grid, (2, 1), 1, "cos")
    delta = _advective_tangent(grid, u, xi)
    s = 1e-6
    fd = (
        energy_eh(u + s * delta, sigma, h, grid=grid)
        - energy_eh(u - s * delta, sigma, h, grid=grid)
    ) / (2.0 * s)
    dv = first_variation_energy_direct(u, xi, sigma, h, grid=grid)
    assert abs(fd - dv) <= 1e-5 * max(1.0, abs(dv))


def test_dissipation_variation_matches_finite_difference():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.3"), grid)
    u = mbo_step(chi, sigma, h).phase_indicators().astype(np.float64)
    xi = radial_vector_field(grid, center=(0.5, 0.5))
    delta = _advective_tangent(grid, u, xi)
    s = 1e-6
    chiv = chi.phase_indicators()
    fd = (
        dissipation_sq(u + s * delta, chiv, sigma, h, grid=grid)
        - dissipation_sq(u - s * delta, chiv, sigma, h, grid=grid)
    ) / (2.0 * s)
    dv = first_variation_dissipation(u, chiv, xi, sigma, h, grid=grid)
    assert abs(fd - dv) <= 1e-5 * max(1.0, abs(dv))


def test_localized_variation_constant_weight_collapses():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.3"), grid)
    u = mbo_step(chi, sigma, h).phase_indicators().astype(np.float64)
    xi = fourier_vector_field(grid, (1, 0), 0, "sin")
    term1, term2 = localized_first_variation(u, chi, zeta_constant(grid), xi, sigma, h)
    assert term2 == 0.0
    assert abs(term1 - first_variation_energy_direct(u, xi, sigma, h, grid=grid)) < 1e-12


def test_localized_variation_matches_finite_difference():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.3"), grid)
    zeta = zeta_cos_bump(grid)
    u = mbo_step(chi, sigma, h).phase_indicators().astype(np.float64)
    xi = fourier_vector_field(grid, (0, 1), 1, "cos")
    term1, term2 = localized_first_variation(u, chi, zeta, xi, sigma, h)
    delta = _advective_tangent(grid, u, xi.scaled_by(zeta))
    s = 1e-6
    fd = (
        localized_energy(u + s * delta, chi, zeta, sigma, h, grid=grid)
        - localized_energy(u - s * delta, chi, zeta, sigma, h, grid=grid)
    ) / (2.0 * s)
    total = term1 + term2
    assert abs(fd - total) <= 1e-5 * max(1.0, abs(total))


def test_stationary_stripe_has_vanishing_slope():
    # the stripe is a fixed point; the certified slope must be exactly zero
    # for every localization, even though sin(2 pi x0) fields vanish on both
    # interfaces and the raw quotient overstates the drop there
    grid = Grid(64, 2)
    h = (6.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("stripe"), grid)
    nxt = mbo_step(chi, sigma, h)
    assert np.array_equal(chi.labels, nxt.labels)
    dictionary = build_dictionary(grid, max_mode=1)
    for zeta in (zeta_constant(grid), zeta_cos_bump(grid)):
        est = slope_lower_bound(nxt, chi, zeta, sigma, h, dictionary)
        assert est.value == 0.0
    raw = slope_lower_bound(
        nxt, chi, zeta_cos_bump(grid), sigma, h, dictionary, admissible=False
    )
    assert raw.value > 1.0  # the overshoot the projection is there to remove


def test_certified_slope_capped_by_metric_velocity():
    # at the exact minimizer of the step functional, optimality plus
    # Cauchy-Schwarz bound the certified quotient by d(chi^1, chi^0; zeta)/h
    grid = Grid(64, 2)
    h = (6.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.3"), grid)
    nxt = mbo_step(chi, sigma, h)
    dictionary = build_dictionary(grid, max_mode=1, radial_centers=((0.5, 0.5),))
    for zeta in (zeta_constant(grid), zeta_cos_bump(grid)):
        est = slope_lower_bound(nxt, chi, zeta, sigma, h, dictionary)
        cap = metric_d(nxt, chi, sigma, h, zeta=zeta, grid=grid) / h
        assert est.value <= cap * (1.0 + 1e-9)


def test_localized_gradient_matches_difference_quotients():
    rng = np.random.default_rng(11)
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(3)
    chi = rasterize(parse_shape("voronoi::3"), grid, 3)
    logits = rng.normal(size=(3,) + grid.shape)
    u = np.exp(logits)
    u /= u.sum(axis=0)
    y = rng.normal(size=u.shape)
    y -= y.mean(axis=0)
    s = 1e-6
    for zeta in (zeta_cos_bump(grid), zeta_gauss_bump(grid)):
        g = localized_gradient(u, chi, zeta, sigma, h, grid=grid)
        fd = (
            localized_energy(u + s * y, chi, zeta, sigma, h, grid=grid)
            - localized_energy(u - s * y, chi, zeta, sigma, h, grid=grid)
        ) / (2.0 * s)
        pred = float(grid.integrate((y * g).sum(axis=0))) / math.sqrt(h)
        assert abs(fd - pred) <= 1e-6 * max(1.0, abs(fd))


def test_disk_slope_tracks_curvature_scale():
    # |dE|(disk of radius r) ~ sqrt(c0 sigma * 2 pi / r) for uniform sigma;
    # raw quotient: the certified bound is much weaker at lattice-sharp states
    grid = Grid(64, 2)
    h = (6.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    r = 0.3
    chi = rasterize(parse_shape(f"disk:{r}"), grid)
    nxt = mbo_step(chi, sigma, h)
    dictionary = [radial_vector_field(grid, center=(0.5, 0.5))]
    est = slope_lower_bound(
        nxt, chi, zeta_constant(grid), sigma, h, dictionary, admissible=False
    )
    assert not est.degenerate
    expected = math.sqrt(2.0 * math.pi * C0 / r)
    assert 0.85 <= est.value / expected <= 1.15


def test_slope_monotone_in_dictionary():
    grid = Grid(64, 2)
    h = (6.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.3"), grid)
    nxt = mbo_step(chi, sigma, h)
    zeta = zeta_cos_bump(grid)
    full = build_dictionary(grid, max_mode=1, radial_centers=((0.5, 0.5),))
    for admissible in (True, False):
        vals = []
        for k in range(1, len(full) + 1):
            vals.append(
                slope_lower_bound(
                    nxt, chi, zeta, sigma, h, full[:k], admissible=admissible
                ).value
            )
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == max(vals)


def test_single_phase_is_degenerate():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = Partition(grid, 2, np.zeros(grid.shape, dtype=np.uint8))
    dictionary = build_dictionary(grid, max_mode=1)
    est = slope_lower_bound(chi, chi, zeta_constant(grid), sigma, h, dictionary)
    assert est.degenerate
    assert est.value == 0.0


def test_curvature_rayleigh_accumulates_and_validates():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.35"), grid)
    traj = run(chi, sigma, h, 3)
    dictionary = [radial_vector_field(grid, center=(0.5, 0.5))]
    zeta = zeta_constant(grid)
    est = curvature_rayleigh(traj, zeta, sigma, dictionary)
    assert est.per_step_slope_sq.shape == (3,)
    np.testing.assert_allclose(est.times, h * np.arange(1, 4))
    assert est.value == pytest.approx(0.5 * est.raw_time_sum)
    assert est.raw_time_sum == pytest.approx(h * est.per_step_slope_sq.sum())
    assert est.value > 0.0
    window = curvature_rayleigh(traj, zeta, sigma, dictionary, start=2, stop=3)
    assert window.per_step_slope_sq.shape == (2,)
    for bad in ((0, None), (1, 4), (3, 2)):
        with pytest.raises(ValidationError):
            curvature_rayleigh(traj, zeta, sigma, dictionary, start=bad[0], stop=bad[1])


def test_curvature_rayleigh_midpoint_interpolant_runs():
    grid = Grid(32, 2)
    h = (5.0 * grid.dx) ** 2
    sigma = uniform_sigma(2)
    chi = rasterize(parse_shape("disk:0.35"), grid)
    traj = run(chi, sigma, h, 2)
    dictionary = [radial_vector_field(grid, center=(0.5, 0.5))]
    est = curvature_rayleigh(
        traj, zeta_constant(grid), sigma, dictionary, use_interpolation=True
    )
    assert est.degenerate_steps == 0
    assert np.isfinite(est.value) and est.value > 0.0
