"""First variations, metric slopes, and curvature-action estimates.

Inner variations transport a configuration along a smooth vector field xi.
Because the configurations are indicators, every derivative that lands on u
is rewritten in divergence form,

    (xi . grad) u = div(xi u) - (div xi) u,

and the divergence is then moved onto the Gaussian inside the convolution, so
only smooth-field derivatives (all known in closed form) are ever taken.  The
localized slope of the energy is bounded from below by the Rayleigh quotient

    (-dE_h(u, chi; zeta)[y])_+ / sqrt(2 sqrt(h) int zeta |G_{h/2}*y|_sigma^2),

where y is the advective tangent -(xi . grad)u, either projected onto the
tangent cone of the constraint set (certified bound, ledger-safe) or taken
raw (curvature-reading instrument), maximized over a dictionary of test
fields; squared and summed over a trajectory window the raw quotient yields
a finite-h stand-in for the curvature action
(c0/2) sum_ij sigma_ij int int zeta |H|^2 along the flow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import SpectralKernel, convolve, phase_values
from .tensions import sigma_norm_sq_density
from .variational import interpolate

DEGENERATE_DENOMINATOR = 1e-14


def _transport_spectra(grid, u, xi):
    """Forward spectra needed for Kernel * ((xi . grad) u), any kernel.

    Returns sum_m i k_m F(xi_m u) - F((div xi) u); multiplying by a scalar
    kernel multiplier and inverting yields the transported convolution.
    """
    d = grid.dim
    prods = np.empty((d + 1,) + u.shape)
    for m in range(d):
        prods[m] = xi.values[m] * u
    prods[d] = xi.divergence * u
    spec = grid.rfft(prods)
    acc = -spec[d]
    for m in range(d):
        acc = acc + (1j * grid._freqs[m]) * spec[m]
    return acc


def _transported(grid, kernels, u, xi):
    """Kernel * ((xi . grad) u) for each kernel, sharing the forward FFTs."""
    acc = _transport_spectra(grid, u, xi)
    return [grid.irfft(k.scalar_multiplier * acc) for k in kernels]


def first_variation_energy_direct(u, xi, sigma, h, grid=None):
    """Transport form: -(2/sqrt(h)) int (xi . grad)u . sigma G_h * u dx."""
    if grid is None:
        grid = u.grid
    uv = phase_values(u)
    kernel = SpectralKernel(grid, h, "G")
    (transported,) = _transported(grid, [kernel], uv, xi)
    mixed = sigma.apply(uv)
    return -(2.0 / math.sqrt(h)) * float(grid.integrate((transported * mixed).sum(axis=0)))


def first_variation_energy(u, xi, sigma, h, grid=None):
    """Closed-form surrogate (1/sqrt(h)) sum sigma_ij int grad xi : u_i M * u_j,

    with M = G_h Id - h Hess G_h.  Agrees with the transport form up to
    O(sqrt(h) |grad^2 xi| E_h) once the xi-derivative is integrated off u.
    """
    if grid is None:
        grid = u.grid
    uv = phase_values(u)
    kernel = SpectralKernel(grid, h, "G_id_minus_h_hess")
    moment = convolve(uv, kernel)  # (d, d, P, *shape)
    mixed = sigma.apply(uv)
    d = grid.dim
    density = np.zeros(grid.shape)
    for a in range(d):
        for b in range(d):
            density = density + xi.jacobian[a, b] * (mixed * moment[a, b]).sum(axis=0)
    return float(grid.integrate(density)) / math.sqrt(h)


def first_variation_dissipation(u, chi, xi, sigma, h, grid=None):
    """d/ds of d_h^2(u_s, chi)/(2h) along transport by xi at s = 0."""
    if grid is None:
        grid = u.grid if hasattr(u, "grid") else chi.grid
    uv = phase_values(u)
    w = uv - phase_values(chi)
    kernel = SpectralKernel(grid, h, "G")
    (transported,) = _transported(grid, [kernel], uv, xi)
    mixed = sigma.apply(w)
    return (2.0 / math.sqrt(h)) * float(grid.integrate((transported * mixed).sum(axis=0)))


def localized_first_variation(u, chi, zeta, xi, sigma, h, grid=None):
    """d/ds of E_h(u_s, chi; zeta) at s = 0, split into its two terms.

    Returns (transport_term, commutator_term): the first is exactly the
    unlocalized first variation along the product field zeta*xi, the second
    couples G_{h/2}*(u - chi) to the commutator [zeta, G_{h/2}*](xi . grad)u
    and vanishes identically for constant zeta or u = chi.
    """
    if grid is None:
        grid = u.grid if hasattr(u, "grid") else chi.grid
    uv = phase_values(u)
    zeta_xi = xi.scaled_by(zeta)
    term1 = first_variation_energy_direct(uv, zeta_xi, sigma, h, grid=grid)

    half = SpectralKernel(grid, h, "G_half")
    transported_plain = _transported(grid, [half], uv, xi)[0]
    transported_weighted = _transported(grid, [half], uv, zeta_xi)[0]
    comm = zeta.values[None] * transported_plain - transported_weighted
    w = uv - phase_values(chi)
    kw = convolve(w, half)
    term2 = -(2.0 / math.sqrt(h)) * float(grid.integrate((sigma.apply(kw) * comm).sum(axis=0)))
    return term1, term2


@dataclass
class SlopeEstimate:
    """Dictionary-maximized lower bound for the localized metric slope."""

    value: float
    numerator: float
    denominator_sq: float
    best_label: str
    degenerate: bool
    ratios: dict = field(default_factory=dict)

    @property
    def value_sq(self):
        return self.value**2


def _tangent_cone_project(u, delta):
    """Cellwise Euclidean projection of delta onto the tangent cone at u.

    The cone is {y : sum_i y_i = 0, y_i >= 0 where u_i = 0, y_i <= 0 where
    u_i = 1}; states move along it without leaving the constraint set.  The
    zero-sum multiplier is resolved by bisection (the clamped sum is monotone
    in it), vectorized over cells.
    """
    at_zero = u <= 0.0
    at_one = u >= 1.0

    def clamp(lam):
        y = delta - lam[None]
        y = np.where(at_zero, np.maximum(y, 0.0), y)
        return np.where(at_one, np.minimum(y, 0.0), y)

    lo = delta.min(axis=0) - 1.0
    hi = delta.max(axis=0) + 1.0
    for _ in range(60):
        lam = 0.5 * (lo + hi)
        positive = clamp(lam).sum(axis=0) > 0.0
        lo = np.where(positive, lam, lo)
        hi = np.where(positive, hi, lam)
    return clamp(0.5 * (lo + hi))


def localized_gradient(u, chi, zeta, sigma, h, grid=None):
    """Pairing field g with dE_h(u, chi; zeta)[y] = (1/sqrt h) int y . g dx.

    Exact lattice gradient of the implemented localized energy: every adjoint
    move below is an identity for the discrete inner product, so pairing with
    a direction reproduces difference quotients of localized_energy to
    roundoff, including the commutator corrections.
    """
    if grid is None:
        grid = u.grid if hasattr(u, "grid") else chi.grid
    uv = phase_values(u)
    chiv = phase_values(chi)
    w = uv - chiv
    half = SpectralKernel(grid, h, "G_half")
    gk = SpectralKernel(grid, h, "G")
    zvals = zeta.values[None]

    grad = zvals * convolve(uv, gk) + convolve(zvals * uv, gk)
    grad += zvals * convolve(chiv, gk) - convolve(zvals * chiv, gk)
    kw = convolve(w, half)
    grad -= zvals * convolve(kw, half) - convolve(zvals * kw, half)
    grad += convolve(zvals * kw - convolve(zvals * w, half), half)
    return sigma.apply(grad)


def slope_lower_bound(u, chi, zeta, sigma, h, dictionary, grid=None, admissible=True):
    """max over xi of the functional's drop rate over the metric rate along
    advective directions -(xi . grad)u.

    With admissible=True (default) each tangent is first projected onto the
    tangent cone of the constraint set, separately for both signs of xi.
    One-sided derivatives along cone directions are attained by states inside
    the constraint set, so the quotient is a certified lower bound for the
    metric slope; at any exact minimizer of the step functional, first-order
    optimality then caps the result at the metric velocity, which is what
    keeps dissipation ledgers built from these estimates consistent.  The
    price is weakness at lattice-sharp states: there the cone removes most of
    each transport lobe and the bound often degrades to zero.

    With admissible=False the raw spectral tangent is used.  That is the
    plain Rayleigh quotient of the transport variation, the right instrument
    for reading off curvature magnitudes, but it is not a certified bound:
    sharp indicators are not interior points, and along fields that nearly
    vanish on the interface cells the quotient can overstate the slope.

    Fields whose metric rate falls below the degeneracy threshold are
    skipped; if all of them do, the slope is reported as 0 with the
    degenerate flag set.
    """
    if grid is None:
        grid = u.grid if hasattr(u, "grid") else chi.grid
    uv = phase_values(u)
    half = SpectralKernel(grid, h, "G_half")
    grad_sigma = localized_gradient(u, chi, zeta, sigma, h, grid=grid)
    zvals = zeta.values
    root_h = math.sqrt(h)

    best = SlopeEstimate(0.0, 0.0, 0.0, "", True)
    ratios = {}
    any_usable = False
    for xi in dictionary:
        raw = -grid.irfft(_transport_spectra(grid, uv, xi))
        field_ratio = 0.0
        # the raw quotient is sign-symmetric, so one orientation suffices
        orientations = (1.0, -1.0) if admissible else (1.0,)
        for orientation in orientations:
            delta = orientation * raw
            if admissible:
                delta = _tangent_cone_project(uv, delta)
            den_sq = 2.0 * root_h * float(
                grid.integrate(zvals * sigma_norm_sq_density(convolve(delta, half), sigma))
            )
            if den_sq < DEGENERATE_DENOMINATOR:
                continue
            any_usable = True
            drop = -(1.0 / root_h) * float(grid.integrate((delta * grad_sigma).sum(axis=0)))
            if not admissible:
                drop = abs(drop)
            ratio = max(drop, 0.0) / math.sqrt(den_sq)
            field_ratio = max(field_ratio, ratio)
            if ratio > best.value:
                best = SlopeEstimate(ratio, drop, den_sq, xi.label, False)
        ratios[xi.label] = field_ratio
    best.degenerate = not any_usable
    best.ratios = ratios
    return best


@dataclass
class CurvatureEstimate:
    """Time-summed squared slope bounds over a trajectory window.

    `value` carries the 1/2 weight with which the squared slope enters the
    dissipation ledger, so it is comparable to the curvature action
    (c0/2) sum_{i<j} 2 sigma_ij int int zeta |H|^2; `raw_time_sum` is the
    unweighted h * sum of squared slopes.
    """

    value: float
    raw_time_sum: float
    per_step_slope_sq: np.ndarray
    times: np.ndarray
    degenerate_steps: int


def curvature_rayleigh(
    trajectory, zeta, sigma, dictionary, start=1, stop=None, use_interpolation=False,
    solver_settings=None,
):
    """Accumulate squared slope quotients along a trajectory window.

    For each step the slope is evaluated at chi^n against chi^{n-1} (or at
    the midpoint variational interpolant when use_interpolation is set),
    using the raw transport quotient: this is the curvature-reading
    instrument, not the certified bound, cf. slope_lower_bound.  Monotone in
    the dictionary: adding fields can only increase it.
    """
    h = trajectory.h
    stop = trajectory.step_count if stop is None else stop
    if not 1 <= start <= stop <= trajectory.step_count:
        raise ValidationError(f"bad window [{start}, {stop}] for {trajectory.step_count} steps")
    slopes_sq = []
    times = []
    degenerate = 0
    for n in range(start, stop + 1):
        chi_prev = trajectory[n - 1]
        if use_interpolation:
            from .variational import DEFAULT_SOLVER

            settings = solver_settings or DEFAULT_SOLVER
            res = interpolate(chi_prev, 0.5 * h, h, zeta, sigma, settings=settings)
            u = res.u
        else:
            u = trajectory[n]
        est = slope_lower_bound(u, chi_prev, zeta, sigma, h, dictionary, admissible=False)
        slopes_sq.append(est.value_sq)
        times.append(n * h)
        if est.degenerate:
            degenerate += 1
    slopes_sq = np.asarray(slopes_sq)
    raw = h * float(slopes_sq.sum())
    return CurvatureEstimate(
        value=0.5 * raw,
        raw_time_sum=raw,
        per_step_slope_sq=slopes_sq,
        times=np.asarray(times),
        degenerate_steps=degenerate,
    )
