"""Smooth test functions on the torus: localization weights and vector fields.

Localization weights zeta carry exact gradients and Hessians, sampled from
closed forms at cell centers, because the transport diagnostics contract
Hess(zeta) against interface measures and any numerical differentiation there
would pollute the comparison.  Vector test fields xi likewise carry an exact
divergence; the slope dictionary is built from single Fourier modes (both
axis polarizations, cos and sin) plus a smoothed radial field adapted to
shrinking-disk geometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

ZETA_PRESETS = ("constant", "cos-bump", "gauss-bump")


@dataclass
class ZetaField:
    """Nonnegative localization weight with exact first two derivatives."""

    grid: object
    values: np.ndarray
    grad: np.ndarray  # (dim, *shape)
    hess: np.ndarray  # (dim, dim, *shape)
    label: str = "zeta"

    def __post_init__(self):
        if self.values.min() < 0.0:
            raise ValidationError(f"zeta must be nonnegative, min={self.values.min()}")

    @property
    def floor(self):
        return float(self.values.min())

    def is_constant_one(self):
        v = self.values
        return v.min() == 1.0 and v.max() == 1.0


def zeta_constant(grid):
    d = grid.dim
    return ZetaField(
        grid,
        np.ones(grid.shape),
        np.zeros((d,) + grid.shape),
        np.zeros((d, d) + grid.shape),
        label="constant",
    )


def zeta_cos_bump(grid):
    """zeta(x) = 1 + cos(2 pi x_1 / period) / 2, bounded below by 1/2."""
    k = 2.0 * math.pi / grid.period
    x = grid.cell_centers()[0]
    d = grid.dim
    values = 1.0 + 0.5 * np.cos(k * x)
    grad = np.zeros((d,) + grid.shape)
    grad[0] = -0.5 * k * np.sin(k * x)
    hess = np.zeros((d, d) + grid.shape)
    hess[0, 0] = -0.5 * k**2 * np.cos(k * x)
    return ZetaField(grid, values, grad, hess, label="cos-bump")


def zeta_gauss_bump(grid, center=None, width=0.15, floor=0.05):
    """Periodic bump: floor + prod_a exp(kappa (cos(2 pi (x_a - c_a)/L) - 1)).

    kappa is chosen so the bump matches a Gaussian of the requested width (as
    a fraction of the period) near its peak; the product form keeps gradient
    and Hessian in closed form on the torus.
    """
    L = grid.period
    d = grid.dim
    if center is None:
        center = (0.5 * L,) * d
    k = 2.0 * math.pi / L
    kappa = 1.0 / (k * width * L) ** 2  # matches exp(-s^2/(2 w^2)) to second order
    coords = grid.cell_centers()
    phase = [k * (coords[a] - center[a]) for a in range(d)]
    bump = np.ones(grid.shape)
    for a in range(d):
        bump = bump * np.exp(kappa * (np.cos(phase[a]) - 1.0))
    values = floor + bump
    # d/dx_a log bump = -kappa k sin(phase_a)
    dlog = np.stack([-kappa * k * np.sin(phase[a]) for a in range(d)])
    grad = dlog * bump[None]
    hess = np.empty((d, d) + grid.shape)
    for a in range(d):
        for b in range(d):
            hess[a, b] = dlog[a] * dlog[b] * bump
            if a == b:
                hess[a, b] += -kappa * k**2 * np.cos(phase[a]) * bump
    return ZetaField(grid, values, grad, hess, label="gauss-bump")


def zeta_preset(name, grid, **kwargs):
    if name == "constant":
        return zeta_constant(grid)
    if name in ("cos-bump", "cos_bump"):
        return zeta_cos_bump(grid)
    if name in ("gauss-bump", "gauss_bump"):
        return zeta_gauss_bump(grid, **kwargs)
    raise ValidationError(f"unknown zeta preset {name!r}")


@dataclass
class VectorTestField:
    """Smooth vector field with exact Jacobian, for inner variations.

    jacobian[a, b] = d xi_a / d x_b; the divergence is its trace and is kept
    separately because the transport rewrites use it in every convolution.
    """

    grid: object
    values: np.ndarray  # (dim, *shape)
    divergence: np.ndarray  # (*shape)
    jacobian: np.ndarray  # (dim, dim, *shape)
    label: str = "xi"

    def scaled_by(self, zeta):
        """The product field zeta * xi with exact derivatives."""
        vals = zeta.values[None] * self.values
        div = zeta.values * self.divergence + (zeta.grad * self.values).sum(axis=0)
        jac = zeta.values[None, None] * self.jacobian + np.einsum(
            "a...,b...->ab...", self.values, zeta.grad
        )
        return VectorTestField(self.grid, vals, div, jac, label=f"{zeta.label}*{self.label}")


def constant_vector_field(grid, direction):
    d = grid.dim
    values = np.zeros((d,) + grid.shape)
    values[direction] = 1.0
    return VectorTestField(
        grid, values, np.zeros(grid.shape), np.zeros((d, d) + grid.shape),
        label=f"e{direction}",
    )


def fourier_vector_field(grid, mode, direction, trig):
    """xi = e_direction * trig(2 pi mode . x / period)."""
    d = grid.dim
    mode = tuple(int(m) for m in mode)
    if len(mode) != d:
        raise ValidationError(f"mode {mode} has wrong length for dim {d}")
    k = 2.0 * math.pi / grid.period
    coords = grid.cell_centers()
    phase = sum(k * m * x for m, x in zip(mode, coords))
    values = np.zeros((d,) + grid.shape)
    jac = np.zeros((d, d) + grid.shape)
    if trig == "cos":
        values[direction] = np.cos(phase)
        dphase = -np.sin(phase)
    elif trig == "sin":
        values[direction] = np.sin(phase)
        dphase = np.cos(phase)
    else:
        raise ValidationError(f"trig must be 'cos' or 'sin', got {trig!r}")
    for b in range(d):
        jac[direction, b] = k * mode[b] * dphase
    return VectorTestField(
        grid, values, jac[direction, direction].copy(), jac,
        label=f"{trig}{mode}e{direction}",
    )


def radial_vector_field(grid, center=None, scale=0.2):
    """xi = rho * exp(-rho^2 / (2 s^2)) * rho_hat around `center`.

    Writing xi = g(rho) (x - c) with g = exp(-rho^2/(2 s^2)), the Jacobian is
    g (delta_ab - delta_a delta_b / s^2), smooth through the origin.  The
    Gaussian factor keeps the field effectively supported inside one period;
    `scale` is a fraction of the period and should stay below ~0.2 so the
    wrap-around mismatch stays negligible.
    """
    L = grid.period
    d = grid.dim
    if center is None:
        center = (0.5 * L,) * d
    s = scale * L
    coords = grid.cell_centers()
    delta = [
        (x - c + 0.5 * L) % L - 0.5 * L for x, c in zip(coords, center)
    ]
    rho_sq = sum(dl**2 for dl in delta)
    g = np.exp(-rho_sq / (2.0 * s**2))
    values = np.stack([g * dl for dl in delta])
    jac = np.empty((d, d) + grid.shape)
    for a in range(d):
        for b in range(d):
            jac[a, b] = -g * delta[a] * delta[b] / s**2
            if a == b:
                jac[a, b] += g
    div = g * (d - rho_sq / s**2)
    return VectorTestField(grid, values, div, jac, label=f"radial(s={scale})")


def build_dictionary(grid, max_mode=3, radial_centers=(), radial_scale=0.2):
    """Test fields for the slope lower bound.

    All Fourier modes with |m|_inf <= max_mode up to the m ~ -m redundancy,
    each with every axis polarization and both trig phases, plus constant
    translations and one smoothed radial field per requested center.  The
    numerator of the slope quotient is evaluated with both signs, so the
    dictionary does not need -xi members.
    """
    d = grid.dim
    fields = [constant_vector_field(grid, a) for a in range(d)]
    seen = set()
    for mode in np.ndindex(*[2 * max_mode + 1] * d):
        m = tuple(mi - max_mode for mi in mode)
        if all(v == 0 for v in m):
            continue
        if m in seen or tuple(-v for v in m) in seen:
            continue
        seen.add(m)
        for a in range(d):
            for trig in ("cos", "sin"):
                fields.append(fourier_vector_field(grid, m, a, trig))
    for center in radial_centers:
        fields.append(radial_vector_field(grid, center=center, scale=radial_scale))
    return fields
