"""Periodic cubic grid, field containers, and the spectral Gaussian semigroup.

All fields live on the flat torus [0, period)^dim sampled at cell centers
(i + 1/2) * dx.  Convolution with the Gaussian of variance h,

    G_h(z) = (2*pi*h)**(-dim/2) * exp(-|z|^2 / (2*h)),

is realized as the exact multiplier exp(-h*|k|^2/2) on the discrete
frequencies k = 2*pi*m/period.  No real-space kernel is ever formed, so the
semigroup property (applying variance h/2 twice equals variance h) holds to
rounding error and the constant mode is preserved exactly.  Spatial integrals
are grid sums times the cell volume throughout; there is no anti-aliasing or
smoothing beyond the Gaussian itself.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import KernelResolutionWarning, ValidationError

KERNEL_KINDS = (
    "G",
    "G_half",
    "sqrt_h_grad_G",
    "h_hess_G",
    "G_id_minus_h_hess",
)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with n cells per axis on [0, period)^dim."""

    n: int
    dim: int
    period: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 8:
            raise ValidationError(f"need at least 8 cells per axis, got {self.n}")
        if self.n % 2 != 0:
            # odd n breaks the +/- frequency pairing used by the multipliers
            raise ValidationError(f"cell count must be even, got {self.n}")
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValidationError(f"period must be positive, got {self.period}")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def dx(self):
        return self.period / self.n

    @property
    def cell_volume(self):
        return self.dx**self.dim

    @property
    def num_cells(self):
        return self.n**self.dim

    @cached_property
    def axis_centers(self):
        """Cell center coordinates along one axis."""
        return (np.arange(self.n) + 0.5) * self.dx

    def cell_centers(self):
        """dim arrays of shape `shape`, one per coordinate."""
        return np.meshgrid(*([self.axis_centers] * self.dim), indexing="ij")

    @cached_property
    def _freqs(self):
        # angular wavenumbers in rfftn layout: full along leading axes,
        # half-spectrum along the last
        ks = []
        for axis in range(self.dim):
            if axis == self.dim - 1:
                k = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)
            else:
                k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
            shape = [1] * self.dim
            shape[axis] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def _ksq(self):
        return sum(k**2 for k in self._freqs)

    def rfft(self, values):
        return np.fft.rfftn(values, axes=tuple(range(-self.dim, 0)))

    def irfft(self, spec):
        return np.fft.irfftn(spec, s=self.shape, axes=tuple(range(-self.dim, 0)))

    def integrate(self, values):
        """Grid-sum quadrature of a density over the torus."""
        return values.sum(axis=tuple(range(-self.dim, 0))) * self.cell_volume

    def l2_norm(self, values):
        """L2 norm over the torus; leading axes are summed as components."""
        return math.sqrt(float(np.sum(values**2)) * self.cell_volume)


def make_grid(n, dim, period=1.0):
    return Grid(n=int(n), dim=int(dim), period=float(period))


@dataclass(frozen=True)
class SpectralKernel:
    """Gaussian kernel (or a derivative of one) as a Fourier multiplier.

    Kinds:
      G                  exp(-h|k|^2/2)
      G_half             exp(-(h/2)|k|^2/2)
      sqrt_h_grad_G      i*k_j*sqrt(h) * exp(-h|k|^2/2)       (vector valued)
      h_hess_G           -k_j*k_l*h   * exp(-h|k|^2/2)        (matrix valued)
      G_id_minus_h_hess  exp(-h|k|^2/2)*(delta_jl + h*k_j*k_l)  (matrix valued)

    `h` is the scheme's time-step-like parameter; the variance of the
    underlying Gaussian is h (h/2 for kind G_half).
    """

    grid: Grid
    h: float
    kind: str = "G"

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValidationError(f"kernel parameter h must be positive, got {self.h}")
        if self.kind not in KERNEL_KINDS:
            raise ValidationError(f"unknown kernel kind {self.kind!r}")

    @property
    def variance(self):
        return 0.5 * self.h if self.kind == "G_half" else self.h

    @cached_property
    def scalar_multiplier(self):
        return np.exp(-0.5 * self.variance * self.grid._ksq)

    def apply(self, values):
        """Convolve; leading axes of `values` are treated as a batch."""
        grid = self.grid
        spec = grid.rfft(np.asarray(values, dtype=np.float64))
        mult = self.scalar_multiplier
        if self.kind in ("G", "G_half"):
            return grid.irfft(spec * mult)
        ks = grid._freqs
        if self.kind == "sqrt_h_grad_G":
            root_h = math.sqrt(self.h)
            out = [grid.irfft((1j * root_h) * k * mult * spec) for k in ks]
            return np.stack(out)
        if self.kind == "h_hess_G":
            out = np.empty((grid.dim, grid.dim) + values.shape)
            for a in range(grid.dim):
                for b in range(a, grid.dim):
                    comp = grid.irfft(-self.h * ks[a] * ks[b] * mult * spec)
                    out[a, b] = comp
                    out[b, a] = comp
            return out
        # G_id_minus_h_hess: G*Id - h * hess(G), componentwise
        out = np.empty((grid.dim, grid.dim) + values.shape)
        for a in range(grid.dim):
            for b in range(a, grid.dim):
                m = mult * (self.h * ks[a] * ks[b] + (1.0 if a == b else 0.0))
                comp = grid.irfft(m * spec)
                out[a, b] = comp
                out[b, a] = comp
        return out


def convolve(values, kernel):
    """Apply a spectral kernel to a field sampled on its grid.

    Warns (does not fail) when sqrt(h) is below twice the grid spacing: the
    multiplier is still applied exactly, but the kernel is no longer resolved
    and thresholding results become grid-dominated.
    """
    values = np.asarray(values)
    if values.shape[-kernel.grid.dim:] != kernel.grid.shape:
        raise ValidationError(
            f"field shape {values.shape} does not match grid shape {kernel.grid.shape}"
        )
    if math.sqrt(kernel.h) < 2.0 * kernel.grid.dx:
        warnings.warn(
            f"sqrt(h)={math.sqrt(kernel.h):.3g} is below 2*dx={2 * kernel.grid.dx:.3g}; "
            "kernel is unresolved on this grid",
            KernelResolutionWarning,
            stacklevel=2,
        )
    return kernel.apply(values)


@dataclass
class Partition:
    """Cellwise phase labels (one byte per cell)."""

    grid: Grid
    phase_count: int
    labels: np.ndarray

    def __post_init__(self):
        if not 2 <= self.phase_count <= 64:
            raise ValidationError(f"phase count must be in [2, 64], got {self.phase_count}")
        labels = np.asarray(self.labels)
        if labels.shape != self.grid.shape:
            raise ValidationError(
                f"label shape {labels.shape} does not match grid shape {self.grid.shape}"
            )
        if labels.min() < 0 or labels.max() >= self.phase_count:
            raise ValidationError("labels out of range for declared phase count")
        self.labels = labels.astype(np.uint8)

    def phase_indicators(self):
        """One-hot float indicators, shape (phase_count, *grid.shape)."""
        ids = np.arange(self.phase_count, dtype=np.uint8)
        ids = ids.reshape((self.phase_count,) + (1,) * self.grid.dim)
        return (self.labels[None] == ids).astype(np.float64)

    def counts(self):
        return np.bincount(self.labels.ravel(), minlength=self.phase_count)

    def copy(self):
        return Partition(self.grid, self.phase_count, self.labels.copy())


@dataclass
class PhaseField:
    """Simplex-valued relaxed configuration, shape (phase_count, *grid.shape)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != self.grid.dim + 1 or values.shape[1:] != self.grid.shape:
            raise ValidationError(
                f"phase field shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        self.values = values

    @property
    def phase_count(self):
        return self.values.shape[0]

    def validate(self, tol=1e-12):
        v = self.values
        if v.min() < -tol or v.max() > 1.0 + tol:
            raise ValidationError("phase fractions out of [0, 1]")
        gap = np.abs(v.sum(axis=0) - 1.0).max()
        if gap > tol:
            raise ValidationError(f"phase fractions sum to 1 +/- {gap:.3e}, tol {tol:.0e}")
        return self

    @classmethod
    def from_partition(cls, partition):
        return cls(partition.grid, partition.phase_indicators())


def phase_values(obj):
    """Accept Partition, PhaseField, or a raw (P, *shape) array."""
    if isinstance(obj, Partition):
        return obj.phase_indicators()
    if isinstance(obj, PhaseField):
        return obj.values
    return np.asarray(obj, dtype=np.float64)
