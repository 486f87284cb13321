"""Exhaustive reference minimizer for tiny two-phase 1-D instances.

Evaluates the step functional on a full 5^n candidate grid and zooms: each
stage halves the window around the incumbent best.  The batched evaluation
mirrors the package formulas term by term but goes through its own 1-D FFT
path, so agreement is meaningful.  Convexity of the functional for t <= h
keeps the minimizer inside the shrinking windows.
"""
import math

import numpy as np


class BatchFunctional:
    """F_t over batches of phase-0 fraction vectors, two phases, dim 1."""

    def __init__(self, grid, chi, zeta, sigma, h):
        if grid.dim != 1 or chi.phase_count != 2:
            raise ValueError("reference functional covers P=2, dim 1 only")
        if abs(sigma.entries[0, 1] - 1.0) > 0:
            raise ValueError("reference functional assumes sigma_01 = 1")
        self.n = grid.n
        self.dx = grid.dx
        self.h = h
        self.root_h = math.sqrt(h)
        self.zv = zeta.values
        self.chi0 = chi.phase_indicators()[0]
        k = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)
        self.mult_g = np.exp(-0.5 * h * k**2)
        self.mult_half = np.exp(-0.25 * h * k**2)
        comm = [
            self.zv * self._conv(c, self.mult_g) - self._conv(self.zv * c, self.mult_g)
            for c in chi.phase_indicators()
        ]
        self.comm_diff = comm[1] - comm[0]

    def _conv(self, a, mult):
        return np.fft.irfft(np.fft.rfft(a, axis=-1) * mult, n=self.n, axis=-1)

    def __call__(self, f, t):
        u0, u1 = f, 1.0 - f
        w = f - self.chi0
        term1 = (self.zv * (u0 * self._conv(u1, self.mult_g)
                            + u1 * self._conv(u0, self.mult_g))).sum(axis=-1)
        term2 = (w * self.comm_diff).sum(axis=-1)
        kw = self._conv(w, self.mult_half)
        comm_kw = self.zv * self._conv(kw, self.mult_half) - self._conv(
            self.zv * kw, self.mult_half
        )
        term3 = 2.0 * (w * comm_kw).sum(axis=-1)
        e_loc = (term1 + term2 + term3) * self.dx / self.root_h
        diss = 2.0 * (self.zv * kw**2).sum(axis=-1) * self.dx / self.root_h
        return e_loc + (self.h / t) * diss


def zoom_minimize(functional, t, n, stages=16, points=5):
    offsets = np.array(
        np.meshgrid(*[np.linspace(-1.0, 1.0, points)] * n, indexing="ij")
    ).reshape(n, -1).T
    center = np.full(n, 0.5)
    halfwin = 0.5
    best_val, best_f = math.inf, center
    for _ in range(stages):
        cand = np.clip(center[None] + halfwin * offsets, 0.0, 1.0)
        vals = functional(cand, t)
        i = int(np.argmin(vals))
        best_val, best_f = float(vals[i]), cand[i]
        center = best_f
        halfwin /= 2.0
    return best_val, best_f
