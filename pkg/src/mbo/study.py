"""Refinement studies: run one scenario across a ladder of time steps.

Each rung runs the thresholding scheme to a fixed horizon and records the
time-integrated energy sum(h * E_h(chi^n)) over n < N, the extinction time
(first time a single phase covers the grid, if any), and the energy
comparison E_{4h} <= E_h at the initial data.  Where a closed-form oracle
exists (stripe is stationary, a disk shrinks by dA/dt = -pi per unit
tension) the relative error is recorded so the ladder exposes the
convergence trend.  Rungs are independent and run on a thread pool sized by
the MBO_THREADS environment variable (FFT work releases the GIL).
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energetics import GAUSSIAN_FIRST_MOMENT, energy_eh
from .errors import ValidationError
from .grid import make_grid
from .ledger import format_g17
from .scheme import run
from .shapes import default_phase_count, interface_area, rasterize
from .tensions import sigma_preset

STUDY_COLUMNS = (
    "h",
    "n_steps",
    "e_h_initial",
    "e_4h_initial",
    "energy_time_integral",
    "extinction_time",
    "final_energy",
    "oracle_error",
    "flags",
)


@dataclass(frozen=True)
class StudyConfig:
    shape: object
    grid_n: int
    dim: int = 2
    period: float = 1.0
    sigma_name: str = "uniform"
    phase_count: int = 0  # 0 means the shape default
    horizon: float = 0.04
    h_values: tuple = ()
    h_coarsest: float = 0.004
    rungs: int = 4

    def resolved_h_values(self):
        if self.h_values:
            return tuple(float(h) for h in self.h_values)
        return tuple(self.h_coarsest / 4.0**k for k in range(self.rungs))


@dataclass
class StudyRung:
    h: float
    n_steps: int
    e_h_initial: float
    e_4h_initial: float
    energy_time_integral: float
    extinction_time: float  # nan when no extinction before the horizon
    final_energy: float
    oracle_error: float  # nan when no closed form applies
    flags: str = ""


@dataclass
class StudyResult:
    config: StudyConfig
    rungs: list
    monotone_energy_ok: bool
    oracle_trend_ok: bool

    def summary_dict(self):
        return {
            "grid_n": self.config.grid_n,
            "dim": self.config.dim,
            "sigma": self.config.sigma_name,
            "horizon": self.config.horizon,
            "h_values": [r.h for r in self.rungs],
            "energy_time_integrals": [r.energy_time_integral for r in self.rungs],
            "oracle_errors": [r.oracle_error for r in self.rungs],
            "extinction_times": [r.extinction_time for r in self.rungs],
            "monotone_energy_ok": self.monotone_energy_ok,
            "oracle_trend_ok": self.oracle_trend_ok,
        }


def _thread_count():
    raw = os.environ.get("MBO_THREADS", "")
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ValidationError(f"MBO_THREADS must be an integer, got {raw!r}")
    if count < 1:
        raise ValidationError(f"MBO_THREADS must be >= 1, got {count}")
    return count


def _stripe_oracle(spec, sigma, grid, h, energy_integral, horizon):
    """A flat stripe is stationary: E_h stays at its initial value."""
    area = interface_area(spec, grid)
    exact_e = 2.0 * GAUSSIAN_FIRST_MOMENT * sigma.entries[0, 1] * area
    exact_integral = exact_e * horizon
    return abs(energy_integral - exact_integral) / exact_integral


def _disk_oracle(spec, sigma, grid, h, energy_integral, horizon):
    """Shrinking disk: r(t)^2 = r0^2 - t while r > 0, perimeter 2 pi r(t)."""
    r0 = spec.radius * grid.period
    t_ext = min(r0 * r0, horizon)
    # integral of 2 pi r(t) dt = (4 pi / 3) (r0^3 - r(T)^3)
    r_end = math.sqrt(max(r0 * r0 - t_ext, 0.0))
    perim_integral = (4.0 * math.pi / 3.0) * (r0**3 - r_end**3)
    exact = 2.0 * GAUSSIAN_FIRST_MOMENT * sigma.entries[0, 1] * perim_integral
    return abs(energy_integral - exact) / exact


def _run_rung(config, spec, sigma, chi0, grid, h):
    horizon = config.horizon
    n_steps = max(1, int(round(horizon / h)))
    flags = []
    if abs(n_steps * h - horizon) > 1e-9 * horizon:
        flags.append("horizon_rounded")
    if math.sqrt(h) < 2.0 * grid.dx:
        flags.append("kernel_underresolved")

    traj = run(chi0, sigma, h, n_steps)
    e_vals = [energy_eh(traj[n], sigma, h, grid=grid) for n in range(n_steps)]
    energy_integral = h * float(np.sum(e_vals))
    final_energy = energy_eh(traj[n_steps], sigma, h, grid=grid)

    extinction = math.nan
    for n in range(1, n_steps + 1):
        if len(np.unique(traj[n].labels)) == 1:
            extinction = n * h
            break

    e_h0 = energy_eh(chi0, sigma, h, grid=grid)
    e_4h0 = energy_eh(chi0, sigma, 4.0 * h, grid=grid)
    if e_4h0 > e_h0 * (1.0 + 1e-10):
        flags.append("monotonicity_fail")

    oracle_error = math.nan
    if spec.kind == "stripe":
        oracle_error = _stripe_oracle(spec, sigma, grid, h, energy_integral, horizon)
    elif spec.kind == "disk":
        oracle_error = _disk_oracle(spec, sigma, grid, h, energy_integral, horizon)

    return StudyRung(
        h=h,
        n_steps=n_steps,
        e_h_initial=e_h0,
        e_4h_initial=e_4h0,
        energy_time_integral=energy_integral,
        extinction_time=extinction,
        final_energy=final_energy,
        oracle_error=oracle_error,
        flags=";".join(flags),
    )


def refinement_study(config):
    grid = make_grid(config.grid_n, config.dim, config.period)
    spec = config.shape
    phase_count = config.phase_count or default_phase_count(spec)
    sigma = sigma_preset(config.sigma_name, phase_count)
    chi0 = rasterize(spec, grid, phase_count)

    h_values = config.resolved_h_values()
    workers = min(_thread_count(), len(h_values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rungs = list(
                pool.map(lambda h: _run_rung(config, spec, sigma, chi0, grid, h), h_values)
            )
    else:
        rungs = [_run_rung(config, spec, sigma, chi0, grid, h) for h in h_values]

    monotone_ok = all("monotonicity_fail" not in r.flags for r in rungs)
    errs = [r.oracle_error for r in rungs if not math.isnan(r.oracle_error)]
    # trend check: finest rung should not be worse than the coarsest
    oracle_trend_ok = bool(len(errs) < 2 or errs[-1] <= errs[0] * (1.0 + 1e-12))
    return StudyResult(config=config, rungs=rungs, monotone_energy_ok=monotone_ok,
                       oracle_trend_ok=oracle_trend_ok)


def write_study_csv(result, path):
    lines = [",".join(STUDY_COLUMNS)]
    for r in result.rungs:
        lines.append(
            ",".join(
                [
                    format_g17(r.h),
                    str(r.n_steps),
                    format_g17(r.e_h_initial),
                    format_g17(r.e_4h_initial),
                    format_g17(r.energy_time_integral),
                    format_g17(r.extinction_time),
                    format_g17(r.final_energy),
                    format_g17(r.oracle_error),
                    r.flags,
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_study_summary(result, path):
    with open(path, "w") as fh:
        json.dump(result.summary_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
