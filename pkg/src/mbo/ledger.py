"""Discrete energy ledger: the per-step accounting behind Brakke's inequality.

For a trajectory chi^0 ... chi^N and a localization weight zeta, each row
records the energy, the step dissipation, squared slope lower bounds at the
new partition and along the De Giorgi interpolant, and the localization
increment (E_h(chi^n, chi^{n-1}; zeta) - E_h(chi^n, chi^n; zeta)) / h.  The
ledger then asserts, for every prefix length N',

    (h/2) sum slope_chi_sq + (h/2) sum slope_int_sq + h sum increment
        <= E_h(chi^0, chi^0; zeta) - E_h(chi^N', chi^N'; zeta) + tol,

with tol = 1e-6 * E_h(chi^0, chi^0; zeta) plus the reported quadrature
budget of the slope time integral.  Slope columns are lower bounds and the
increments are evaluated exactly, so the test is a logically implied
inequality: a violation beyond tolerance indicates a bug, not bad luck.  The
global energy-dissipation estimate (no localization) is checked alongside.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energetics import dissipation_sq, energy_eh, interface_measure_zeta, localized_energy
from .errors import LedgerInequalityError, ValidationError
from .variational import DEFAULT_SOLVER, degiorgi_interpolant_curve, log_spaced_times
from .variations import slope_lower_bound

CSV_COLUMNS = (
    "n",
    "t",
    "e_h",
    "diss",
    "slope_chi_sq",
    "slope_int_sq",
    "increment",
    "e_loc_start",
    "e_loc_end",
    "flags",
)

RELATIVE_TOL = 1e-6


@dataclass
class BrakkeLedgerRow:
    n: int
    t: float
    e_h: float
    diss: float
    slope_chi_sq: float
    slope_int_sq: float
    increment: float
    e_loc_start: float
    e_loc_end: float
    flags: str = ""


@dataclass(frozen=True)
class LedgerSettings:
    t_samples: int = 8
    t_span: float = 4096.0
    dictionary: tuple = ()
    solver: object = DEFAULT_SOLVER
    min_zeta: float = 0.0  # slope columns need zeta bounded away from 0


@dataclass
class LedgerReport:
    rows: list
    h: float
    zeta_label: str
    lhs: float
    rhs: float
    tolerance: float
    quadrature_budget: float
    inequality_ok: bool
    energy_estimate_ok: bool
    first_violation: int = -1

    def lhs_terms(self):
        h = self.h
        a = 0.5 * h * sum(r.slope_chi_sq for r in self.rows)
        b = 0.5 * h * sum(r.slope_int_sq for r in self.rows)
        c = h * sum(r.increment for r in self.rows)
        return a, b, c


def _slope_integral(curve, chi_prev, zeta, sigma, h, dictionary):
    """Time-averaged squared slope along the interpolant samples.

    Non-converged samples are excluded (their quadrature weight is dropped,
    which can only lower this lower-bound term); the returned budget bounds
    the first-order quadrature error of the included samples.
    """
    values = []
    weights = []
    dropped = 0
    for res, w in zip(curve.results, curve.weights):
        if not res.converged:
            dropped += 1
            continue
        est = slope_lower_bound(res.u, chi_prev, zeta, sigma, h, dictionary)
        values.append(est.value_sq)
        weights.append(w)
    if not values:
        return 0.0, 0.0, dropped
    values = np.asarray(values)
    weights = np.asarray(weights)
    integral = float((values * weights).sum()) / h
    variation = np.abs(np.diff(values))
    budget = float((variation * weights[1:]).sum()) / h if values.size > 1 else 0.0
    return integral, budget, dropped


def build_ledger(
    trajectory, zeta, sigma, settings=None, raise_on_violation=True
):
    """Assemble rows and test the prefix inequalities.

    Returns a LedgerReport; raises LedgerInequalityError (with the offending
    row) if the inequality fails beyond tolerance and raising is enabled.
    """
    settings = settings or LedgerSettings()
    h = trajectory.h
    if trajectory.step_count < 1:
        raise ValidationError("ledger needs at least one step")
    grid = trajectory[0].grid
    use_slopes = len(settings.dictionary) > 0
    if use_slopes and settings.min_zeta > 0.0 and zeta.floor < settings.min_zeta:
        raise ValidationError(
            f"slope columns need zeta >= {settings.min_zeta}, floor is {zeta.floor}"
        )

    times = log_spaced_times(h, settings.t_samples, span=settings.t_span)
    rows = []
    budget_total = 0.0
    e_loc_0 = interface_measure_zeta(trajectory[0], sigma, h, zeta=zeta, grid=grid)
    tol_base = RELATIVE_TOL * abs(e_loc_0)

    lhs_running = 0.0
    inequality_ok = True
    first_violation = -1
    report_rhs = 0.0

    for n in range(1, trajectory.step_count + 1):
        chi_prev = trajectory[n - 1]
        chi_n = trajectory[n]
        flags = []

        e_h = energy_eh(chi_n, sigma, h, grid=grid)
        diss = dissipation_sq(chi_n, chi_prev, sigma, h, grid=grid)
        e_loc_start = interface_measure_zeta(chi_prev, sigma, h, zeta=zeta, grid=grid)
        e_loc_end = interface_measure_zeta(chi_n, sigma, h, zeta=zeta, grid=grid)
        increment = (
            localized_energy(chi_n, chi_prev, zeta, sigma, h, grid=grid) - e_loc_end
        ) / h

        slope_chi_sq = 0.0
        slope_int_sq = 0.0
        if use_slopes:
            est = slope_lower_bound(chi_n, chi_prev, zeta, sigma, h, settings.dictionary)
            slope_chi_sq = est.value_sq
            if est.degenerate:
                flags.append("slope_degenerate")
            curve = degiorgi_interpolant_curve(
                chi_prev, h, zeta, sigma, times=times, settings=settings.solver
            )
            slope_int_sq, budget, dropped = _slope_integral(
                curve, chi_prev, zeta, sigma, h, settings.dictionary
            )
            budget_total += 0.5 * h * budget
            if dropped:
                flags.append(f"solver_nonconv:{dropped}")

        rows.append(
            BrakkeLedgerRow(
                n=n,
                t=n * h,
                e_h=e_h,
                diss=diss,
                slope_chi_sq=slope_chi_sq,
                slope_int_sq=slope_int_sq,
                increment=increment,
                e_loc_start=e_loc_start,
                e_loc_end=e_loc_end,
                flags=";".join(flags),
            )
        )

        lhs_running += 0.5 * h * slope_chi_sq + 0.5 * h * slope_int_sq + h * increment
        rhs = e_loc_0 - e_loc_end
        tolerance = tol_base + budget_total
        report_rhs = rhs
        if inequality_ok and lhs_running > rhs + tolerance:
            inequality_ok = False
            first_violation = n

    # global (unlocalized) energy-dissipation estimate, exact up to rounding
    e0 = energy_eh(trajectory[0], sigma, h, grid=grid)
    energy_estimate_ok = True
    running = 0.0
    for row in rows:
        running += row.diss
        if row.e_h + running > e0 * (1.0 + 1e-8) + 1e-14:
            energy_estimate_ok = False
            break

    report = LedgerReport(
        rows=rows,
        h=h,
        zeta_label=getattr(zeta, "label", "zeta"),
        lhs=lhs_running,
        rhs=report_rhs,
        tolerance=tol_base + budget_total,
        quadrature_budget=budget_total,
        inequality_ok=inequality_ok,
        energy_estimate_ok=energy_estimate_ok,
        first_violation=first_violation,
    )
    if raise_on_violation and not inequality_ok:
        row = rows[first_violation - 1]
        raise LedgerInequalityError(
            f"ledger inequality violated at step {first_violation}: "
            f"lhs exceeds rhs + tol (row: {row})",
            first_violation,
            report.lhs,
            report.rhs + report.tolerance,
        )
    if raise_on_violation and not energy_estimate_ok:
        raise LedgerInequalityError(
            "energy-dissipation estimate violated", -1, 0.0, e0
        )
    return report


def format_g17(x):
    return format(float(x), ".17g")


def write_ledger_csv(report, path):
    """Deterministic CSV: fixed column order, %.17g floats."""
    lines = [",".join(CSV_COLUMNS)]
    for r in report.rows:
        lines.append(
            ",".join(
                [
                    str(r.n),
                    format_g17(r.t),
                    format_g17(r.e_h),
                    format_g17(r.diss),
                    format_g17(r.slope_chi_sq),
                    format_g17(r.slope_int_sq),
                    format_g17(r.increment),
                    format_g17(r.e_loc_start),
                    format_g17(r.e_loc_end),
                    r.flags,
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
