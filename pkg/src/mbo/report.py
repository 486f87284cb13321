"""Static figures rendered next to the delimited output.

Everything goes through the Agg backend straight to files; nothing here
opens a window.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg", force=False)

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_ledger_figure(report, path):
    """Two panels: energy traces over time, and the running inequality."""
    rows = report.rows
    t = np.array([r.t for r in rows])
    e_h = np.array([r.e_h for r in rows])
    e_loc = np.array([r.e_loc_end for r in rows])
    h = report.h

    lhs = np.cumsum(
        [0.5 * h * r.slope_chi_sq + 0.5 * h * r.slope_int_sq + h * r.increment for r in rows]
    )
    e_loc_0 = rows[0].e_loc_start
    rhs = e_loc_0 - e_loc

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax0.plot(t, e_h, marker="o", ms=3, label="energy")
    ax0.plot(t, e_loc, marker="s", ms=3, label=f"localized ({report.zeta_label})")
    ax0.set_xlabel("time")
    ax0.set_ylabel("approximate interface energy")
    ax0.legend(frameon=False)

    ax1.plot(t, lhs, marker="o", ms=3, label="dissipation terms")
    ax1.plot(t, rhs, marker="s", ms=3, label="energy drop")
    ax1.set_xlabel("time")
    ax1.set_ylabel("running ledger sides")
    ax1.legend(frameon=False)
    ax1.set_title("ok" if report.inequality_ok else "VIOLATED", fontsize=9)

    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def render_study_figure(result, path):
    """Oracle error and time-integrated energy against the step size."""
    rungs = result.rungs
    h = np.array([r.h for r in rungs])
    integral = np.array([r.energy_time_integral for r in rungs])
    err = np.array([r.oracle_error for r in rungs])

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax0.plot(h, integral, marker="o")
    ax0.set_xscale("log")
    ax0.set_xlabel("time step h")
    ax0.set_ylabel("time-integrated energy")

    mask = ~np.isnan(err)
    if mask.any() and (err[mask] > 0).any():
        ax1.plot(h[mask], np.maximum(err[mask], 1e-17), marker="o")
        ax1.set_xscale("log")
        ax1.set_yscale("log")
    ax1.set_xlabel("time step h")
    ax1.set_ylabel("relative oracle error")

    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def render_volume_figure(trajectory, path):
    """Per-phase volume fractions over time; flags mass exchange at a glance."""
    volumes = trajectory.phase_volumes()
    t = trajectory.h * np.arange(volumes.shape[0])

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for i in range(volumes.shape[1]):
        ax.plot(t, volumes[:, i], label=f"phase {i}")
    ax.set_xlabel("time")
    ax.set_ylabel("volume fraction")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
