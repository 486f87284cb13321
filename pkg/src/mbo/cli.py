"""Command-line entry points.

Subcommands:

    run             evolve a configuration, write state dumps and frames
    ledger          run and assemble the per-step energy ledger
    study           time-step refinement study for one scenario
    validate-sigma  check a surface-tension matrix, print its negativity bound
    render          convert a state dump to PGM or PNG

Exit codes: 0 success, 2 invalid input, 3 ledger inequality violation,
64 usage error.  Every run directory gets a manifest.json listing the
resolved configuration and the files written; no timestamps, so identical
configurations produce byte-identical delimited output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import LedgerInequalityError, ValidationError
from .fileio import read_dump, write_dump, write_pgm, write_png
from .grid import make_grid
from .ledger import LedgerSettings, build_ledger, format_g17, write_ledger_csv
from .scheme import run as run_scheme
from .shapes import default_phase_count, parse_shape, rasterize
from .study import StudyConfig, refinement_study, write_study_csv, write_study_summary
from .tensions import sigma_preset, validate_sigma
from .testfields import build_dictionary, zeta_preset
from .variational import SolverSettings

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_LEDGER = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; we reserve 2 for validation."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_scenario_args(p):
    p.add_argument("--config", help="JSON file with defaults for any option")
    p.add_argument("--shape", help="shape spec, e.g. disk:0.3 or voronoi::42")
    p.add_argument("--n", type=int, help="cells per axis")
    p.add_argument("--dim", type=int, help="spatial dimension (default 2)")
    p.add_argument("--period", type=float, help="torus period (default 1.0)")
    p.add_argument("--phases", type=int, help="phase count (default: shape's)")
    p.add_argument("--sigma", help="tension preset: uniform, read-shockley, @file")
    p.add_argument("--theta", help="comma list of orientations for read-shockley")
    p.add_argument("--h", type=float, help="time step")
    p.add_argument("--steps", type=int, help="number of steps")
    p.add_argument("--out", help="output directory")


def _build_parser():
    parser = _Parser(prog="mbo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="evolve and dump states")
    _add_scenario_args(p_run)
    p_run.add_argument("--dump-every", type=int, help="dump cadence in steps (0: ends only)")
    p_run.add_argument("--png", action="store_true", default=None,
                       help="render PNG frames next to the PGM ones")

    p_led = sub.add_parser("ledger", help="run and assemble the energy ledger")
    _add_scenario_args(p_led)
    p_led.add_argument("--zeta", help="localization weight: constant, cos-bump, gauss-bump")
    p_led.add_argument("--max-mode", type=int, help="Fourier dictionary cutoff (0: no slopes)")
    p_led.add_argument("--t-samples", type=int, help="interpolant samples per step")
    p_led.add_argument("--radial-center", help="x,y center for a radial dictionary field")
    p_led.add_argument("--no-figure", action="store_true", default=None,
                       help="skip the rendered figure")

    p_study = sub.add_parser("study", help="time-step refinement study")
    _add_scenario_args(p_study)
    p_study.add_argument("--horizon", type=float, help="final time for every rung")
    p_study.add_argument("--h-coarsest", type=float, help="largest time step")
    p_study.add_argument("--rungs", type=int, help="number of quarterings")

    p_val = sub.add_parser("validate-sigma", help="validate a tension matrix")
    p_val.add_argument("--preset", help="uniform or read-shockley")
    p_val.add_argument("--phases", type=int, help="phase count for uniform")
    p_val.add_argument("--theta", help="comma list of orientations for read-shockley")
    p_val.add_argument("--file", help="whitespace matrix file")

    p_ren = sub.add_parser("render", help="convert a state dump to an image")
    p_ren.add_argument("dump", help="state dump file")
    p_ren.add_argument("-o", "--output", required=True, help="output image path")
    p_ren.add_argument("--format", choices=("pgm", "png"),
                       help="default: from the output extension")
    return parser


def _merge_config(args, defaults):
    """Layer: hard defaults < JSON config < explicit flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValidationError(f"config {args.config} must hold a JSON object")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in defaults:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            merged[key] = val
    return merged


_SCENARIO_DEFAULTS = {
    "shape": "disk:0.3",
    "n": 128,
    "dim": 2,
    "period": 1.0,
    "phases": 0,
    "sigma": "uniform",
    "theta": "",
    "h": 1e-3,
    "steps": 10,
    "out": "mbo-out",
}


def _resolve_sigma(name, phase_count, theta):
    if name.startswith("@"):
        entries = np.loadtxt(name[1:], dtype=np.float64, ndmin=2)
        return validate_sigma(entries)
    if name in ("read-shockley", "read_shockley"):
        if not theta:
            raise ValidationError("read-shockley needs --theta, e.g. --theta 0,4,9")
        angles = [float(x) for x in theta.split(",")]
        return sigma_preset("read-shockley", theta_deg=angles)
    return sigma_preset(name, phase_count=phase_count)


def _prepare_scenario(cfg):
    spec = parse_shape(cfg["shape"])
    grid = make_grid(cfg["n"], cfg["dim"], cfg["period"])
    phase_count = cfg["phases"] or default_phase_count(spec)
    sigma = _resolve_sigma(cfg["sigma"], phase_count, cfg["theta"])
    if sigma.phase_count != phase_count:
        raise ValidationError(
            f"sigma has {sigma.phase_count} phases, scenario has {phase_count}"
        )
    chi0 = rasterize(spec, grid, phase_count)
    return spec, grid, sigma, chi0


def _write_manifest(out_dir, command, cfg, files):
    manifest = {
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "files": sorted(files),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_run(args):
    defaults = dict(_SCENARIO_DEFAULTS, **{"dump-every": 0, "png": False})
    cfg = _merge_config(args, defaults)
    _, grid, sigma, chi0 = _prepare_scenario(cfg)
    out = cfg["out"]
    os.makedirs(os.path.join(out, "dumps"), exist_ok=True)
    os.makedirs(os.path.join(out, "frames"), exist_ok=True)

    every = cfg["dump-every"]
    steps = cfg["steps"]
    written = []

    def checkpoint(n, part):
        if not (n in (0, steps) or (every > 0 and n % every == 0)):
            return
        dump = f"dumps/state_{n:06d}.mbo"
        write_dump(part, os.path.join(out, dump))
        written.append(dump)
        if grid.dim == 2:
            frame = f"frames/frame_{n:06d}.pgm"
            write_pgm(part, os.path.join(out, frame))
            written.append(frame)
            if cfg["png"]:
                png = f"frames/frame_{n:06d}.png"
                write_png(part, os.path.join(out, png))
                written.append(png)

    traj = run_scheme(chi0, sigma, cfg["h"], steps, callback=checkpoint)

    volumes = traj.phase_volumes()
    lines = [",".join(["n", "t"] + [f"vol_{i}" for i in range(volumes.shape[1])])]
    for n in range(volumes.shape[0]):
        row = [str(n), format_g17(n * cfg["h"])]
        row += [format_g17(v) for v in volumes[n]]
        lines.append(",".join(row))
    with open(os.path.join(out, "volumes.csv"), "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    written.append("volumes.csv")

    from .report import render_volume_figure

    render_volume_figure(traj, os.path.join(out, "volumes.png"))
    written.append("volumes.png")

    _write_manifest(out, "run", cfg, written)
    print(f"run: {steps} steps on {grid.n}^{grid.dim}, output in {out}")
    return EXIT_OK


def _cmd_ledger(args):
    defaults = dict(
        _SCENARIO_DEFAULTS,
        **{
            "zeta": "cos-bump",
            "max-mode": 2,
            "t-samples": 6,
            "radial-center": "",
            "no-figure": False,
        },
    )
    cfg = _merge_config(args, defaults)
    _, grid, sigma, chi0 = _prepare_scenario(cfg)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)

    traj = run_scheme(chi0, sigma, cfg["h"], cfg["steps"])
    zeta = zeta_preset(cfg["zeta"], grid)

    centers = ()
    if cfg["radial-center"]:
        centers = (tuple(float(x) for x in cfg["radial-center"].split(",")),)
    dictionary = ()
    if cfg["max-mode"] > 0:
        dictionary = build_dictionary(grid, max_mode=cfg["max-mode"],
                                      radial_centers=centers)

    settings = LedgerSettings(
        t_samples=cfg["t-samples"], dictionary=dictionary, solver=SolverSettings()
    )
    report = build_ledger(traj, zeta, sigma, settings, raise_on_violation=False)

    written = ["ledger.csv"]
    write_ledger_csv(report, os.path.join(out, "ledger.csv"))
    if not cfg["no-figure"]:
        from .report import render_ledger_figure

        render_ledger_figure(report, os.path.join(out, "ledger.png"))
        written.append("ledger.png")
    _write_manifest(out, "ledger", cfg, written)

    a, b, c = report.lhs_terms()
    print(
        f"ledger: {len(report.rows)} steps, slope terms {a + b:.6g}, "
        f"increments {c:.6g}, energy drop {report.rhs:.6g}"
    )
    if not report.inequality_ok:
        print(
            f"ledger inequality violated at step {report.first_violation}: "
            f"lhs {report.lhs:.9g} > rhs {report.rhs:.9g} + tol {report.tolerance:.3g}",
            file=sys.stderr,
        )
        return EXIT_LEDGER
    if not report.energy_estimate_ok:
        print("energy-dissipation estimate violated", file=sys.stderr)
        return EXIT_LEDGER
    return EXIT_OK


def _cmd_study(args):
    defaults = dict(
        _SCENARIO_DEFAULTS, **{"horizon": 0.04, "h-coarsest": 4e-3, "rungs": 3}
    )
    cfg = _merge_config(args, defaults)
    spec = parse_shape(cfg["shape"])
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)

    config = StudyConfig(
        shape=spec,
        grid_n=cfg["n"],
        dim=cfg["dim"],
        period=cfg["period"],
        sigma_name=cfg["sigma"],
        phase_count=cfg["phases"],
        horizon=cfg["horizon"],
        h_coarsest=cfg["h-coarsest"],
        rungs=cfg["rungs"],
    )
    result = refinement_study(config)

    write_study_csv(result, os.path.join(out, "study.csv"))
    write_study_summary(result, os.path.join(out, "study_summary.json"))
    from .report import render_study_figure

    render_study_figure(result, os.path.join(out, "study.png"))
    _write_manifest(out, "study", cfg,
                    ["study.csv", "study_summary.json", "study.png"])

    flags = "ok" if (result.monotone_energy_ok and result.oracle_trend_ok) else "check flags"
    print(f"study: {len(result.rungs)} rungs, {flags}, output in {out}")
    return EXIT_OK


def _cmd_validate_sigma(args):
    if args.file:
        entries = np.loadtxt(args.file, dtype=np.float64, ndmin=2)
        sigma = validate_sigma(entries)
    elif args.preset:
        theta = args.theta or ""
        sigma = _resolve_sigma(args.preset, args.phases, theta)
    else:
        raise ValidationError("validate-sigma needs --file or --preset")
    print(
        f"ok: {sigma.phase_count} phases, "
        f"negativity bound {sigma.sigma_lower_bound:.12g}"
    )
    return EXIT_OK


def _cmd_render(args):
    part = read_dump(args.dump)
    fmt = args.format
    if fmt is None:
        ext = os.path.splitext(args.output)[1].lower().lstrip(".")
        if ext not in ("pgm", "png"):
            raise ValidationError(f"cannot infer format from extension {ext!r}")
        fmt = ext
    if fmt == "pgm":
        write_pgm(part, args.output)
    else:
        write_png(part, args.output)
    print(f"render: wrote {args.output}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "ledger": _cmd_ledger,
    "study": _cmd_study,
    "validate-sigma": _cmd_validate_sigma,
    "render": _cmd_render,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LedgerInequalityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LEDGER
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
