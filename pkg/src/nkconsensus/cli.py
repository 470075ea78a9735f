"""Command-line interface: run, sweep, validate, meanfield.

Flags mirror the JSON config fields and override file values. Exit codes:
0 on success, 1 when oracle validation fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import meanfield
from .experiment import (
    SWEEP_AXES,
    ConfigError,
    ExperimentConfig,
    load_config,
    run_ensemble,
    sweep,
    validate,
    validate_config,
    write_config_json,
    write_run_outputs,
    write_sweep_outputs,
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--M", type=int, help="group size")
    parser.add_argument("--N", type=int, help="number of decisions")
    parser.add_argument("--K", type=int, help="couplings per decision, in [0, N-1]")
    parser.add_argument("--p", type=float, help="knowledge density in [0, 1]")
    parser.add_argument("--beta-j", type=float, dest="betaJ", help="social coupling beta*J")
    parser.add_argument(
        "--beta-prime", type=float, dest="betaPrime", help="payoff certainty beta'"
    )
    parser.add_argument("--realizations", type=int, help="ensemble size")
    parser.add_argument("--t-end", type=float, dest="t_end", help="simulated time span")
    parser.add_argument("--samples", type=int, help="number of output grid points")
    parser.add_argument(
        "--steady-window", type=float, dest="steady_window", help="steady-state window length T"
    )
    parser.add_argument(
        "--steady-tol", type=float, dest="steady_tol", help="steady-state tolerance"
    )
    parser.add_argument("--master-seed", type=int, dest="master_seed", help="ensemble master seed")
    parser.add_argument(
        "--landscape-policy",
        choices=["per-realization", "shared"],
        dest="landscape_policy",
        help="fresh landscape per realization, or one shared across the ensemble",
    )
    parser.add_argument("--out", type=Path, help="output directory")


_FLAG_FIELDS = {
    "M": "M",
    "N": "N",
    "K": "K",
    "p": "p",
    "betaJ": "beta_j",
    "betaPrime": "beta_prime",
    "realizations": "realizations",
    "t_end": "t_end",
    "samples": "samples",
    "steady_window": "steady_window",
    "steady_tol": "steady_tol",
    "master_seed": "master_seed",
    "landscape_policy": "landscape_policy",
}


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        field: getattr(args, flag)
        for flag, field in _FLAG_FIELDS.items()
        if getattr(args, flag, None) is not None
    }
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = str(args.out)
    cfg = replace(cfg, **overrides)
    validate_config(cfg)
    return cfg


def _resolve_out(cfg: ExperimentConfig, default: str) -> Path:
    return Path(cfg.output_dir) if cfg.output_dir else Path(default)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    result = run_ensemble(cfg)
    out = write_run_outputs(
        result,
        _resolve_out(cfg, "runs/run"),
        plot=not args.no_plot,
        save_trajectories=args.save_trajectories,
    )
    sys.stdout.write((out / "report.txt").read_text())
    print(f"outputs written to {out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"--values must be a comma-separated number list, got {args.values!r}")
    if not values:
        raise ConfigError("--values must contain at least one number")
    result = sweep(cfg, args.axis, values)
    out = write_sweep_outputs(result, cfg, _resolve_out(cfg, "runs/sweep"), plot=not args.no_plot)
    sys.stdout.write((out / "report.txt").read_text())
    print(f"outputs written to {out}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    report = validate(cfg, n_events=args.events)
    text = report.text(cfg)
    sys.stdout.write(text)
    if args.out is not None:
        from .exact_oracle import write_stationary_csv

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text)
        write_config_json(cfg, out / "config.json")
        write_stationary_csv(report.stationary, out / "stationary.csv")
    return 0 if report.ok else 1


def _cmd_meanfield(args: argparse.Namespace) -> int:
    if args.x_values:
        try:
            xs = np.array([float(v) for v in args.x_values.split(",")])
        except ValueError:
            raise ConfigError(f"--x-values must be comma-separated numbers, got {args.x_values!r}")
    else:
        if args.x_max <= args.x_min:
            raise ConfigError("--x-max must exceed --x-min")
        xs = np.linspace(args.x_min, args.x_max, args.points)
    if np.any(xs < 0):
        raise ConfigError("couplings must be nonnegative")
    table = meanfield.magnetization_table(xs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "meanfield.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m_beta_j", "magnetization"])
        for x, m in table:
            writer.writerow([f"{x:.9g}", f"{m:.9g}"])
    if not args.no_plot:
        from . import plotting

        plotting.save_meanfield_figure(table, out / "meanfield.png")
    if args.team_size is not None:
        print(f"critical coupling for M={args.team_size}: "
              f"{meanfield.critical_coupling(args.team_size):.9g}")
    print(f"outputs written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nkconsensus",
        description=(
            "Collective decision-making on rugged fitness landscapes: "
            "exact stochastic simulation of consensus-coupled opinion dynamics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one ensemble and write curves")
    _add_config_flags(run_p)
    run_p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    run_p.add_argument(
        "--save-trajectories", action="store_true",
        help="also stream per-realization samples to trajectories.csv",
    )
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run one ensemble per parameter value")
    _add_config_flags(sweep_p)
    sweep_p.add_argument("--axis", required=True, choices=list(SWEEP_AXES))
    sweep_p.add_argument("--values", required=True, help="comma-separated axis values")
    sweep_p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    sweep_p.set_defaults(func=_cmd_sweep)

    val_p = sub.add_parser(
        "validate", help="cross-check simulation against exact enumeration (M*N <= 16)"
    )
    _add_config_flags(val_p)
    val_p.add_argument(
        "--events", type=int, default=1_000_000,
        help="trajectory length for the occupancy comparison",
    )
    val_p.set_defaults(func=_cmd_validate)

    mf_p = sub.add_parser("meanfield", help="tabulate mean-field magnetization vs M*beta*J")
    mf_p.add_argument("--x-min", type=float, default=0.0)
    mf_p.add_argument("--x-max", type=float, default=3.0)
    mf_p.add_argument("--points", type=int, default=61)
    mf_p.add_argument("--x-values", help="explicit comma-separated couplings (overrides range)")
    mf_p.add_argument("--team-size", type=int, help="also print the critical coupling 1/M")
    mf_p.add_argument("--out", type=Path, default=Path("runs/meanfield"))
    mf_p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    mf_p.set_defaults(func=_cmd_meanfield)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
