"""Configuration, seeded ensembles, parameter sweeps, and result persistence.

An ensemble runs independent realizations with seeds derived from one master
seed. Each realization draws its own competence matrix (and, by default, its
own landscape), simulates the opinion chain, and is normalized by its own
landscape optimum. Outputs are deterministic functions of the configuration.

Seed scheme: realization r uses ``SeedSequence(master_seed, spawn_key=(0, r))``
split into landscape / competence / trajectory children; a shared landscape
uses spawn key (1, 0) and the validation instance (2, 0). Trajectory seeds
split once more inside :func:`nkconsensus.dynamics.trajectory_streams`.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import exact_oracle, metrics
from .dynamics import occupancy_trajectory, simulate_trajectory, write_trajectories_csv
from .landscape import (
    Landscape,
    generate_competence,
    generate_landscape,
    global_max,
)
from .metrics import ObservableCurve, ensemble_average, steady_state_value
from .multiplex import Coupling, Multiplex, build_complete_multiplex, multiplex_from_edge_lists

WORKERS_ENV_VAR = "NKCONSENSUS_WORKERS"

SWEEP_AXES = ("betaJ", "p", "K", "M")

_JSON_KEYS = {
    "M": "M",
    "N": "N",
    "K": "K",
    "p": "p",
    "beta_j": "betaJ",
    "beta_prime": "betaPrime",
    "realizations": "realizations",
    "t_end": "t_end",
    "samples": "samples",
    "steady_window": "steady_window",
    "steady_tol": "steady_tol",
    "master_seed": "master_seed",
    "landscape_policy": "landscape_policy",
    "max_events": "max_events",
    "network_layers": "network_layers",
    "output_dir": "output_dir",
}


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2 in the CLI)."""


@dataclass
class ExperimentConfig:
    M: int = 6
    N: int = 12
    K: int = 5
    p: float = 0.5
    beta_j: float = 0.5
    beta_prime: float = 10.0
    realizations: int = 100
    t_end: float = 200.0
    samples: int = 400
    steady_window: float = 10.0
    steady_tol: float = 0.005
    master_seed: int = 42
    landscape_policy: str = "per-realization"
    max_events: int = 50_000_000
    network_layers: list | None = None
    output_dir: str | None = None

    def to_dict(self) -> dict:
        raw = asdict(self)
        return {_JSON_KEYS[k]: raw[k] for k in _JSON_KEYS}

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        reverse = {v: k for k, v in _JSON_KEYS.items()}
        unknown = set(obj) - set(reverse)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{reverse[k]: v for k, v in obj.items()})

    def sample_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.samples)


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every parameter range before any run; raises ConfigError."""
    problems = []
    if cfg.M < 2:
        problems.append(f"M must be >= 2, got {cfg.M}")
    if cfg.N < 1:
        problems.append(f"N must be >= 1, got {cfg.N}")
    if not 0 <= cfg.K <= cfg.N - 1:
        problems.append(f"K must lie in [0, N-1]=[0, {cfg.N - 1}], got {cfg.K}")
    if not 0.0 <= cfg.p <= 1.0:
        problems.append(f"p must lie in [0, 1], got {cfg.p}")
    if cfg.beta_j < 0:
        problems.append(f"betaJ must be >= 0, got {cfg.beta_j}")
    if not 0.0 <= cfg.beta_prime <= 100.0:
        # perceived-fitness changes are bounded by 1, so this caps the
        # exponential rate factor at exp(100)
        problems.append(f"betaPrime must lie in [0, 100], got {cfg.beta_prime}")
    if cfg.realizations < 1:
        problems.append(f"realizations must be >= 1, got {cfg.realizations}")
    if cfg.t_end <= 0:
        problems.append(f"t_end must be positive, got {cfg.t_end}")
    if cfg.samples < 2:
        problems.append(f"samples must be >= 2, got {cfg.samples}")
    if cfg.steady_window <= 0:
        problems.append(f"steady_window must be positive, got {cfg.steady_window}")
    elif cfg.t_end < 2 * cfg.steady_window:
        problems.append(
            f"t_end={cfg.t_end} too short for two steady-state windows of {cfg.steady_window}"
        )
    if cfg.steady_tol <= 0:
        problems.append(f"steady_tol must be positive, got {cfg.steady_tol}")
    if cfg.landscape_policy not in ("per-realization", "shared"):
        problems.append(
            f"landscape_policy must be 'per-realization' or 'shared', got {cfg.landscape_policy!r}"
        )
    if cfg.max_events < 1:
        problems.append(f"max_events must be >= 1, got {cfg.max_events}")
    if cfg.network_layers is not None and len(cfg.network_layers) != cfg.N:
        problems.append(
            f"network_layers must list {cfg.N} layers, got {len(cfg.network_layers)}"
        )
    if problems:
        raise ConfigError("; ".join(problems))


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = ExperimentConfig.from_dict(obj)
    validate_config(cfg)
    return cfg


def build_multiplex(cfg: ExperimentConfig) -> Multiplex:
    if cfg.network_layers is None:
        return build_complete_multiplex(cfg.M, cfg.N)
    return multiplex_from_edge_lists(cfg.M, cfg.network_layers)


# ---------------------------------------------------------------------------
# Seeding

def realization_seeds(master_seed: int, r: int) -> dict[str, int]:
    children = np.random.SeedSequence(master_seed, spawn_key=(0, r)).spawn(3)
    names = ("landscape", "competence", "trajectory")
    return {name: int(c.generate_state(1, np.uint64)[0]) for name, c in zip(names, children)}


def shared_landscape_seed(master_seed: int) -> int:
    return int(np.random.SeedSequence(master_seed, spawn_key=(1, 0)).generate_state(1, np.uint64)[0])


def validation_seeds(master_seed: int) -> dict[str, int]:
    children = np.random.SeedSequence(master_seed, spawn_key=(2, 0)).spawn(3)
    names = ("landscape", "competence", "trajectory")
    return {name: int(c.generate_state(1, np.uint64)[0]) for name, c in zip(names, children)}


# ---------------------------------------------------------------------------
# Ensemble execution

@dataclass
class SteadyScalar:
    value: float
    stderr: float
    converged: bool
    t_reached: float


@dataclass
class EnsembleResult:
    config: ExperimentConfig
    curves: dict[str, ObservableCurve]
    steady: dict[str, SteadyScalar]
    records: list
    total_events: int


def _run_realization(cfg: ExperimentConfig, r: int, shared: Landscape | None):
    seeds = realization_seeds(cfg.master_seed, r)
    if shared is not None:
        L = shared
    else:
        L = generate_landscape(cfg.N, cfg.K, seeds["landscape"])
    C = generate_competence(cfg.M, cfg.N, cfg.p, seeds["competence"])
    mp = build_multiplex(cfg)
    rec = simulate_trajectory(
        L, C, mp, Coupling(cfg.beta_j, cfg.beta_prime),
        cfg.t_end, cfg.sample_grid(), seeds["trajectory"], cfg.max_events,
    )
    _, rec.v_max = global_max(L)
    return rec


def _realization_star(args):
    return _run_realization(*args)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}")
    return max(1, workers)


def run_ensemble(cfg: ExperimentConfig) -> EnsembleResult:
    """Simulate all realizations and aggregate observables.

    Realizations are independent and merged in index order, so the result
    does not depend on the degree of parallelism. Steady values are final
    window time-averages per realization (mean +- stderr across the
    ensemble); the convergence flag applies the consecutive-window criterion
    to the ensemble mean curve.
    """
    validate_config(cfg)
    shared = (
        generate_landscape(cfg.N, cfg.K, shared_landscape_seed(cfg.master_seed))
        if cfg.landscape_policy == "shared"
        else None
    )
    tasks = [(cfg, r, shared) for r in range(cfg.realizations)]
    workers = worker_count()
    if workers > 1 and cfg.realizations > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_realization_star, tasks))
    else:
        records = [_realization_star(t) for t in tasks]

    curves = ensemble_average(records)
    steady = {}
    T = cfg.steady_window
    for name, curve in curves.items():
        detection = steady_state_value(curve, T, cfg.steady_tol)
        if name == "fitness_norm":
            per_real = [
                metrics.tail_window_average(rec.grid, rec.fitness / rec.v_max, T)
                for rec in records
            ]
        else:
            per_real = [
                metrics.tail_window_average(rec.grid, rec.consensus, T) for rec in records
            ]
        per_real = np.asarray(per_real)
        stderr = (
            float(per_real.std(ddof=1) / np.sqrt(len(per_real))) if len(per_real) > 1 else 0.0
        )
        steady[name] = SteadyScalar(
            value=float(per_real.mean()),
            stderr=stderr,
            converged=detection.converged,
            t_reached=detection.t_reached,
        )
    total_events = sum(rec.n_events for rec in records)
    return EnsembleResult(
        config=cfg, curves=curves, steady=steady, records=records, total_events=total_events
    )


# ---------------------------------------------------------------------------
# Sweeps

@dataclass
class SweepResult:
    axis: str
    values: list[float]
    rows: list[dict]


def _override(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "betaJ":
        return replace(cfg, beta_j=float(value))
    if axis == "p":
        return replace(cfg, p=float(value))
    if axis == "K":
        return replace(cfg, K=int(value))
    if axis == "M":
        return replace(cfg, M=int(value))
    raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def sweep(cfg: ExperimentConfig, axis: str, values) -> SweepResult:
    """One ensemble per axis value; emits steady-state means and errors.

    Every row also carries M * betaJ, the natural axis for comparing group
    sizes near the consensus transition.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    rows = []
    for value in values:
        point_cfg = _override(cfg, axis, value)
        result = run_ensemble(point_cfg)
        fit, cons = result.steady["fitness_norm"], result.steady["consensus"]
        rows.append(
            {
                "axis": axis,
                "value": float(value),
                "m_beta_j": point_cfg.M * point_cfg.beta_j,
                "fitness_steady": fit.value,
                "fitness_stderr": fit.stderr,
                "fitness_converged": fit.converged,
                "consensus_steady": cons.value,
                "consensus_stderr": cons.stderr,
                "consensus_converged": cons.converged,
                "n_realizations": point_cfg.realizations,
            }
        )
    return SweepResult(axis=axis, values=[float(v) for v in values], rows=rows)


# ---------------------------------------------------------------------------
# Validation against the exact oracle

@dataclass
class ValidationCheck:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class ValidationReport:
    checks: list[ValidationCheck]
    ok: bool
    stationary: np.ndarray = field(default=None, repr=False)

    def text(self, cfg: ExperimentConfig) -> str:
        lines = [
            f"oracle validation: M={cfg.M} N={cfg.N} K={cfg.K} p={cfg.p} "
            f"betaJ={cfg.beta_j} betaPrime={cfg.beta_prime} master_seed={cfg.master_seed}"
        ]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"  {c.name:<34} {c.value:12.5e}  < {c.threshold:.1e}  {status}")
        lines.append(f"overall: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines) + "\n"


def validate(
    cfg: ExperimentConfig,
    n_events: int = 1_000_000,
    perturb: tuple[int, int, float] | None = None,
) -> ValidationReport:
    """Cross-check the simulation against exact enumeration on a tiny system.

    Runs the generator row-sum sanity check, the detailed-balance residual,
    the solved-vs-analytic stationary comparison, and the long-run occupancy
    comparison. ``perturb`` corrupts one rate so tests can confirm the checks
    have teeth.
    """
    validate_config(cfg)
    if cfg.M * cfg.N > exact_oracle.MAX_EXACT_N:
        raise ConfigError(
            f"validation needs M*N <= {exact_oracle.MAX_EXACT_N}, got {cfg.M * cfg.N}"
        )
    seeds = validation_seeds(cfg.master_seed)
    L = generate_landscape(cfg.N, cfg.K, seeds["landscape"])
    C = generate_competence(cfg.M, cfg.N, cfg.p, seeds["competence"])
    mp = build_multiplex(cfg)
    coupling = Coupling(cfg.beta_j, cfg.beta_prime)

    model = exact_oracle.build_generator(L, C, mp, coupling, perturb=perturb)
    row_sums = float(np.max(np.abs(model.Q.sum(axis=1))))
    balance = exact_oracle.check_detailed_balance(model)
    pi_solved = exact_oracle.stationary_distribution(model)
    pi_analytic = exact_oracle.analytic_stationary(L, C, mp, coupling)
    tv_solver = exact_oracle.total_variation(pi_solved, pi_analytic)
    occ = occupancy_trajectory(L, C, mp, coupling, n_events, seeds["trajectory"])
    tv_sim = exact_oracle.total_variation(occ, pi_analytic)

    checks = [
        ValidationCheck("generator row-sum max abs", row_sums, 1e-12, row_sums < 1e-12),
        ValidationCheck("detailed-balance residual", balance, 1e-10, balance < 1e-10),
        ValidationCheck("solved vs analytic stationary TV", tv_solver, 1e-8, tv_solver < 1e-8),
        ValidationCheck("simulated vs exact occupancy TV", tv_sim, 0.02, tv_sim < 0.02),
    ]
    return ValidationReport(
        checks=checks, ok=all(c.passed for c in checks), stationary=pi_solved
    )


# ---------------------------------------------------------------------------
# Persistence

def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def write_config_json(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    columns = [
        "axis", "value", "m_beta_j",
        "fitness_steady", "fitness_stderr", "fitness_converged",
        "consensus_steady", "consensus_stderr", "consensus_converged",
        "n_realizations",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in result.rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def run_report_text(result: EnsembleResult) -> str:
    cfg = result.config
    fit, cons = result.steady["fitness_norm"], result.steady["consensus"]
    lines = [
        f"ensemble: M={cfg.M} N={cfg.N} K={cfg.K} p={cfg.p} betaJ={cfg.beta_j} "
        f"betaPrime={cfg.beta_prime} realizations={cfg.realizations} "
        f"t_end={_fmt(cfg.t_end)} master_seed={cfg.master_seed} "
        f"landscape_policy={cfg.landscape_policy}",
        f"total events: {result.total_events}",
        f"steady normalized fitness: {fit.value:.9g} +- {fit.stderr:.9g} "
        f"(converged={str(fit.converged).lower()}, t_reached={_fmt(fit.t_reached)})",
        f"steady consensus:          {cons.value:.9g} +- {cons.stderr:.9g} "
        f"(converged={str(cons.converged).lower()}, t_reached={_fmt(cons.t_reached)})",
    ]
    return "\n".join(lines) + "\n"


def write_run_outputs(
    result: EnsembleResult,
    out_dir: str | Path,
    plot: bool = True,
    save_trajectories: bool = False,
) -> Path:
    """Persist one ensemble: config.json, curves.csv, report.txt (+ figures)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_config_json(result.config, out / "config.json")
    metrics.write_curves_csv(result.curves, out / "curves.csv")
    (out / "report.txt").write_text(run_report_text(result))
    if save_trajectories:
        write_trajectories_csv(result.records, out / "trajectories.csv")
    if plot:
        from . import plotting

        plotting.save_curves_figure(result.curves, out / "curves.png")
    return out


def write_sweep_outputs(
    sweep_result: SweepResult,
    cfg: ExperimentConfig,
    out_dir: str | Path,
    plot: bool = True,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_config_json(cfg, out / "config.json")
    write_sweep_csv(sweep_result, out / "sweep.csv")
    lines = [f"sweep over {sweep_result.axis}: {len(sweep_result.rows)} points"]
    for row in sweep_result.rows:
        lines.append(
            f"  {sweep_result.axis}={_fmt(row['value'])}: "
            f"fitness {row['fitness_steady']:.9g} +- {row['fitness_stderr']:.9g}, "
            f"consensus {row['consensus_steady']:.9g} +- {row['consensus_stderr']:.9g}"
        )
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    if plot:
        from . import plotting

        plotting.save_sweep_figure(sweep_result, out / "sweep.png")
    return out
