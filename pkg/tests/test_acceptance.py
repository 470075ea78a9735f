"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
stream). Statistical criteria use fixed master seeds, so the suite is
deterministic end to end.
"""

import math
import time

import numpy as np
from scipy import stats

from nkconsensus.dynamics import (
    RateVector,
    compute_rates,
    final_rates_after,
    gillespie_step,
    occupancy_trajectory,
)
from nkconsensus.exact_oracle import (
    analytic_stationary,
    build_generator,
    check_detailed_balance,
    stationary_distribution,
    total_variation,
)
from nkconsensus.experiment import ExperimentConfig, run_ensemble, sweep
from nkconsensus.landscape import fitness, generate_competence, generate_landscape, global_max
from nkconsensus.meanfield import critical_coupling, magnetization_fixed_points
from nkconsensus.multiplex import Coupling, build_complete_multiplex


def report(number: int, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {number:2d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number} ({name}): {detail}"


def tiny_instance(seed):
    L = generate_landscape(2, 1, seed)
    C = generate_competence(2, 2, 0.5, seed + 1)
    mp = build_complete_multiplex(2, 2)
    return L, C, mp, Coupling(0.3, 2.0)


def test_01_exact_stationary_law():
    t0 = time.perf_counter()
    worst_tv, worst_balance = 0.0, 0.0
    for seed in (11, 29, 307):
        L, C, mp, cpl = tiny_instance(seed)
        model = build_generator(L, C, mp, cpl)
        pi = stationary_distribution(model)
        pi0 = analytic_stationary(L, C, mp, cpl)
        worst_tv = max(worst_tv, total_variation(pi, pi0))
        worst_balance = max(worst_balance, check_detailed_balance(model))
    elapsed = time.perf_counter() - t0
    ok = worst_tv < 1e-8 and worst_balance < 1e-10 and elapsed < 1.0
    report(
        1, "exact stationary law", ok,
        f"TV={worst_tv:.2e} < 1e-8, balance={worst_balance:.2e} < 1e-10, {elapsed:.2f}s < 1s",
    )


def test_02_simulation_vs_oracle_occupancy():
    L, C, mp, cpl = tiny_instance(11)
    t0 = time.perf_counter()
    occ = occupancy_trajectory(L, C, mp, cpl, n_events=1_000_000, seed=99)
    elapsed = time.perf_counter() - t0
    tv = total_variation(occ, analytic_stationary(L, C, mp, cpl))
    ok = tv < 0.02 and elapsed < 30.0
    report(
        2, "simulation vs oracle", ok,
        f"TV={tv:.4f} < 0.02 over 1e6 events, {elapsed:.1f}s < 30s",
    )


def test_03_consensus_baseline():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        M=6, N=12, K=5, p=0.5, beta_j=0.0, beta_prime=0.0,
        realizations=100, master_seed=42,
    )
    res = run_ensemble(cfg)
    elapsed = time.perf_counter() - t0
    c = res.steady["consensus"].value
    ok = abs(c - 1 / 6) <= 0.02 and elapsed < 60.0
    report(
        3, "consensus baseline", ok,
        f"steady consensus {c:.4f} within 1/6 +- 0.02, {elapsed:.1f}s < 60s",
    )


def test_04_social_interaction_benefit():
    from dataclasses import replace

    t0 = time.perf_counter()
    base = ExperimentConfig(
        M=6, N=12, K=5, p=0.5, beta_prime=10.0, realizations=100, master_seed=42
    )
    off = run_ensemble(replace(base, beta_j=0.0))
    on = run_ensemble(replace(base, beta_j=0.5))
    elapsed = time.perf_counter() - t0
    gap = on.steady["fitness_norm"].value - off.steady["fitness_norm"].value
    sigma = math.hypot(on.steady["fitness_norm"].stderr, off.steady["fitness_norm"].stderr)
    ok = gap >= 5 * sigma and elapsed < 600.0
    report(
        4, "social-interaction benefit", ok,
        f"gain {gap:.4f} = {gap / sigma:.1f} stderr >= 5, {elapsed:.1f}s < 600s",
    )


def test_05_interior_optimum_in_social_coupling():
    values = [0.0, 0.1, 0.2, 0.3, 0.5, 1.0, 1.5]
    cfg = ExperimentConfig(
        M=6, N=12, K=5, p=0.5, beta_prime=10.0, realizations=100, master_seed=42
    )
    result = sweep(cfg, "betaJ", values)
    fit = np.array([row["fitness_steady"] for row in result.rows])
    cons = np.array([row["consensus_steady"] for row in result.rows])
    cons_se = np.array([row["consensus_stderr"] for row in result.rows])
    best = int(np.argmax(fit))
    interior = 0 < best < len(values) - 1
    monotone = all(
        cons[i + 1] >= cons[i] - 2 * math.hypot(cons_se[i], cons_se[i + 1])
        for i in range(len(values) - 1)
    )
    ok = interior and monotone
    report(
        5, "interior optimum in betaJ", ok,
        f"argmax at betaJ={values[best]} (interior={interior}), "
        f"consensus monotone within error bars={monotone}",
    )


def test_06_criticality_collapse():
    t0 = time.perf_counter()
    xs = np.array([0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 2.0, 2.4])
    locations, max_slopes = {}, {}
    for M in (6, 12, 24):
        cfg = ExperimentConfig(
            M=M, N=12, K=5, p=0.5, beta_prime=10.0, realizations=100, master_seed=42
        )
        result = sweep(cfg, "betaJ", list(xs / M))
        cons = np.array([row["consensus_steady"] for row in result.rows])
        slopes = np.diff(cons) / np.diff(xs)
        i = int(np.argmax(slopes))
        locations[M] = float(0.5 * (xs[i] + xs[i + 1]))
        max_slopes[M] = float(slopes[i])
    elapsed = time.perf_counter() - t0
    in_band = all(0.7 <= locations[M] <= 1.5 for M in (6, 12, 24))
    sharpens = max_slopes[6] < max_slopes[12] < max_slopes[24]
    ok = in_band and sharpens and elapsed < 3600.0
    report(
        6, "criticality collapse", ok,
        f"rise locations {locations} in [0.7, 1.5], "
        f"slopes {[round(max_slopes[M], 2) for M in (6, 12, 24)]} sharpen with M, "
        f"{elapsed:.0f}s < 3600s",
    )


def test_07_mean_field_theory():
    t0 = time.perf_counter()
    exact = all(critical_coupling(M) == 1.0 / M for M in (1, 6, 12, 24, 100))
    sol = magnetization_fixed_points(2.0)
    pts = sorted(sol.fixed_points)
    ordered_ok = (
        len(pts) == 3
        and pts[1] == 0.0
        and abs(pts[2] - 0.9575) <= 1e-4
        and abs(pts[0] + 0.9575) <= 1e-4
    )
    below_ok = all(
        magnetization_fixed_points(x).fixed_points == (0.0,) for x in (0.0, 0.5, 1.0)
    )
    elapsed = time.perf_counter() - t0
    ok = exact and ordered_ok and below_ok and elapsed < 1.0
    report(
        7, "mean-field theory", ok,
        f"critical coupling exact={exact}, roots at x=2: {pts[2]:.6f} (+-0.9575 +- 1e-4), "
        f"x<=1 gives only 0: {below_ok}, {elapsed:.3f}s < 1s",
    )


def test_08_knowledge_saturation():
    values = [0.05, 0.1, 0.2, 0.6, 1.0]
    cfg = ExperimentConfig(
        M=6, N=12, K=5, beta_j=0.5, beta_prime=10.0, realizations=100, master_seed=42
    )
    result = sweep(cfg, "p", values)
    fit = np.array([row["fitness_steady"] for row in result.rows])
    se = np.array([row["fitness_stderr"] for row in result.rows])
    cons = np.array([row["consensus_steady"] for row in result.rows])
    increasing = all(
        fit[i + 1] >= fit[i] - 2 * math.hypot(se[i], se[i + 1]) for i in range(4)
    ) and fit[-1] > fit[0] + 5 * math.hypot(se[0], se[-1])
    saturates = (fit[4] - fit[3]) < (fit[2] - fit[0])
    dip = int(np.argmin(cons))
    interior_minimum = 0 < dip < len(values) - 1
    ok = increasing and saturates and interior_minimum
    report(
        8, "knowledge saturation", ok,
        f"fitness increasing within error bars={increasing}, "
        f"gain(0.6->1.0)={fit[4] - fit[3]:.4f} < gain(0.05->0.2)={fit[2] - fit[0]:.4f}, "
        f"consensus minimum at p={values[dip]} (interior={interior_minimum})",
    )


def test_09_statistical_unit_tests():
    # waiting times against the exponential law
    rng = np.random.default_rng(2024)
    rv = RateVector(w=np.array([0.5, 0.7, 0.8]), w_T=2.0)
    draws = [gillespie_step(rv, rng) for _ in range(100_000)]
    dts = np.array([d[1] for d in draws])
    ks_p = stats.kstest(dts, "expon", args=(0, 1.0 / rv.w_T)).pvalue

    # flip-index frequencies against the normalized rates
    idx = np.array([d[0] for d in draws])
    counts = np.bincount(idx, minlength=3)
    chi_p = stats.chisquare(counts, f_exp=rv.w / rv.w_T * len(idx)).pvalue

    # incremental rate updates against from-scratch recomputation
    L = generate_landscape(12, 5, 42)
    C = generate_competence(6, 12, 0.5, 7)
    mp = build_complete_multiplex(6, 12)
    cpl = Coupling(0.5, 10.0)
    state, incr = final_rates_after(L, C, mp, cpl, 1000, seed=123)
    scratch = compute_rates(state, cpl, mp, L, C)
    rel = float(np.max(np.abs(incr.w - scratch.w) / np.abs(scratch.w)))

    ok = ks_p > 0.01 and chi_p > 0.01 and rel <= 1e-12
    report(
        9, "statistical unit tests", ok,
        f"KS p={ks_p:.3f} > 0.01, chi2 p={chi_p:.3f} > 0.01, "
        f"incremental error {rel:.2e} <= 1e-12 after 1e3 events",
    )


def test_10_separable_landscape_sanity():
    failures = 0
    for seed in range(100):
        L = generate_landscape(12, 0, seed)
        greedy = np.where(L.tables[:, 1] >= L.tables[:, 0], 1, -1)
        _, v_max = global_max(L)
        if fitness(L, greedy) != v_max:
            failures += 1
    ok = failures == 0
    report(
        10, "separable landscape sanity", ok,
        f"greedy per-decision optimum exact on {100 - failures}/100 random landscapes",
    )
