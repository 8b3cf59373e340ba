"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section
at the end lists every criterion's verdict. Expect roughly 15 minutes on
one core.
"""

import math
import time

import numpy as np
import pytest

from multisparse.cli import cli_main
from multisparse.experiments import (
    DEFAULT_RATIOS,
    Method,
    SignalSource,
    SourceKind,
    TrialSpec,
    generate_signal,
    run_sweep,
)
from multisparse.operators import AnalysisOperator, make_measurement_matrix
from multisparse.solvers import (
    RecoveryProblem,
    oracle_subgradient,
    solve_f_l1,
    solve_l1_l1,
    solve_multi_l1,
    solve_t_l1,
)

from test_solvers import l0_matches

L1_METHODS = (Method.T_L1, Method.F_L1, Method.L1_L1)


def _terms(method, n):
    eye, dft = AnalysisOperator.identity(n), AnalysisOperator.dft(n)
    if method is Method.T_L1:
        return [(1.0, eye)]
    if method is Method.F_L1:
        return [(1.0, dft)]
    return [(1.0, eye), (0.05 * math.sqrt(n), dft)]


@pytest.fixture(scope="module")
def dual_sweep():
    spec = TrialSpec(n=256, ratios=DEFAULT_RATIOS, trial_count=40)
    t0 = time.perf_counter()
    res = run_sweep(spec, SignalSource(SourceKind.DUAL_SPARSE))
    return res, time.perf_counter() - t0


def test_c1_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for i in range(20):
        n = (16, 32, 48, 64)[i % 4]
        g = np.random.default_rng(100 + i)
        phi = make_measurement_matrix("gaussian", n // 2, n, 200 + i)
        x = np.zeros(n)
        x[g.choice(n, 3, replace=False)] = g.standard_normal(3)
        x += 0.3 * np.cos(2 * np.pi * g.integers(1, n // 2) * np.arange(n) / n)
        y = phi.apply(x)
        eps = 0.05 * np.linalg.norm(y)
        for method in L1_METHODS:
            p = RecoveryProblem(y, phi, _terms(method, n), eps)
            admm = solve_multi_l1(p)
            orc = oracle_subgradient(p, iterations=100_000)
            worst = max(worst, abs(admm.objective - orc.objective) / orc.objective)
            count += 1
    secs = time.perf_counter() - t0
    ok = worst <= 1e-3 and secs < 600
    verdict(ok, "C1", f"oracle equivalence: {count} solves, worst rel gap {worst:.2e} "
                      f"(<= 1e-3), {secs:.0f} s (< 600 s)")
    assert ok


def test_c2_feasibility_suite(verdict):
    g = np.random.default_rng(2)
    solvers = (solve_t_l1, solve_f_l1, solve_l1_l1)
    converged, worst = 0, -math.inf
    for i in range(100):
        n = (32, 64, 128)[i % 3]
        m = int(g.integers(n // 8, n + 1))
        phi = make_measurement_matrix("gaussian", m, n, 300 + i)
        y = phi.apply(generate_signal(SignalSource(SourceKind.SPIKES, k_time=4, seed=i), n))
        y = y + 0.01 * g.standard_normal(m)
        eps = g.uniform(0.01, 0.3) * np.linalg.norm(y)
        rep = solvers[i % 3](y, phi, eps)
        if rep.converged:
            converged += 1
            worst = max(worst, rep.residual / (eps * (1 + 1e-6)))
    ok = converged > 0 and worst <= 1.0
    verdict(ok, "C2", f"feasibility: {converged}/100 converged, max residual/(eps(1+1e-6)) "
                      f"{worst:.9f} (<= 1)")
    assert ok


def test_c3_exact_recovery(verdict):
    t0 = time.perf_counter()
    n, m, hits = 128, 64, 0
    for l in range(40):
        x = generate_signal(SignalSource(SourceKind.SPIKES, k_time=5, seed=l), n).samples
        phi = make_measurement_matrix("gaussian", m, n, 500 + l)
        rep = solve_t_l1(phi.apply(x), phi, 1e-8)
        hits += np.linalg.norm(rep.x_hat.samples - x) / np.linalg.norm(x) < 1e-4
    secs = time.perf_counter() - t0
    ok = hits >= 38 and secs < 120
    verdict(ok, "C3", f"exact recovery: {hits}/40 trials below 1e-4 (>= 38), "
                      f"{secs:.1f} s (< 120 s)")
    assert ok


def test_c4_l1_l1_best_on_dual_sparse(dual_sweep, verdict):
    res, secs = dual_sweep
    gaps = {}
    for r in (0.375, 0.5, 0.625):
        best_single = min(res.mean_rmse(Method.T_L1, r), res.mean_rmse(Method.F_L1, r))
        gaps[r] = res.mean_rmse(Method.L1_L1, r) - best_single
    ok = all(gap <= 0.01 for gap in gaps.values()) and secs < 1800
    detail = ", ".join(f"{r}: {gap:+.4f}" for r, gap in gaps.items())
    verdict(ok, "C4", f"L1-L1 minus best single-domain RMSE ({detail}; each <= 0.01), "
                      f"sweep {secs:.0f} s (< 1800 s)")
    assert ok


def test_c5_freq_dense_ordering(verdict):
    spec = TrialSpec(n=256, ratios=(0.5,), trial_count=40, methods=L1_METHODS)
    res = run_sweep(spec, SignalSource(SourceKind.FREQ_DENSE))
    t, f, tf = (res.mean_rmse(m, 0.5) for m in L1_METHODS)
    ok = t < tf < f
    verdict(ok, "C5", f"freq-dense at 0.5: T-L1 {t:.4f} < L1-L1 {tf:.4f} < F-L1 {f:.4f}")
    assert ok


def test_c6_monotone_in_ratio(dual_sweep, verdict):
    res, _ = dual_sweep
    worst = -math.inf
    for m in res.spec.methods:
        curve = res.curve(m)
        worst = max(worst, max(b - a for a, b in zip(curve, curve[1:])))
    ok = worst <= 0.02
    verdict(ok, "C6", f"monotonicity: largest RMSE rise between adjacent ratios "
                      f"{worst:+.4f} (<= 0.02)")
    assert ok


def test_c7_floor_at_full_ratio(dual_sweep, verdict):
    res, _ = dual_sweep
    noisy = {m: res.mean_rmse(m, 1.0) for m in L1_METHODS}
    spec = TrialSpec(n=256, ratios=(1.0,), trial_count=40, epsilon_frac=0.0,
                     methods=L1_METHODS)
    clean = run_sweep(spec, SignalSource(SourceKind.DUAL_SPARSE))
    exact = {m: clean.mean_rmse(m, 1.0) for m in L1_METHODS}
    ok = all(v > 0 for v in noisy.values()) and all(v < 1e-4 for v in exact.values())
    verdict(ok, "C7", "ratio 1.0 floor: eps_frac 0.05 -> "
                      + ", ".join(f"{m.value} {v:.4f}" for m, v in noisy.items())
                      + " (> 0); eps_frac 0 -> max "
                      + f"{max(exact.values()):.1e} (< 1e-4)")
    assert ok


def test_c8_l0_cross_check(verdict):
    hits = l0_matches(range(50))
    ok = hits >= 45
    verdict(ok, "C8", f"L0 enumeration match: {hits}/50 seeds (>= 45)")
    assert ok


def test_c9_runtime_bound(verdict):
    n, m = 512, 256
    x = generate_signal(SignalSource(SourceKind.DUAL_SPARSE, seed=9), n).samples
    phi = make_measurement_matrix("gaussian", m, n, 9)
    y = phi.apply(x)
    t0 = time.perf_counter()
    rep = solve_l1_l1(y, phi, 0.05 * np.linalg.norm(y), 0.05 * math.sqrt(n))
    secs = time.perf_counter() - t0
    ok = rep.converged and secs < 60
    verdict(ok, "C9", f"N=512 M=256 L1-L1: converged={rep.converged} after "
                      f"{rep.iterations} iterations in {secs:.1f} s (< 60 s)")
    assert ok


def test_c10_sweep_csv_bytes(tmp_path, verdict):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 64\ntrial_count = 3\nratios = 0.25,0.5,1.0\n"
                   "source = spikes\nbase_seed = 10\n")
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [cli_main(["sweep", "--config", str(cfg), "--out-csv", str(p)]) for p in paths]
    same = paths[0].read_bytes() == paths[1].read_bytes()
    ok = codes == [0, 0] and same
    verdict(ok, "C10", f"repeated sweep: exit codes {codes}, byte-identical CSV: {same}")
    assert ok
