"""Acceptance gates. Each test prints one PASS/FAIL line for its criterion."""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from transq import cli
from transq.bessel import scaled_bessel, scaled_bessel_sequence
from transq.kernel import KernelParams, kernel_block, kernel_matrix
from transq.metrics import subinterval_violation, time_avg_violation, violation_at
from transq.oracle import OracleConfig, oracle_path
from transq.propagate import propagate_switch_points, transient_at
from transq.randomized import (DurationDistribution, RandomInterval, RandomizedSchedule,
                               expected_subinterval_violation, randomized_switch_profile,
                               randomized_time_avg_violation)
from transq.schedule import Interval, RateSchedule, make_on_off
from transq.simulator import SimConfig, estimate_randomized, estimate_violation

from conftest import mp_pure_death

GOLDEN = Path(__file__).parent / "golden"
GRID20 = np.arange(1, 21) * 0.5


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return emit


def test_c1_kernel_matches_oracle(fig5a, report):
    start = time.perf_counter()
    profile = propagate_switch_points(fig5a)
    mine = [transient_at(fig5a, profile, t).padded(400)[:101] for t in GRID20]
    ref = oracle_path(fig5a, None, GRID20, OracleConfig(dim=400))
    err = max(float(np.abs(a - b.probs[:101]).max()) for a, b in zip(mine, ref))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-8 and elapsed <= 60
    report(1, ok, f"max |kernel - oracle| = {err:.2e} (<= 1e-8), {elapsed:.1f} s (<= 60 s)")
    assert ok


@pytest.mark.parametrize("name", ["fig5a", "fig5b", "fig5c"])
def test_c2_monte_carlo_agreement(name, request, report):
    s = request.getfixturevalue(name)
    profile = propagate_switch_points(s)
    v = violation_at(s, profile, 5, GRID20)
    est = estimate_violation(s, SimConfig(100_000, 2026, GRID20, 5))
    inside = np.abs(v - est.v_hat) <= 3 * est.stderr
    ok = int(inside.sum()) >= 19
    worst = float(np.max(np.abs(v - est.v_hat) / np.maximum(est.stderr, 1e-300)))
    report(2, ok, f"{name}: {int(inside.sum())}/20 grid points within 3 sigma (>= 19), worst |z| = {worst:.2f}")
    assert ok


def test_c3_restless_shape(fig5c, fig5c_profile, report):
    starts = [fig5c.interval_start(k) for k in range(1, 12)]
    v = violation_at(fig5c, fig5c_profile, 5, starts)
    rising = bool(np.all(np.diff(v[:8]) > 0))
    falling = bool(v[8] > v[9] > v[10])
    ok = rising and falling
    report(3, ok, "V(S_1..S_8) increasing: " + " ".join(f"{x:.3f}" for x in v[:8])
           + f"; V(S_9) > V(S_10) > V(S_11): {v[8]:.3f} {v[9]:.3f} {v[10]:.3f}")
    assert ok


def test_c4_sweep_spot_values(report):
    expected = {10: 0.20, 20: 0.24, 30: 0.26, 40: 0.27}
    s = make_on_off(40, 15.0, 1.5, 1.0, 5.0)
    profile = propagate_switch_points(s)
    got = {K: time_avg_violation(s, profile, 15, s.interval_start(K + 1)) for K in expected}
    ok = all(abs(got[K] - expected[K]) <= 0.02 for K in expected)
    report(4, ok, "V_bar at K=10/20/30/40: " + " ".join(f"{got[K]:.4f}" for K in expected)
           + " vs 0.20/0.24/0.26/0.27 (+-0.02)")
    assert ok


def test_c5_steady_state(report):
    s = RateSchedule([Interval(50.0, 0.0, 2.0, 0.0, 5.0)])
    d = transient_at(s, propagate_switch_points(s), 50.0)
    tv = d.total_variation(0.6 * 0.4 ** np.arange(400))
    ok = tv <= 1e-4
    report(5, ok, f"TV(p(50), geometric(0.4)) = {tv:.2e} (<= 1e-4)")
    assert ok


def test_c6_pure_death_closed_form(report):
    mu = 5.0
    worst = 0.0
    for mut in (0.01, 0.5, 1.0, 3.0, 7.5, 12.0, 20.0):
        t = mut / mu
        g = kernel_block(0.0, mu, [t], 51, 51)[0]
        for j in range(51):
            for n in range(j + 1):
                worst = max(worst, abs(g[j, n] - float(mp_pure_death(j, n, mu, t))))
        assert np.all(np.triu(g, 1) == 0)
    ok = worst <= 1e-12
    report(6, ok, f"max |G - closed form| over j <= 50, mu t <= 20 = {worst:.2e} (<= 1e-12)")
    assert ok


def test_c7_point_mass_equivalence(fig5a, fig5a_profile, report):
    rs = RandomizedSchedule.from_schedule(fig5a)
    ran = randomized_switch_profile(rs)
    det = fig5a_profile
    gaps = [float(np.abs(a.padded(max(a.dim, b.dim)) - b.padded(max(a.dim, b.dim))).max())
            for a, b in zip(det.a_dists + det.i_dists, ran.a_dists + ran.i_dists)]
    va, vi = subinterval_violation(fig5a, det, 5)
    for k in range(1, 11):
        gaps.append(abs(expected_subinterval_violation(rs, ran, k, "active", 5) - va[k - 1]))
        gaps.append(abs(expected_subinterval_violation(rs, ran, k, "inactive", 5) - vi[k - 1]))
        gaps.append(abs(randomized_time_avg_violation(rs, 5, k, profile=ran)
                        - time_avg_violation(fig5a, det, 5, fig5a.interval_start(k + 1))))
    worst = max(gaps)
    ok = worst <= 1e-8
    report(7, ok, f"max gap over A_k, I_k, V_k^A, V_k^I, V_bar_k = {worst:.2e} (<= 1e-8)")
    assert ok


def test_c8_random_durations_statistics(report):
    e = DurationDistribution.exponential(0.5)
    rs = RandomizedSchedule([RandomInterval(e, e, 10.0, 0.0, 5.0)] * 3)
    profile = randomized_switch_profile(rs)
    runs = 100_000
    est = estimate_randomized(rs, SimConfig(runs, 808, (), 5))

    counts = est.a_hist[2]
    p = profile.a(3).padded(max(counts.size, profile.a(3).dim))
    expected = p[: counts.size] * runs
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], runs - expected[keep].sum())
    pvalue = float(stats.chisquare(obs, exp).pvalue)

    v1 = expected_subinterval_violation(rs, profile, 1, "active", 5)
    z = (v1 - est.sub_ratio[0]) / est.sub_ratio_stderr[0]
    ok = pvalue > 1e-3 and abs(z) <= 3
    report(8, ok, f"A_3 chi-square p = {pvalue:.3f} (> 0.001, {int(keep.sum())} states); "
                  f"V_1^A = {v1:.4f} vs simulated {est.sub_ratio[0]:.4f}, z = {z:.2f}")
    assert ok


def test_c9_property_suites(fig5a, fig5a_profile, tmp_path, report):
    failures = []

    for x in (1e-3, 0.7, 25.0, 900.0, 1e4):
        if scaled_bessel(-7, x) != scaled_bessel(7, x):
            failures.append(f"bessel symmetry x={x}")
        v = scaled_bessel_sequence(int(x + 40 * math.sqrt(x + 1) + 40), x).values
        if abs(1 - (v[0] + 2 * v[1:].sum())) > 1e-10:
            failures.append(f"bessel summation x={x}")
        s = 5
        if abs(v[s - 1] - v[s + 1] - 2 * s / x * v[s]) > 1e-9 * 2 * s / x * v[s]:
            failures.append(f"bessel recurrence x={x}")

    a = kernel_matrix(KernelParams(10.0, 5.0, 0.3), 300).entries
    b = kernel_matrix(KernelParams(10.0, 5.0, 0.45), 300).entries
    ab = kernel_matrix(KernelParams(10.0, 5.0, 0.75), 300).entries
    if np.abs((a @ b)[:50, :100] - ab[:50, :100]).max() > 1e-8:
        failures.append("kernel semigroup")

    for d in fig5a_profile.a_dists + fig5a_profile.i_dists:
        if np.any(d.probs < 0) or abs(d.probs.sum() + d.tail_mass - 1) > 1e-12 or d.tail_mass > 1e-9:
            failures.append(f"normalization at t={d.timestamp}")

    va, vi = subinterval_violation(fig5a, fig5a_profile, 5)
    total = time_avg_violation(fig5a, fig5a_profile, 5, fig5a.horizon)
    if abs((va.sum() * 0.5 + vi.sum() * 0.5) / fig5a.horizon - total) > 1e-9:
        failures.append("V_bar decomposition")

    one = estimate_violation(fig5a, SimConfig(9000, 3, GRID20, 5, threads=1))
    many = estimate_violation(fig5a, SimConfig(9000, 3, GRID20, 5, threads=3))
    if not (np.array_equal(one.v_hat, many.v_hat) and one.v_bar_hat == many.v_bar_hat):
        failures.append("simulator reproducibility")

    for name in ("onoff_fig5a", "highlow_fig5b", "restless_fig5c"):
        cli.main(["analyze", "--config", name, "--out", str(tmp_path / name)])
        for f in ("series.csv", "distributions.csv"):
            if (tmp_path / name / f).read_bytes() != (GOLDEN / name / f).read_bytes():
                failures.append(f"golden {name}/{f}")

    ok = not failures
    report(9, ok, "all property checks hold" if ok else "failed: " + ", ".join(failures))
    assert ok
