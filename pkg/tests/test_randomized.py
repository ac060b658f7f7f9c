import numpy as np
import pytest
from scipy import stats

from transq.errors import ConfigurationError
from transq.kernel import KernelParams, kernel_block, transition_kernel
from transq.metrics import subinterval_violation, time_avg_violation
from transq.propagate import propagate_switch_points
from transq.randomized import (DurationDistribution, RandomInterval, RandomizedSchedule,
                               _exponential_by_legendre, expected_kernel, expected_kernel_block,
                               expected_subinterval_violation, randomized_switch_profile,
                               randomized_time_avg_violation)
from transq.schedule import make_on_off
from transq.simulator import SimConfig, estimate_randomized

PM = DurationDistribution.point_mass
EXP = DurationDistribution.exponential
UNI = DurationDistribution.uniform


def test_duration_laws():
    assert EXP(0.5).mean() == 0.5
    assert UNI(1, 3).mean() == 2.0
    assert PM(0.7).cdf(0.7) == 1.0 and PM(0.7).cdf(0.69) == 0.0
    assert EXP(2.0).cdf(2.0) == pytest.approx(1 - np.exp(-1))
    assert UNI(1, 3).survival(2.5) == pytest.approx(0.25)
    assert str(UNI(0.5, 1.5)) == "uniform(0.5, 1.5)"


@pytest.mark.parametrize("kind,params", [("exponential", (0,)), ("uniform", (2, 1)),
                                         ("point_mass", (-1,)), ("gamma", (1, 2))])
def test_invalid_laws(kind, params):
    with pytest.raises(ConfigurationError):
        DurationDistribution(kind, params)


def test_point_mass_is_direct_kernel():
    for j, n in [(0, 0), (3, 7), (10, 2)]:
        a = expected_kernel(j, n, PM(0.5), 10.0, 5.0)
        b = transition_kernel(j, n, KernelParams(10.0, 5.0, 0.5))
        assert abs(a - b) <= 1e-14
    assert expected_kernel(4, 4, PM(0.0), 3.0, 5.0) == 1.0
    assert expected_kernel(4, 3, PM(0.0), 3.0, 5.0) == 0.0


def test_exponential_routes_agree_when_laguerre_validates():
    lag = expected_kernel_block(EXP(0.1), 1.0, 1.0, 10, 30)
    leg = _exponential_by_legendre(1.0, 1.0, 0.1, 10, 30, 1e-13)
    assert np.abs(lag - leg).max() <= 1e-8


def test_exponential_against_closed_form_pure_death():
    # E[e^{-mu T}] for T ~ Exp(mean m) is 1 / (1 + mu m)
    m, mu = 0.5, 5.0
    assert expected_kernel(3, 3, EXP(m), 0.0, mu) == pytest.approx(1 / (1 + mu * m), abs=1e-10)


def test_uniform_mixture_linearity():
    whole = expected_kernel_block(UNI(0.2, 1.0), 8.0, 5.0, 6, 40)
    halves = 0.5 * (expected_kernel_block(UNI(0.2, 0.6), 8.0, 5.0, 6, 40)
                    + expected_kernel_block(UNI(0.6, 1.0), 8.0, 5.0, 6, 40))
    assert np.abs(whole - halves).max() <= 1e-8


@pytest.mark.parametrize("dur", [EXP(0.5), UNI(0.5, 1.5)])
def test_expected_rows_substochastic(dur):
    g = expected_kernel_block(dur, 10.0, 5.0, 20, 300)
    sums = g.sum(axis=1)
    assert np.all(sums <= 1 + 1e-10)
    np.testing.assert_allclose(sums, 1.0, atol=1e-10)


def test_idle_randomized_schedule():
    rs = RandomizedSchedule([RandomInterval(EXP(0.5), UNI(0.1, 0.2), 0.0, 0.0, 5.0)] * 3)
    prof = randomized_switch_profile(rs)
    for d in prof.a_dists + prof.i_dists:
        # quadrature weights sum to one only to round-off
        assert d.probs[0] == pytest.approx(1.0, abs=1e-14)
    assert expected_subinterval_violation(rs, prof, 2, "active", 0) == pytest.approx(0.0, abs=1e-14)
    assert randomized_time_avg_violation(rs, 0, 3, profile=prof) == pytest.approx(0.0, abs=1e-14)


def test_point_mass_equivalence():
    s = make_on_off(4, 10.0, 0.5, 0.5, 5.0)
    rs = RandomizedSchedule.from_schedule(s)
    det = propagate_switch_points(s)
    ran = randomized_switch_profile(rs)
    for a, b in zip(det.a_dists + det.i_dists, ran.a_dists + ran.i_dists):
        assert a.dim == b.dim
        assert np.abs(a.probs - b.probs).max() <= 1e-12
    va, vi = subinterval_violation(s, det, 5)
    for k in range(1, 5):
        assert expected_subinterval_violation(rs, ran, k, "active", 5) == pytest.approx(va[k - 1], abs=1e-8)
        assert expected_subinterval_violation(rs, ran, k, "inactive", 5) == pytest.approx(vi[k - 1], abs=1e-8)
    assert randomized_time_avg_violation(rs, 5, 4, profile=ran) == pytest.approx(
        time_avg_violation(s, det, 5, s.horizon), abs=1e-8)


def test_exponential_row_against_simulation():
    rs = RandomizedSchedule([RandomInterval(EXP(0.5), PM(0.0), 10.0, 0.0, 5.0)])
    runs = 1_000_000
    est = estimate_randomized(rs, SimConfig(runs, 11, (), 0))
    freq = est.i_hist[0] / runs
    row = expected_kernel_block(EXP(0.5), 10.0, 5.0, 1, freq.size)[0]
    se = np.sqrt(row * (1 - row) / runs)
    big = row * runs >= 5
    z = np.abs(freq[big] - row[big]) / se[big]
    # ~40 entries tested at 3 sigma: one or two exceedances are expected by chance,
    # three or more has probability below 2e-4 under the null
    assert np.sum(z > 3) <= 2, z.round(1)
    obs = np.append(est.i_hist[0][big], runs - est.i_hist[0][big].sum())
    exp = np.append(row[big] * runs, runs * (1 - row[big].sum()))
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_mixed_laws_against_simulation():
    rs = RandomizedSchedule([RandomInterval(UNI(0.5, 1.5), EXP(0.4), 10.0, 1.0, 5.0)] * 3)
    prof = randomized_switch_profile(rs)
    est = estimate_randomized(rs, SimConfig(50_000, 5, (), 5))
    for idx, sub in enumerate(rs.subintervals):
        v = expected_subinterval_violation(rs, prof, sub.k, sub.phase, 5)
        assert abs(v - est.sub_ratio[idx]) <= 3 * est.sub_ratio_stderr[idx]
    v_bar = randomized_time_avg_violation(rs, 5, 3, profile=prof)
    assert abs(v_bar - est.v_bar_hat) <= 3 * est.v_bar_stderr


def test_switch_histogram_uniform_law():
    rs = RandomizedSchedule([RandomInterval(UNI(0.2, 0.8), UNI(0.2, 0.8), 10.0, 0.0, 5.0)] * 2)
    prof = randomized_switch_profile(rs)
    runs = 100_000
    est = estimate_randomized(rs, SimConfig(runs, 8, (), 5))
    counts = est.a_hist[2]
    p = prof.a(3).padded(max(counts.size, prof.a(3).dim))[: counts.size]
    expected = p * runs
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], runs - expected[keep].sum())
    assert stats.chisquare(obs, exp).pvalue > 1e-3
