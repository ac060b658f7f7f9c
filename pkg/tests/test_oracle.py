import warnings

import numpy as np
import pytest

from transq.errors import DomainError
from transq.oracle import BoundaryOccupancyWarning, OracleConfig, oracle_path, oracle_transient
from transq.schedule import Interval, RateSchedule

from conftest import mp_pure_death


def epoch(lam, mu, t):
    return RateSchedule([Interval(t, 0.0, lam, 0.0, mu)])


def test_time_zero_returns_initial():
    p0 = np.zeros(50)
    p0[3] = 0.25
    p0[7] = 0.75
    d = oracle_transient(epoch(4.0, 5.0, 1.0), p0, 0.0, OracleConfig(dim=50))
    np.testing.assert_array_equal(d.probs, p0)


def test_pure_death_closed_form():
    p0 = np.zeros(60)
    p0[12] = 1.0
    d = oracle_transient(epoch(0.0, 5.0, 1.3), p0, 1.3, OracleConfig(dim=60))
    for n in (0, 1, 5, 12):
        assert d.probs[n] == pytest.approx(float(mp_pure_death(12, n, 5.0, 1.3)), abs=1e-12)


def test_two_integrators_agree():
    s = epoch(10.0, 5.0, 0.5)
    uni = oracle_transient(s, None, 0.5, OracleConfig(dim=400))
    rk4 = oracle_transient(s, None, 0.5, OracleConfig(dim=400, method="rk4", step=1e-5))
    assert np.abs(uni.probs - rk4.probs).max() <= 1e-9


def test_conservation_and_positivity():
    s = RateSchedule([Interval(1.0, 1.0, 30.0, 2.0, 5.0)] * 3)
    for d in oracle_path(s, None, [0.5, 2.0, 5.9]):
        assert abs(d.probs.sum() - 1.0) <= 1e-12
        assert np.all(d.probs >= 0)


def test_boundary_warning():
    s = epoch(50.0, 1.0, 2.0)
    with pytest.warns(BoundaryOccupancyWarning):
        d = oracle_transient(s, None, 2.0, OracleConfig(dim=60))
    assert d.warning is not None


def test_no_warning_when_dim_is_ample():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d = oracle_transient(epoch(3.0, 5.0, 1.0), None, 1.0)
    assert d.warning is None


def test_rejects_times_outside_horizon():
    with pytest.raises(DomainError):
        oracle_path(epoch(1.0, 2.0, 1.0), None, [1.5])


def test_path_order_independent():
    s = epoch(6.0, 5.0, 2.0)
    fwd = oracle_path(s, None, [0.3, 1.1, 2.0])
    rev = oracle_path(s, None, [2.0, 1.1, 0.3])
    for a, b in zip(fwd, rev[::-1]):
        np.testing.assert_allclose(a.probs, b.probs, atol=1e-15)
