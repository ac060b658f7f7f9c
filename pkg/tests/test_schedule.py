import logging
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transq.errors import ConfigurationError, DomainError
from transq.schedule import (Interval, Phase, RateSchedule, build_schedule, make_high_low,
                             make_on_off, make_restless, rates_at)


def test_fig5a_switch_points(fig5a):
    assert [fig5a.interval_start(k) for k in range(1, 12)] == [float(k - 1) for k in range(1, 12)]
    assert fig5a.horizon == 10.0


def test_single_interval_collapses():
    s = build_schedule([Interval(1.0, 0.0, 3.0, 0.0, 5.0)])
    assert list(s.switch_points) == [0.0, 1.0, 1.0]


def test_restless_switch_points(fig5c):
    assert [fig5c.interval_start(k) for k in range(1, 12)] == [float(k - 1) for k in range(1, 12)]
    for k in range(1, 11):
        assert fig5c.subinterval(k, Phase.INACTIVE).length == 0.0


def test_on_off_rates(fig5a):
    assert rates_at(fig5a, 0.25) == (10.0, 5.0)
    assert rates_at(fig5a, 0.75) == (0.0, 5.0)
    assert rates_at(fig5a, 1.0) == (10.0, 5.0)


def test_high_low_rates(fig5b):
    assert rates_at(fig5b, 2.25) == (7.0, 5.0)
    assert rates_at(fig5b, 2.75) == (1.0, 5.0)


def test_restless_rates(fig5c):
    assert rates_at(fig5c, 5.5) == (10.0, 5.0)
    assert rates_at(fig5c, 0.5) == (5.0, 10.0)
    # a zero-length inactive piece is transparent
    assert rates_at(fig5c, 1.0) == (6.0, 9.0)


def test_degenerate_idle_schedule():
    s = make_on_off(1, 0, 1, 1, 5)
    assert s.horizon == 2.0
    assert rates_at(s, 0.5) == (0.0, 5.0)


def test_list_arguments_and_length_check():
    s = make_on_off(3, [1, 2, 3], 0.5, 0.5, 5)
    assert [iv.lambda_active for iv in s.intervals] == [1.0, 2.0, 3.0]
    with pytest.raises(ConfigurationError):
        make_on_off(3, [1, 2], 0.5, 0.5, 5)


def test_high_low_ordering_is_only_a_warning(caplog):
    with caplog.at_level(logging.WARNING):
        make_high_low(2, 1, 3, 0.5, 0.5, 5)
    assert "exceeds" in caplog.text


@pytest.mark.parametrize("kwargs", [
    dict(t_active=1, t_inactive=0, lambda_active=1, lambda_inactive=0, mu=0),
    dict(t_active=0, t_inactive=0, lambda_active=1, lambda_inactive=0, mu=1),
    dict(t_active=-1, t_inactive=2, lambda_active=1, lambda_inactive=0, mu=1),
    dict(t_active=1, t_inactive=0, lambda_active=float("nan"), lambda_inactive=0, mu=1),
])
def test_invalid_intervals(kwargs):
    with pytest.raises(ConfigurationError):
        Interval(**kwargs)


def test_empty_schedule():
    with pytest.raises(ConfigurationError):
        RateSchedule([])


def test_locate_outside_horizon(fig5a):
    with pytest.raises(DomainError):
        rates_at(fig5a, 10.0)
    with pytest.raises(DomainError):
        rates_at(fig5a, -0.1)


def test_prefix_and_equality(fig5a):
    assert fig5a.prefix(10) == fig5a
    assert fig5a.prefix(3).horizon == 3.0
    assert hash(fig5a.prefix(10)) == hash(fig5a)


durations = st.floats(0.0, 5.0).map(lambda v: round(v, 3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(durations, durations, st.floats(0, 20), st.floats(0.1, 20)), min_size=1, max_size=12))
def test_horizon_additivity_and_piecewise_rates(rows):
    rows = [(a, b + 0.001, lam, mu) for a, b, lam, mu in rows]
    s = RateSchedule(Interval(a, b, lam, 0.5 * lam, mu) for a, b, lam, mu in rows)
    assert s.horizon == float(sum(Fraction(a) + Fraction(b) for a, b, _, _ in rows))
    sp = s.switch_points
    assert sp[0] == 0.0 and all(x <= y for x, y in zip(sp, sp[1:]))
    for sub in s.subintervals:
        if sub.length > 0:
            mid = sub.start + 0.5 * sub.length
            assert rates_at(s, sub.start) == rates_at(s, mid) == (sub.lam, sub.mu)
