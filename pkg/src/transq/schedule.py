"""Piecewise-constant rate plans and the three traffic-model constructors.

Time is divided into intervals ``k = 1..K``. Interval ``k`` is an active
subinterval of length ``t_active`` with arrival rate ``lambda_active``,
followed by an inactive subinterval of length ``t_inactive`` with arrival rate
``lambda_inactive``. The service rate ``mu`` is constant over the interval.
Subintervals are half-open, ``[start, start + length)``.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import ConfigurationError, DomainError

log = logging.getLogger(__name__)


class Phase(str, Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(frozen=True)
class Interval:
    t_active: float
    t_inactive: float
    lambda_active: float
    lambda_inactive: float
    mu: float

    def __post_init__(self):
        for name in ("t_active", "t_inactive", "lambda_active", "lambda_inactive", "mu"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise ConfigurationError(f"{name} must be nonnegative, got {value!r}")
            object.__setattr__(self, name, value)
        if self.mu <= 0:
            raise ConfigurationError(f"service rate must be positive, got {self.mu!r}")
        if self.t_active + self.t_inactive <= 0:
            raise ConfigurationError("an interval must have positive total length")

    @property
    def length(self):
        return self.t_active + self.t_inactive


@dataclass(frozen=True)
class Subinterval:
    """One constant-rate piece of a schedule (``k`` is 1-based)."""

    k: int
    phase: Phase
    start: float
    length: float
    lam: float
    mu: float

    @property
    def end(self):
        return self.start + self.length


def _exact_sum(values):
    # Fractions make S_{k+1} - S_k equal T_k^A + T_k^I bit-for-bit.
    total = Fraction(0)
    out = [0.0]
    for v in values:
        total += Fraction(v)
        out.append(float(total))
    return out


class RateSchedule:
    """Ordered intervals together with their switching points.

    ``switch_points`` holds ``S_1, S_1 + T_1^A, S_2, S_2 + T_2^A, ..., S_{K+1}``.
    """

    def __init__(self, intervals):
        intervals = tuple(intervals)
        if not intervals:
            raise ConfigurationError("a schedule needs at least one interval")
        for iv in intervals:
            if not isinstance(iv, Interval):
                raise ConfigurationError(f"expected Interval, got {type(iv).__name__}")
        self._intervals = intervals
        lengths = []
        for iv in intervals:
            lengths.extend((iv.t_active, iv.t_inactive))
        self._switch_points = tuple(_exact_sum(lengths))
        subs = []
        for k, iv in enumerate(intervals, start=1):
            s_a = self._switch_points[2 * k - 2]
            s_i = self._switch_points[2 * k - 1]
            subs.append(Subinterval(k, Phase.ACTIVE, s_a, s_i - s_a, iv.lambda_active, iv.mu))
            subs.append(Subinterval(k, Phase.INACTIVE, s_i, self._switch_points[2 * k] - s_i,
                                    iv.lambda_inactive, iv.mu))
        self._subintervals = tuple(subs)

    @property
    def intervals(self):
        return self._intervals

    @property
    def switch_points(self):
        return self._switch_points

    @property
    def subintervals(self):
        return self._subintervals

    @property
    def horizon(self):
        return self._switch_points[-1]

    def __len__(self):
        return len(self._intervals)

    def interval_start(self, k):
        """``S_k`` for 1-based ``k`` in ``1..K+1``."""
        return self._switch_points[2 * (k - 1)]

    def subinterval(self, k, phase):
        phase = Phase(phase)
        return self._subintervals[2 * (k - 1) + (phase is Phase.INACTIVE)]

    def locate(self, t):
        """Subinterval containing ``t`` under the half-open convention."""
        t = float(t)
        if not (0.0 <= t < self.horizon):
            raise DomainError(f"time {t} outside [0, {self.horizon})")
        # Rightmost switch point <= t; zero-length pieces are skipped over.
        idx = bisect.bisect_right(self._switch_points, t) - 1
        return self._subintervals[idx]

    def prefix(self, n_intervals):
        """Schedule made of the first ``n_intervals`` intervals."""
        return RateSchedule(self._intervals[:n_intervals])

    def __eq__(self, other):
        return isinstance(other, RateSchedule) and self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)

    def __repr__(self):
        return f"RateSchedule(K={len(self)}, horizon={self.horizon})"


def build_schedule(intervals):
    return RateSchedule(intervals)


def rates_at(schedule, t):
    """Return ``(lambda, mu)`` in force at time ``t``."""
    sub = schedule.locate(t)
    return sub.lam, sub.mu


def _per_k(value, K, name):
    if callable(value):
        return [float(value(k)) for k in range(1, K + 1)]
    if isinstance(value, (list, tuple)):
        if len(value) != K:
            raise ConfigurationError(f"{name} has {len(value)} entries, expected {K}")
        return [float(v) for v in value]
    return [float(value)] * K


def _check_count(K):
    if int(K) != K or K < 1:
        raise ConfigurationError(f"number of intervals must be a positive integer, got {K!r}")
    return int(K)


def make_on_off(K, lambda_on, t_on, t_off, mu):
    """On-off model: bursts at ``lambda_on`` separated by silent periods.

    Every argument except ``K`` may be a scalar, a length-``K`` list or a
    function of the 1-based interval index.
    """
    K = _check_count(K)
    lam = _per_k(lambda_on, K, "lambda_on")
    ta = _per_k(t_on, K, "t_on")
    ti = _per_k(t_off, K, "t_off")
    mus = _per_k(mu, K, "mu")
    return RateSchedule(Interval(ta[i], ti[i], lam[i], 0.0, mus[i]) for i in range(K))


def make_high_low(K, lambda_high, lambda_low, t_high, t_low, mu):
    """High-low model: a persistent background rate with periodic surges."""
    K = _check_count(K)
    hi = _per_k(lambda_high, K, "lambda_high")
    lo = _per_k(lambda_low, K, "lambda_low")
    th = _per_k(t_high, K, "t_high")
    tl = _per_k(t_low, K, "t_low")
    mus = _per_k(mu, K, "mu")
    for k in range(K):
        if lo[k] > hi[k]:
            log.warning("interval %d: low rate %g exceeds high rate %g", k + 1, lo[k], hi[k])
    return RateSchedule(Interval(th[i], tl[i], hi[i], lo[i], mus[i]) for i in range(K))


def make_restless(K, lambda_, mu, t_interval):
    """Restless model: rates change every interval, no inactive subintervals."""
    K = _check_count(K)
    lam = _per_k(lambda_, K, "lambda")
    mus = _per_k(mu, K, "mu")
    ts = _per_k(t_interval, K, "t_interval")
    return RateSchedule(Interval(ts[i], 0.0, lam[i], 0.0, mus[i]) for i in range(K))
