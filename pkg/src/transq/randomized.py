"""Schedules whose subinterval lengths are independent random variables.

Switch-point laws follow the same recursion as the deterministic case with
every kernel replaced by its expectation over the subinterval length. The
per-subinterval violation averages use

    E[int_0^T G(s) ds] = int_0^inf G(s) P{T > s} ds,

so that each duration family needs only one-dimensional quadrature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distribution import QueueDistribution
from .errors import ConfigurationError, DomainError
from .kernel import EPS_QUAD, EPS_TAIL, _check_rates, kernel_block, kernel_integral_block
from .propagate import SwitchingProfile, TruncationPolicy, _check_initial, advance, check_profile
from .quadrature import adaptive_gauss_legendre, gauss_laguerre
from .schedule import Interval, Phase

log = logging.getLogger(__name__)

LAGUERRE_NODES = 64
EXPONENTIAL_CUTOFF = 40.0  # in units of the mean
AGREEMENT = 1e-8


@dataclass(frozen=True)
class DurationDistribution:
    """Law of a subinterval length: ``point_mass``, ``exponential`` or ``uniform``."""

    kind: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if not all(math.isfinite(p) for p in params):
            raise ConfigurationError("duration parameters must be finite")
        if self.kind == "point_mass":
            if len(params) != 1 or params[0] < 0:
                raise ConfigurationError("point_mass needs one nonnegative value")
        elif self.kind == "exponential":
            if len(params) != 1 or params[0] <= 0:
                raise ConfigurationError("exponential needs a positive mean")
        elif self.kind == "uniform":
            if len(params) != 2 or not 0 <= params[0] < params[1]:
                raise ConfigurationError("uniform needs 0 <= lo < hi")
        else:
            raise ConfigurationError(f"unknown duration law {self.kind!r}")

    @classmethod
    def point_mass(cls, value):
        return cls("point_mass", (value,))

    @classmethod
    def exponential(cls, mean):
        return cls("exponential", (mean,))

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (lo, hi))

    def mean(self):
        if self.kind == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        return self.params[0]

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "point_mass":
            return (t >= self.params[0]).astype(float)
        if self.kind == "exponential":
            return np.where(t > 0, -np.expm1(-np.maximum(t, 0) / self.params[0]), 0.0)
        lo, hi = self.params
        return np.clip((t - lo) / (hi - lo), 0.0, 1.0)

    def survival(self, t):
        return 1.0 - self.cdf(t)

    def sample(self, rng, size):
        if self.kind == "point_mass":
            return np.full(size, self.params[0])
        if self.kind == "exponential":
            return rng.exponential(self.params[0], size)
        return rng.uniform(self.params[0], self.params[1], size)

    def __str__(self):
        return f"{self.kind}({', '.join(repr(p) for p in self.params)})"


@dataclass(frozen=True)
class RandomInterval:
    dur_active: DurationDistribution
    dur_inactive: DurationDistribution
    lambda_active: float
    lambda_inactive: float
    mu: float

    def __post_init__(self):
        # Reuse the deterministic validation of the rates.
        Interval(1.0, 0.0, self.lambda_active, self.lambda_inactive, self.mu)
        object.__setattr__(self, "lambda_active", float(self.lambda_active))
        object.__setattr__(self, "lambda_inactive", float(self.lambda_inactive))
        object.__setattr__(self, "mu", float(self.mu))


@dataclass(frozen=True)
class RandomSubinterval:
    k: int
    phase: Phase
    duration: DurationDistribution
    lam: float
    mu: float


class RandomizedSchedule:
    def __init__(self, intervals):
        intervals = tuple(intervals)
        if not intervals:
            raise ConfigurationError("a schedule needs at least one interval")
        self._intervals = intervals
        subs = []
        for k, iv in enumerate(intervals, start=1):
            subs.append(RandomSubinterval(k, Phase.ACTIVE, iv.dur_active, iv.lambda_active, iv.mu))
            subs.append(RandomSubinterval(k, Phase.INACTIVE, iv.dur_inactive, iv.lambda_inactive, iv.mu))
        self._subintervals = tuple(subs)
        total = Fraction(0)
        points = [0.0]
        for sub in subs:
            total += Fraction(sub.duration.mean())
            points.append(float(total))
        self._expected_switch_points = tuple(points)

    @classmethod
    def from_schedule(cls, schedule):
        """Point-mass version of a deterministic schedule."""
        pm = DurationDistribution.point_mass
        return cls(RandomInterval(pm(iv.t_active), pm(iv.t_inactive), iv.lambda_active,
                                  iv.lambda_inactive, iv.mu) for iv in schedule.intervals)

    @property
    def intervals(self):
        return self._intervals

    @property
    def subintervals(self):
        return self._subintervals

    @property
    def expected_switch_points(self):
        return self._expected_switch_points

    def subinterval(self, k, phase):
        return self._subintervals[2 * (k - 1) + (Phase(phase) is Phase.INACTIVE)]

    def __len__(self):
        return len(self._intervals)

    def __eq__(self, other):
        return isinstance(other, RandomizedSchedule) and self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)


def _exponential_by_legendre(lam, mu, mean, n_rows, n_cols, eps_tail):
    def integrand(ts):
        g = kernel_block(lam, mu, ts, n_rows, n_cols, eps_tail)
        return g * (np.exp(-ts / mean) / mean)[:, None, None]

    return adaptive_gauss_legendre(integrand, 0.0, EXPONENTIAL_CUTOFF * mean, abs_tol=1e-10)


def expected_kernel_block(dur, lam, mu, n_rows, n_cols, eps_tail=EPS_TAIL):
    """``E[G[j, n](T)]`` over ``T ~ dur`` for ``j < n_rows``, ``n < n_cols``."""
    lam, mu = _check_rates(lam, mu)
    if dur.kind == "point_mass":
        return kernel_block(lam, mu, [dur.params[0]], n_rows, n_cols, eps_tail)[0]
    if dur.kind == "uniform":
        lo, hi = dur.params
        total = adaptive_gauss_legendre(
            lambda ts: kernel_block(lam, mu, ts, n_rows, n_cols, eps_tail), lo, hi,
            abs_tol=1e-10 * (hi - lo))
        return np.clip(total / (hi - lo), 0.0, 1.0)
    mean = dur.params[0]
    u, w = gauss_laguerre(LAGUERRE_NODES)
    g = kernel_block(lam, mu, mean * u, n_rows, n_cols, eps_tail)
    laguerre = np.tensordot(w, g, axes=1)
    legendre = _exponential_by_legendre(lam, mu, mean, n_rows, n_cols, eps_tail)
    gap = float(np.abs(laguerre - legendre).max())
    if gap <= AGREEMENT:
        return np.clip(laguerre, 0.0, 1.0)
    log.debug("Gauss-Laguerre off by %.2e (lam=%g, mu=%g, mean=%g); using panels", gap, lam, mu, mean)
    return np.clip(legendre, 0.0, 1.0)


def expected_kernel(j, n, dur, lam, mu):
    """``E[G[j, n](T; lam, mu)]`` with ``T`` distributed as ``dur``."""
    if j < 0 or n < 0:
        raise DomainError("states must be nonnegative")
    return float(expected_kernel_block(dur, lam, mu, j + 1, n + 1)[j, n])


def expected_integral_block(dur, lam, mu, n_rows, n_cols, eps_quad=EPS_QUAD, eps_tail=EPS_TAIL):
    """``E[int_0^T G[j, n](s) ds]`` over ``T ~ dur``."""
    lam, mu = _check_rates(lam, mu)
    if dur.kind == "point_mass":
        return kernel_integral_block(lam, mu, dur.params[0], n_rows, n_cols, eps_quad, eps_tail)
    if dur.kind == "exponential":
        # int_0^inf G(s) e^{-s/m} ds = m E[G(T)]
        mean = dur.params[0]
        return mean * expected_kernel_block(dur, lam, mu, n_rows, n_cols, eps_tail)
    lo, hi = dur.params
    head = kernel_integral_block(lam, mu, lo, n_rows, n_cols, eps_quad, eps_tail)

    def ramp(ts):
        g = kernel_block(lam, mu, ts, n_rows, n_cols, eps_tail)
        return g * ((hi - ts) / (hi - lo))[:, None, None]

    return head + adaptive_gauss_legendre(ramp, lo, hi, abs_tol=eps_quad)


def randomized_switch_profile(rs, p0=None, policy=None):
    """Switch-point laws ``A_k``, ``I_k`` under random subinterval lengths.

    Time stamps are the expected switching instants.
    """
    policy = policy or TruncationPolicy()
    current = _check_initial(p0, policy)
    a_dists = [current]
    i_dists = []
    for idx, sub in enumerate(rs.subintervals):
        stamp = rs.expected_switch_points[idx + 1]
        if sub.duration.kind == "point_mass" and sub.duration.params[0] == 0.0:
            current = QueueDistribution(current.probs, current.tail_mass, stamp)
        else:
            def block(n_rows, n_cols, sub=sub):
                return expected_kernel_block(sub.duration, sub.lam, sub.mu, n_rows, n_cols,
                                             policy.eps_tail)
            current = advance(current, block, stamp, policy, where=(sub.k, sub.phase.value))
        if sub.phase is Phase.ACTIVE:
            i_dists.append(current)
        else:
            a_dists.append(current)
    return SwitchingProfile(rs, tuple(a_dists), tuple(i_dists), policy)


def expected_subinterval_violation(rs, profile, k, phase, q_th, eps_quad=EPS_QUAD):
    """Expected fraction of the ``phase`` subinterval of interval ``k`` spent above ``q_th``."""
    check_profile(rs, profile)
    if not 1 <= k <= len(rs):
        raise DomainError(f"interval {k} outside 1..{len(rs)}")
    q_th = int(q_th)
    sub = rs.subinterval(k, phase)
    start = profile.start_of(k, phase)
    mean = sub.duration.mean()
    if mean == 0.0:
        return min(max(1.0 - float(start.probs[: q_th + 1].sum()), 0.0), 1.0)
    block = expected_integral_block(sub.duration, sub.lam, sub.mu, start.dim, q_th + 1, eps_quad,
                                    profile.policy.eps_tail)
    inside = float(start.probs @ block.sum(axis=1))
    return min(max(1.0 - inside / mean, 0.0), 1.0)


def randomized_time_avg_violation(rs, q_th, k_end, p0=None, policy=None, profile=None):
    """Expected time above ``q_th`` over intervals ``1..k_end`` divided by their expected length."""
    if not 1 <= k_end <= len(rs):
        raise DomainError(f"k_end {k_end} outside 1..{len(rs)}")
    if profile is None:
        profile = randomized_switch_profile(rs, p0, policy)
    num = 0.0
    den = 0.0
    for k in range(1, k_end + 1):
        for phase in (Phase.ACTIVE, Phase.INACTIVE):
            m = rs.subinterval(k, phase).duration.mean()
            if m == 0.0:
                continue
            num += m * expected_subinterval_violation(rs, profile, k, phase, q_th)
            den += m
    return num / den
