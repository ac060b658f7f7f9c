"""Queue-length distributions at switching points and at arbitrary times.

Across each subinterval the distribution is multiplied by the kernel matrix
of that subinterval's rates: ``I_k = A_k G_k^A`` and ``A_{k+1} = I_k G_k^I``.
Inside a subinterval, ``p(t)`` is the distribution at the subinterval's start
multiplied by the kernel for the elapsed time.

The state space is truncated adaptively. Each product starts with at least
``n_start`` output states and doubles until the probability newly pushed
beyond the truncation is below ``eps_mass * leak_fraction``. Negative
round-off is clamped and the deficit is reported as tail mass; nothing is
ever renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import EPS_MASS, QueueDistribution
from .errors import CapacityError, DomainError, UsageError
from .kernel import EPS_TAIL, kernel_block
from .schedule import Phase

TRIM_MASS = 1e-20


@dataclass(frozen=True)
class TruncationPolicy:
    eps_mass: float = EPS_MASS
    n_start: int = 64
    n_max: int = 2000
    leak_fraction: float = 1e-3
    eps_tail: float = EPS_TAIL

    def __post_init__(self):
        if not 0 < self.eps_mass < 1:
            raise DomainError("eps_mass must lie in (0, 1)")
        if self.n_start < 1 or self.n_max < self.n_start:
            raise DomainError("need 1 <= n_start <= n_max")


@dataclass(frozen=True)
class SwitchingProfile:
    """Distributions at every switching point of a schedule.

    ``a_dists[k - 1]`` is ``p(S_k)`` for ``k = 1..K+1`` and ``i_dists[k - 1]``
    is ``p(S_k + T_k^A)`` for ``k = 1..K``.
    """

    schedule: object
    a_dists: tuple
    i_dists: tuple
    policy: TruncationPolicy = TruncationPolicy()

    def a(self, k):
        return self.a_dists[k - 1]

    def i(self, k):
        return self.i_dists[k - 1]

    def start_of(self, k, phase):
        """Distribution at the start of the ``phase`` subinterval of interval ``k``."""
        return self.a(k) if Phase(phase) is Phase.ACTIVE else self.i(k)


def _trim(probs, keep):
    """Drop trailing states whose combined mass is negligible."""
    suffix = np.cumsum(probs[::-1])[::-1]
    small = np.flatnonzero(suffix >= TRIM_MASS)
    last = int(small[-1]) + 1 if small.size else 1
    return probs[: max(last, min(keep, probs.size))]


def advance(dist, block, timestamp, policy, where=None):
    """Multiply ``dist`` by a (possibly expected) kernel supplied blockwise.

    Parameters
    ----------
    dist : QueueDistribution
    block : callable
        ``block(n_rows, n_cols)`` returns the kernel restricted to initial
        states ``< n_rows`` and final states ``< n_cols``.
    timestamp : float
        Time stamp of the result.
    policy : TruncationPolicy
    where : tuple, optional
        ``(k, phase)`` reported in capacity errors.
    """
    p = dist.probs
    mass_in = float(p.sum())
    n_cols = max(policy.n_start, dist.dim)
    budget = policy.eps_mass * policy.leak_fraction
    if n_cols > policy.n_max:
        n_cols = policy.n_max
    while True:
        out = p @ block(dist.dim, n_cols)
        leak = mass_in - float(out.sum())
        if leak <= budget:
            break
        if n_cols >= policy.n_max:
            k, phase = where or (None, None)
            raise CapacityError(
                f"interval {k} ({phase}): tail mass target {policy.eps_mass:g} not met "
                f"within {policy.n_max} states", interval=k, phase=phase)
        n_cols = min(2 * n_cols, policy.n_max)
    np.maximum(out, 0.0, out=out)
    out = _trim(out, policy.n_start)
    result = QueueDistribution.from_probs(out, timestamp=timestamp)
    if result.tail_mass > policy.eps_mass:
        k, phase = where or (None, None)
        raise CapacityError(
            f"interval {k} ({phase}): accumulated tail mass {result.tail_mass:.3e} exceeds "
            f"{policy.eps_mass:g}", interval=k, phase=phase)
    return result


def _constant_rate_block(lam, mu, elapsed, eps_tail):
    def block(n_rows, n_cols):
        return kernel_block(lam, mu, [elapsed], n_rows, n_cols, eps_tail)[0]
    return block


def _check_initial(p0, policy):
    if p0 is None:
        p0 = QueueDistribution.delta(0)
    elif not isinstance(p0, QueueDistribution):
        p0 = QueueDistribution.from_probs(p0, timestamp=0.0)
    if p0.tail_mass > policy.eps_mass:
        raise DomainError(f"initial tail mass {p0.tail_mass:.3e} exceeds eps_mass")
    if p0.timestamp != 0.0:
        p0 = QueueDistribution(p0.probs, p0.tail_mass, 0.0)
    return p0


def propagate_switch_points(schedule, p0=None, policy=None):
    """Distributions at every switching point, starting from ``p0`` (default: empty)."""
    policy = policy or TruncationPolicy()
    current = _check_initial(p0, policy)
    a_dists = [current]
    i_dists = []
    for sub in schedule.subintervals:
        if sub.length == 0.0:
            current = QueueDistribution(current.probs, current.tail_mass, sub.end)
        else:
            block = _constant_rate_block(sub.lam, sub.mu, sub.length, policy.eps_tail)
            current = advance(current, block, sub.end, policy, where=(sub.k, sub.phase.value))
        if sub.phase is Phase.ACTIVE:
            i_dists.append(current)
        else:
            a_dists.append(current)
    return SwitchingProfile(schedule, tuple(a_dists), tuple(i_dists), policy)


def check_profile(schedule, profile):
    if profile.schedule != schedule:
        raise UsageError("profile was built from a different schedule")


def transient_at(schedule, profile, t):
    """Queue-length distribution at time ``t`` in ``[0, horizon]``."""
    check_profile(schedule, profile)
    t = float(t)
    if not (0.0 <= t <= schedule.horizon):
        raise DomainError(f"time {t} outside [0, {schedule.horizon}]")
    if t == schedule.horizon:
        return profile.a_dists[-1]
    sub = schedule.locate(t)
    start = profile.start_of(sub.k, sub.phase)
    elapsed = t - sub.start
    if elapsed == 0.0:
        return QueueDistribution(start.probs, start.tail_mass, t)
    block = _constant_rate_block(sub.lam, sub.mu, elapsed, profile.policy.eps_tail)
    return advance(start, block, t, profile.policy, where=(sub.k, sub.phase.value))
