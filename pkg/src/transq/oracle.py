"""Direct integration of the forward equations on a truncated state space.

This is a deliberately independent route to the transient distribution: it
never touches the Bessel kernel. Two integrators are provided so the oracle
can audit itself. Uniformization is the reference (positivity preserving and
exactly stochastic); classical RK4 with a small fixed step is the auditor.

The top state ``dim - 1`` reflects: its arrival rate is forced to zero, so
probability is conserved and the occupancy of that state is reported as a
measure of truncation error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distribution import QueueDistribution
from .errors import DomainError

BOUNDARY_WARN = 1e-9


class BoundaryOccupancyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OracleConfig:
    dim: int = 400
    method: str = "uniformization"
    step: float = 1e-4
    uniformization_eps: float = 1e-14

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("oracle dimension must be at least 2")
        if self.method not in ("uniformization", "rk4"):
            raise DomainError(f"unknown oracle method {self.method!r}")
        if self.step <= 0:
            raise DomainError("RK4 step must be positive")


@dataclass(frozen=True)
class OracleDistribution(QueueDistribution):
    """Oracle output with the largest top-state occupancy seen along the way."""

    boundary_occupancy: float = 0.0

    @property
    def warning(self):
        if self.boundary_occupancy > BOUNDARY_WARN:
            return (f"top state occupancy {self.boundary_occupancy:.3e} exceeds "
                    f"{BOUNDARY_WARN:g}; increase dim")
        return None


def _apply_generator(p, lam, mu):
    """Row vector times the truncated generator with a reflecting top."""
    out = np.empty_like(p)
    up = np.full(p.size, lam)
    up[-1] = 0.0
    down = np.full(p.size, mu)
    down[0] = 0.0
    out[:] = -(up + down) * p
    out[1:] += lam * p[:-1]
    out[:-1] += mu * p[1:]
    return out


def _uniformization_step(p, lam, mu, dt, eps):
    rate = lam + mu
    if rate == 0.0 or dt == 0.0:
        return p
    # Keep e^{-rate*dt} comfortably inside double range.
    pieces = max(1, int(math.ceil(rate * dt / 30.0)))
    h = dt / pieces
    a = rate * h
    for _ in range(pieces):
        v = p.copy()
        w = math.exp(-a)
        acc = w * v
        cum = w
        m = 0
        while cum < 1.0 - eps or m < a:
            m += 1
            v = v + _apply_generator(v, lam, mu) / rate
            w *= a / m
            acc = acc + w * v
            cum += w
            if w == 0.0 and m > a:
                break
        p = acc
    return p


def _rk4_step(p, lam, mu, dt, step):
    if dt == 0.0:
        return p
    h_max = min(step, 0.1 / (lam + mu)) if lam + mu > 0 else step
    n = max(1, int(math.ceil(dt / h_max)))
    h = dt / n
    for _ in range(n):
        k1 = _apply_generator(p, lam, mu)
        k2 = _apply_generator(p + 0.5 * h * k1, lam, mu)
        k3 = _apply_generator(p + 0.5 * h * k2, lam, mu)
        k4 = _apply_generator(p + h * k3, lam, mu)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def _initial_vector(p0, dim):
    if p0 is None:
        p0 = [1.0]
    elif isinstance(p0, QueueDistribution):
        p0 = p0.probs
    p0 = np.asarray(p0, dtype=float)
    if np.any(p0[dim:] != 0):
        raise DomainError("initial distribution is not supported within the oracle dimension")
    p = np.zeros(dim)
    m = min(dim, p0.size)
    p[:m] = p0[:m]
    return p


def oracle_path(schedule, p0, times, config=None):
    """Oracle distributions at each of ``times`` (any order, within the horizon)."""
    config = config or OracleConfig()
    times = np.asarray(times, dtype=float)
    order = np.argsort(times, kind="stable")
    if times.size and (times[order[0]] < 0 or times[order[-1]] > schedule.horizon):
        raise DomainError("oracle times must lie in [0, horizon]")
    p = _initial_vector(p0, config.dim)
    now = 0.0
    boundary = float(p[-1])
    results = [None] * times.size
    pieces = [sub for sub in schedule.subintervals if sub.length > 0]
    idx = 0
    for target_pos in order:
        target = float(times[target_pos])
        while now < target:
            while pieces[idx].end <= now:
                idx += 1
            sub = pieces[idx]
            stop = min(sub.end, target)
            dt = stop - now
            if config.method == "uniformization":
                p = _uniformization_step(p, sub.lam, sub.mu, dt, config.uniformization_eps)
            else:
                p = _rk4_step(p, sub.lam, sub.mu, dt, config.step)
            now = stop
            boundary = max(boundary, float(p[-1]))
        dist = OracleDistribution(p.copy(), max(1.0 - float(p.sum()), 0.0), target,
                                  boundary_occupancy=boundary)
        if dist.warning:
            warnings.warn(dist.warning, BoundaryOccupancyWarning, stacklevel=2)
        results[target_pos] = dist
    return results


def oracle_transient(schedule, p0, t, config=None):
    """Distribution at time ``t`` obtained by integrating the forward equations."""
    return oracle_path(schedule, p0, [t], config)[0]
