"""Violation probability ``V(t) = P{Q(t) > q_th}`` and its running time average.

The inequality is strict: a system holding exactly ``q_th`` packets is not in
violation. Mass beyond the truncation is counted as violating, since the
truncation always lies above the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UsageError
from .kernel import EPS_QUAD, kernel_block, kernel_integral_block
from .propagate import check_profile
from .schedule import Phase
from .quadrature import adaptive_gauss_legendre


@dataclass(frozen=True)
class ViolationSeries:
    q_th: int
    grid: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    v_bar: np.ndarray = field(repr=False)


def _check_threshold(q_th):
    if int(q_th) != q_th or q_th < 0:
        raise DomainError(f"threshold must be a nonnegative integer, got {q_th!r}")
    return int(q_th)


def violation_probability(dist, q_th):
    """``1 - sum_{n <= q_th} p_n`` for a truncated distribution."""
    q_th = _check_threshold(q_th)
    if q_th >= dist.dim:
        raise UsageError(f"threshold {q_th} not below truncation dimension {dist.dim}")
    return min(max(1.0 - float(dist.probs[: q_th + 1].sum()), 0.0), 1.0)


def _subinterval_cdf(sub, start, q_th, elapsed, eps_tail):
    """``P{Q <= q_th}`` at ``sub.start + elapsed`` for an array of ``elapsed``."""
    block = kernel_block(sub.lam, sub.mu, elapsed, start.dim, q_th + 1, eps_tail)
    return np.einsum("j,mjn->m", start.probs, block)


def _cdf_at(schedule, profile, q_th, times):
    times = np.asarray(times, dtype=float)
    out = np.empty(times.size)
    groups = {}
    for i, t in enumerate(times):
        if t == schedule.horizon:
            out[i] = float(profile.a_dists[-1].probs[: q_th + 1].sum())
            continue
        sub = schedule.locate(t)
        groups.setdefault((sub.k, sub.phase), []).append(i)
    for (k, phase), idx in groups.items():
        sub = schedule.subinterval(k, phase)
        start = profile.start_of(k, phase)
        idx = np.asarray(idx)
        out[idx] = _subinterval_cdf(sub, start, q_th, times[idx] - sub.start, profile.policy.eps_tail)
    return np.clip(out, 0.0, 1.0)


def violation_at(schedule, profile, q_th, times):
    """``V`` at each of ``times`` (any order, within the horizon)."""
    check_profile(schedule, profile)
    q_th = _check_threshold(q_th)
    return 1.0 - _cdf_at(schedule, profile, q_th, times)


def _partial_violation(sub, start, q_th, upto, eps_tail, eps_quad):
    """``int_0^upto V(sub.start + s) ds`` by adaptive Gauss-Legendre."""
    if upto == 0.0:
        return 0.0
    # integrating V itself, not 1 - cdf, keeps small values free of cancellation
    return float(adaptive_gauss_legendre(
        lambda s: 1.0 - _subinterval_cdf(sub, start, q_th, s, eps_tail), 0.0, upto, abs_tol=eps_quad))


def series_grid(schedule, points_per_subinterval):
    """Every switch point, evenly spaced interior points, and the horizon."""
    pts = []
    for sub in schedule.subintervals:
        if sub.length == 0.0:
            pts.append(sub.start)
            continue
        pts.extend(sub.start + sub.length * i / points_per_subinterval
                   for i in range(points_per_subinterval))
    pts.append(schedule.horizon)
    return np.unique(np.asarray(pts))


def violation_series(schedule, profile, q_th, points_per_subinterval=10, eps_quad=EPS_QUAD):
    """``V`` and ``V_bar`` on a grid holding every switch point plus interior points.

    ``V_bar`` is integrated from exact transient evaluations, never from the
    grid values, so the grid density does not affect it.
    """
    check_profile(schedule, profile)
    q_th = _check_threshold(q_th)
    if int(points_per_subinterval) < 1:
        raise DomainError("points_per_subinterval must be at least 1")
    grid = series_grid(schedule, int(points_per_subinterval))
    v = 1.0 - _cdf_at(schedule, profile, q_th, grid)

    eps_tail = profile.policy.eps_tail
    pieces = [sub for sub in schedule.subintervals if sub.length > 0]
    # Integral of V over each whole subinterval, then partial pieces per grid point.
    whole = []
    for sub in pieces:
        start = profile.start_of(sub.k, sub.phase)
        whole.append(_partial_violation(sub, start, q_th, sub.length, eps_tail, eps_quad))
    before = np.concatenate([[0.0], np.cumsum(whole)])
    starts = np.array([sub.start for sub in pieces])

    v_bar = np.empty(grid.size)
    for i, t in enumerate(grid):
        if t == 0.0:
            v_bar[i] = v[i]
            continue
        pos = int(np.searchsorted(starts, t, side="right")) - 1
        sub = pieces[pos]
        if t >= sub.end:
            acc = before[pos + 1]
        else:
            start = profile.start_of(sub.k, sub.phase)
            dt = t - sub.start
            acc = before[pos] + _partial_violation(sub, start, q_th, dt, eps_tail, eps_quad)
        v_bar[i] = acc / t
    return ViolationSeries(q_th, grid, v, np.clip(v_bar, 0.0, 1.0))


def _integrated_cdf(sub, start, q_th, upto, eps_tail, eps_quad):
    """``sum_j A_j sum_{n <= q_th} int_0^upto G[j, n](s) ds`` from per-state integrals."""
    if upto == 0.0:
        return 0.0
    block = kernel_integral_block(sub.lam, sub.mu, upto, start.dim, q_th + 1, eps_quad, eps_tail)
    return float(start.probs @ block.sum(axis=1))


def subinterval_violation(schedule, profile, q_th, eps_quad=EPS_QUAD):
    """Time-averaged violation over each active and inactive subinterval.

    Returns
    -------
    v_active, v_inactive : ndarray, shape (K,)
        Entry ``k - 1`` is the average of ``V`` over the corresponding
        subinterval of interval ``k``. A zero-length subinterval reports ``V``
        at its (single) instant.
    """
    check_profile(schedule, profile)
    q_th = _check_threshold(q_th)
    eps_tail = profile.policy.eps_tail
    out = np.empty(2 * len(schedule))
    for idx, sub in enumerate(schedule.subintervals):
        start = profile.start_of(sub.k, sub.phase)
        if sub.length == 0.0:
            out[idx] = 1.0 - float(start.probs[: q_th + 1].sum())
        else:
            out[idx] = 1.0 - _integrated_cdf(sub, start, q_th, sub.length, eps_tail, eps_quad) / sub.length
    out = np.clip(out, 0.0, 1.0)
    return out[0::2], out[1::2]


def time_avg_violation(schedule, profile, q_th, t_end, eps_quad=EPS_QUAD):
    """``(1 / t_end) int_0^t_end V(s) ds``."""
    check_profile(schedule, profile)
    q_th = _check_threshold(q_th)
    t_end = float(t_end)
    if not (math.isfinite(t_end) and t_end > 0):
        raise DomainError(f"t_end must be positive, got {t_end}")
    if t_end > schedule.horizon * (1 + 1e-15):
        raise DomainError(f"t_end {t_end} beyond horizon {schedule.horizon}")
    eps_tail = profile.policy.eps_tail
    inside = 0.0
    for sub in schedule.subintervals:
        if sub.length == 0.0 or sub.start >= t_end:
            continue
        upto = min(sub.length, t_end - sub.start)
        start = profile.start_of(sub.k, sub.phase)
        inside += _integrated_cdf(sub, start, q_th, upto, eps_tail, eps_quad)
    return min(max(1.0 - inside / t_end, 0.0), 1.0)


def cumulative_violation_time(schedule, profile, q_th, eps_quad=EPS_QUAD):
    """Expected time above ``q_th`` over ``[0, S_k]`` for ``k = 1..K+1``.

    Dividing entry ``k`` by ``S_k`` gives the same value as
    ``time_avg_violation(..., t_end=S_k)``; this form lets several prefix
    horizons share one pass over the schedule.
    """
    check_profile(schedule, profile)
    q_th = _check_threshold(q_th)
    eps_tail = profile.policy.eps_tail
    inside = [0.0]
    acc = 0.0
    for sub in schedule.subintervals:
        if sub.length > 0.0:
            start = profile.start_of(sub.k, sub.phase)
            acc += _integrated_cdf(sub, start, q_th, sub.length, eps_tail, eps_quad)
        if sub.phase is Phase.INACTIVE:
            inside.append(acc)
    starts = np.array([schedule.interval_start(k) for k in range(1, len(schedule) + 2)])
    return starts - np.array(inside)
