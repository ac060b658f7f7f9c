"""Monte-Carlo simulation of the queue under switching rates.

Within a constant-rate piece the next arrival is Exp(lam) and, when the
system is busy, the next service completion is Exp(mu). At every rate switch
pending clocks are discarded and redrawn under the new rates, which is exact
by memorylessness and matches a Markov chain whose death rate is ``mu(t)``.

Paths are simulated in fixed blocks of ``BLOCK_SIZE``. Block ``b`` draws from
its own Philox stream derived from ``(seed, b)``, and block results are
reduced in block order, so estimates are bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distribution import QueueDistribution
from .errors import DomainError, UsageError

BLOCK_SIZE = 4096
THREADS_ENV = "TRANSQ_THREADS"
MIN_RUNS = 100

_PATH_STREAM = 0
_DURATION_STREAM = 1


def path_stream(seed, index, purpose=_PATH_STREAM):
    """Independent Philox generator for block (or path) ``index`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


def default_threads():
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    return 1


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant path: ``states[i]`` holds on ``[times[i], times[i+1])``."""

    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    horizon: float
    arrivals: int
    departures: int

    def at(self, t):
        if not 0 <= t <= self.horizon:
            raise DomainError(f"time {t} outside [0, {self.horizon}]")
        return int(self.states[np.searchsorted(self.times, t, side="right") - 1])

    def time_above(self, q_th, t0=0.0, t1=None):
        """Total time in ``[t0, t1]`` with more than ``q_th`` packets."""
        t1 = self.horizon if t1 is None else t1
        edges = np.append(self.times, self.horizon)
        lo = np.clip(edges[:-1], t0, t1)
        hi = np.clip(edges[1:], t0, t1)
        return math.fsum((hi - lo)[self.states > q_th])


def _sample_initial(rng, initial, size):
    if initial is None:
        return np.zeros(size, dtype=np.int64)
    probs = initial.probs if isinstance(initial, QueueDistribution) else np.asarray(initial, float)
    cdf = np.cumsum(probs)
    u = rng.random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1).astype(np.int64)


def simulate_path(schedule, rng, initial=None):
    """One event-driven sample path over the whole schedule."""
    q = int(_sample_initial(rng, initial, 1)[0])
    times = [0.0]
    states = [q]
    arrivals = departures = 0
    for sub in schedule.subintervals:
        t = sub.start
        end = sub.end
        while True:
            next_arrival = rng.exponential(1.0 / sub.lam) if sub.lam > 0 else math.inf
            next_service = rng.exponential(1.0 / sub.mu) if q > 0 else math.inf
            step = min(next_arrival, next_service)
            if t + step >= end:
                break
            t += step
            if next_arrival <= next_service:
                q += 1
                arrivals += 1
            else:
                q -= 1
                departures += 1
            times.append(t)
            states.append(q)
    return Trajectory(np.asarray(times), np.asarray(states, dtype=np.int64), schedule.horizon,
                      arrivals, departures)


def _simulate_block(rng, lams, mus, durations, q, grid, q_th):
    """Vectorized simulation of one block of paths.

    Parameters
    ----------
    lams, mus : sequence of float, length M
        Rates of each piece in order.
    durations : ndarray, shape (B, M)
        Per-path piece lengths.
    q : ndarray, shape (B,)
        Initial states (modified in place).
    grid : ndarray, shape (G,)
        Observation instants.

    Returns
    -------
    dict with ``grid_states`` (B, G), ``grid_above`` (B, G) time above
    ``q_th`` up to each grid point, ``starts`` (B, M + 1) states at each piece
    start, and ``above`` (B, M) time above ``q_th`` in each piece.
    """
    n_paths, n_pieces = durations.shape
    grid_states = np.zeros((n_paths, grid.size), dtype=np.int64)
    grid_above = np.zeros((n_paths, grid.size))
    cum = np.zeros(n_paths)
    gp = np.zeros(n_paths, dtype=np.int64)
    starts = np.empty((n_paths, n_pieces + 1), dtype=np.int64)
    above = np.zeros((n_paths, n_pieces))
    t = np.zeros(n_paths)
    all_idx = np.arange(n_paths)

    def record(idx, until):
        # Grid points in [t, until) see the current state.
        g = gp[idx]
        while True:
            live = g < grid.size
            live[live] = grid[g[live]] < until[live]
            if not np.any(live):
                break
            sel = idx[live]
            gl = g[live]
            grid_states[sel, gl] = q[sel]
            grid_above[sel, gl] = cum[sel] + np.where(q[sel] > q_th, grid[gl] - t[sel], 0.0)
            g[live] += 1
        gp[idx] = g

    for m in range(n_pieces):
        starts[:, m] = q
        lam, mu = lams[m], mus[m]
        end = t + durations[:, m]
        act = all_idx
        while act.size:
            qa = q[act]
            rate = lam + mu * (qa > 0)
            gap = rng.standard_exponential(act.size)
            u = rng.random(act.size)
            with np.errstate(divide="ignore"):
                step = np.where(rate > 0, gap / np.where(rate > 0, rate, 1.0), np.inf)
            t_next = t[act] + step
            done = t_next >= end[act]
            stop = np.where(done, end[act], t_next)
            record(act, stop)
            spent = np.where(qa > q_th, stop - t[act], 0.0)
            above[act, m] += spent
            cum[act] += spent
            t[act] = stop
            go = ~done
            moving = act[go]
            arrive = u[go] * rate[go] < lam
            q[moving] += np.where(arrive, 1, -1)
            act = moving
    starts[:, n_pieces] = q
    record(all_idx, np.full(n_paths, np.inf))
    return {"grid_states": grid_states, "grid_above": grid_above, "starts": starts, "above": above}


@dataclass(frozen=True)
class SimConfig:
    runs: int
    seed: int
    grid: tuple
    q_th: int
    initial: object = None
    threads: int = None

    def __post_init__(self):
        if int(self.runs) < 1:
            raise UsageError("runs must be at least 1")
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if any(b < a for a, b in zip(self.grid, self.grid[1:])):
            raise UsageError("grid must be ascending")


@dataclass(frozen=True)
class SimEstimate:
    grid: np.ndarray = field(repr=False)
    v_hat: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    v_bar_hat: float
    v_bar_stderr: float
    runs_used: int
    grid_histograms: tuple = field(default=(), repr=False)
    v_bar_series: np.ndarray = field(default=None, repr=False)
    v_bar_series_stderr: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class RandomizedEstimate:
    """Switch-point histograms and per-subinterval time-above-threshold ratios.

    ``a_hist[k - 1]`` counts ``Q(S_k)`` over paths, ``i_hist[k - 1]`` counts
    ``Q(S_k + T_k^A)``. ``sub_ratio[2(k-1)]`` and ``sub_ratio[2(k-1)+1]`` are
    the active and inactive estimates of expected time above the threshold
    divided by expected duration, with delta-method standard errors.
    """

    a_hist: tuple = field(repr=False)
    i_hist: tuple = field(repr=False)
    sub_ratio: np.ndarray = field(repr=False)
    sub_ratio_stderr: np.ndarray = field(repr=False)
    v_bar_hat: float
    v_bar_stderr: float
    runs_used: int


def _block_sizes(runs):
    full, rest = divmod(int(runs), BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _run_blocks(work, runs, threads):
    sizes = _block_sizes(runs)
    threads = threads or default_threads()
    jobs = list(enumerate(sizes))
    if threads == 1:
        return [work(b, n) for b, n in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: work(*job), jobs))


def _histograms(columns):
    """Integer histograms for each column of a stack of state arrays."""
    return tuple(np.bincount(col) for col in columns)


def _merge_hist(parts):
    size = max(p.size for p in parts)
    out = np.zeros(size, dtype=np.int64)
    for p in parts:
        out[: p.size] += p
    return out


def estimate_violation(schedule, config):
    """Monte-Carlo estimate of ``V`` on ``config.grid`` and of ``V_bar`` at the horizon."""
    grid = np.asarray(config.grid, dtype=float)
    if grid.size == 0:
        raise UsageError("observation grid is empty")
    if config.runs < MIN_RUNS:
        raise UsageError(f"need at least {MIN_RUNS} runs for standard errors, got {config.runs}")
    if grid[0] < 0 or grid[-1] > schedule.horizon:
        raise UsageError("grid must lie within [0, horizon]")
    subs = schedule.subintervals
    lams = [s.lam for s in subs]
    mus = [s.mu for s in subs]
    lengths = np.array([s.length for s in subs])
    horizon = schedule.horizon

    def work(b, n):
        rng = path_stream(config.seed, b)
        q0 = _sample_initial(rng, config.initial, n)
        out = _simulate_block(rng, lams, mus, np.broadcast_to(lengths, (n, lengths.size)).copy(),
                              q0, grid, config.q_th)
        frac = out["above"].sum(axis=1) / horizon
        with np.errstate(invalid="ignore", divide="ignore"):
            gfrac = np.where(grid > 0, out["grid_above"] / grid, out["grid_states"] > config.q_th)
        return ((out["grid_states"] > config.q_th).sum(axis=0),
                math.fsum(frac), math.fsum(frac * frac),
                _histograms(out["grid_states"].T),
                np.array([math.fsum(c) for c in gfrac.T]),
                np.array([math.fsum(c) for c in (gfrac * gfrac).T]))

    parts = _run_blocks(work, config.runs, config.threads)
    runs = int(config.runs)
    counts = np.sum([p[0] for p in parts], axis=0)
    v_hat = counts / runs
    s1 = math.fsum(p[1] for p in parts)
    s2 = math.fsum(p[2] for p in parts)
    v_bar = s1 / runs
    var = max(s2 / runs - v_bar * v_bar, 0.0) * runs / max(runs - 1, 1)
    hists = tuple(_merge_hist([p[3][g] for p in parts]) for g in range(grid.size))
    g1 = np.array([math.fsum(col) for col in zip(*(p[4] for p in parts))]) / runs
    g2 = np.array([math.fsum(col) for col in zip(*(p[5] for p in parts))]) / runs
    gvar = np.maximum(g2 - g1 * g1, 0.0) * runs / max(runs - 1, 1)
    return SimEstimate(grid=grid, v_hat=v_hat, stderr=np.sqrt(v_hat * (1 - v_hat) / runs),
                       v_bar_hat=v_bar, v_bar_stderr=math.sqrt(var / runs), runs_used=runs,
                       grid_histograms=hists, v_bar_series=g1,
                       v_bar_series_stderr=np.sqrt(gvar / runs))


def _ratio_stats(x_sums, y_sums, xx, yy, xy, n):
    """Ratio-of-means estimate sum(x)/sum(y) with its delta-method standard error."""
    mx, my = x_sums / n, y_sums / n
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(my > 0, mx / my, 0.0)
        vx = xx / n - mx * mx
        vy = yy / n - my * my
        cxy = xy / n - mx * my
        var = np.where(my > 0, (vx - 2 * r * cxy + r * r * vy) / (my * my), 0.0)
    return r, np.sqrt(np.maximum(var, 0.0) / max(n - 1, 1))


def estimate_randomized(rs, config):
    """Simulate with per-path random subinterval lengths drawn from their laws."""
    subs = rs.subintervals
    lams = [s.lam for s in subs]
    mus = [s.mu for s in subs]
    grid = np.asarray(config.grid, dtype=float)

    def work(b, n):
        rng = path_stream(config.seed, b)
        drng = path_stream(config.seed, b, _DURATION_STREAM)
        durations = np.column_stack([s.duration.sample(drng, n) for s in subs])
        q0 = _sample_initial(rng, config.initial, n)
        out = _simulate_block(rng, lams, mus, durations, q0, grid, config.q_th)
        x, y = out["above"], durations
        total_x, total_y = x.sum(axis=1), y.sum(axis=1)
        sums = [np.array([math.fsum(col) for col in arr.T]) for arr in (x, y, x * x, y * y, x * y)]
        tot = [math.fsum(v) for v in (total_x, total_y, total_x ** 2, total_y ** 2, total_x * total_y)]
        return sums, tot, _histograms(out["starts"].T)

    parts = _run_blocks(work, config.runs, config.threads)
    runs = int(config.runs)
    agg = [np.sum([p[0][i] for p in parts], axis=0) for i in range(5)]
    tot = [math.fsum(p[1][i] for p in parts) for i in range(5)]
    ratio, ratio_se = _ratio_stats(*agg, runs)
    vbar, vbar_se = _ratio_stats(*(np.array([v]) for v in tot), runs)
    hists = [_merge_hist([p[2][m] for p in parts]) for m in range(len(subs) + 1)]
    # starts[:, m] is the state at the start of piece m: even m -> A, odd m -> I.
    a_hist = tuple(hists[0::2])
    i_hist = tuple(hists[1::2])
    return RandomizedEstimate(a_hist=a_hist, i_hist=i_hist, sub_ratio=ratio,
                              sub_ratio_stderr=ratio_se, v_bar_hat=float(vbar[0]),
                              v_bar_stderr=float(vbar_se[0]), runs_used=runs)
