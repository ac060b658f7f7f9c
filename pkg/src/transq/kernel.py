r"""Transition kernel of an M/M/1 queue over an epoch of constant rates.

``G[j, n](t; lam, mu)`` is the probability that the system holds ``n``
packets after ``t`` seconds, given that it held ``j`` at the start, when
arrivals are Poisson(``lam``) and services exponential(``mu``).

For ``lam > 0`` the classical Bessel representation is used, with the common
envelope :math:`e^{-(\lambda+\mu)t}` applied to all three terms:

.. math::
    G_{j,n} = e^{-(\lambda+\mu)t}\Big[\rho^{(n-j)/2} I_{n-j}(x)
        + \rho^{(n-j-1)/2} I_{n+j+1}(x)
        + (1-\rho)\rho^n \sum_{s \ge n+j+2} \rho^{-s/2} I_s(x)\Big],
    \qquad x = 2\sqrt{\lambda\mu}\,t .

Writing :math:`e^{-(\lambda+\mu)t} = e^{-(\sqrt\lambda-\sqrt\mu)^2 t}\,e^{-x}`
every Bessel factor is replaced by its scaled form, and all products are
formed in log space. For ``lam == 0`` the process is a pure death process and
the kernel is a (truncated) Poisson law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln

from .bessel import log_scaled_bessel_table
from .errors import DomainError
from .quadrature import adaptive_gauss_legendre

EPS_TAIL = 1e-13
EPS_QUAD = 1e-10
MAX_TAIL_TERMS = 100_000
BLOCK_BUDGET = 2_000_000  # entries per vectorized chunk


def _check_rates(lam, mu):
    lam = float(lam)
    mu = float(mu)
    if not (math.isfinite(lam) and math.isfinite(mu)):
        raise DomainError("rates must be finite")
    if mu <= 0:
        raise DomainError(f"service rate must be positive, got {mu}")
    if lam < 0:
        raise DomainError(f"arrival rate must be nonnegative, got {lam}")
    return lam, mu


@dataclass(frozen=True)
class KernelParams:
    """Rates of one constant-rate epoch and the time elapsed within it."""

    lam: float
    mu: float
    elapsed: float

    def __post_init__(self):
        lam, mu = _check_rates(self.lam, self.mu)
        elapsed = float(self.elapsed)
        if not math.isfinite(elapsed) or elapsed < 0:
            raise DomainError(f"elapsed time must be finite and nonnegative, got {elapsed}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "elapsed", elapsed)

    @property
    def rho(self):
        return self.lam / self.mu


@dataclass(frozen=True)
class TransitionKernel:
    """Truncated kernel matrix ``entries[j, n]`` for states ``0..dim-1``."""

    params: KernelParams
    dim: int
    entries: np.ndarray = field(repr=False)
    row_deficits: np.ndarray = field(repr=False)


def _pure_death_block(mu, times, n_rows, n_cols):
    """Kernel blocks for ``lam == 0``: Poisson number of departures, absorbed at 0."""
    out = np.zeros((times.size, n_rows, n_cols))
    zero = times == 0.0
    m = min(n_rows, n_cols)
    if np.any(zero):
        eye = np.zeros((n_rows, n_cols))
        eye[np.arange(m), np.arange(m)] = 1.0
        out[zero] = eye
    ts = times[~zero]
    if ts.size == 0:
        return out
    mt = mu * ts[:, None]
    k = np.arange(n_rows)[None, :]
    pmf = np.exp(k * np.log(mt) - mt - gammaln(k + 1.0))  # (times, departures)
    j = np.arange(n_rows)[:, None]
    n = np.arange(n_cols)[None, :]
    deaths = j - n
    valid = (deaths >= 0) & (n > 0)
    block = np.where(valid[None], pmf[:, np.clip(deaths, 0, n_rows - 1)], 0.0)
    # P{at least j departures} = regularized lower incomplete gamma P(j, mu t)
    jj = np.arange(n_rows)[None, :]
    block[:, :, 0] = np.where(jj == 0, 1.0, gammainc(np.maximum(jj, 1), mt))
    out[~zero] = block
    return out


def _tail_length(lam, mu, tmax, need, eps_tail):
    """Initial guess for how many Bessel orders the tail sum needs."""
    drift = abs(lam - mu) * tmax
    spread = math.sqrt((lam + mu) * tmax)
    return int(need + drift + 12.0 * spread + 40)


def _bessel_block(lam, mu, times, n_rows, n_cols, eps_tail):
    out = np.empty((times.size, n_rows, n_cols))
    zero = times == 0.0
    if np.any(zero):
        m = min(n_rows, n_cols)
        eye = np.zeros((n_rows, n_cols))
        eye[np.arange(m), np.arange(m)] = 1.0
        out[zero] = eye
    ts = times[~zero]
    if ts.size == 0:
        return out

    log_rho = math.log(lam) - math.log(mu)
    one_minus_rho = 1.0 - lam / mu
    xs = 2.0 * math.sqrt(lam * mu) * ts
    log_env = -((math.sqrt(lam) - math.sqrt(mu)) ** 2) * ts
    need = n_rows + n_cols  # highest order referenced directly
    log_eps = math.log(eps_tail) - 7.0

    length = max(_tail_length(lam, mu, float(ts.max()), need, eps_tail), need + 2)
    while True:
        lb = log_scaled_bessel_table(length, xs)
        s = np.arange(length + 1)
        # c_s = env * rho^{|s|/2} * b_s bounds every tail term after the rho^n factor.
        log_c = log_env[:, None] + 0.5 * abs(log_rho) * s[None, :] + lb
        last = log_c[:, -1]
        decreasing = log_c[:, -1] <= log_c[:, -2]
        if np.all((last < log_eps) & decreasing) or length >= MAX_TAIL_TERMS:
            break
        length = min(2 * length, MAX_TAIL_TERMS)

    # log T[m] = log sum_{s>=m} rho^{-s/2} b_s, accumulated from the top down.
    log_terms = -0.5 * log_rho * s[None, :] + lb
    log_tail = np.logaddexp.accumulate(log_terms[:, ::-1], axis=1)[:, ::-1]

    j = np.arange(n_rows)[:, None]
    n = np.arange(n_cols)[None, :]
    d = n - j
    first_idx = np.abs(d)
    second_idx = n + j + 1
    third_idx = n + j + 2
    first_pow = 0.5 * d * log_rho
    second_pow = 0.5 * (d - 1) * log_rho
    third_pow = n * log_rho
    positions = np.flatnonzero(~zero)
    chunk = max(1, BLOCK_BUDGET // (n_rows * n_cols))
    for lo in range(0, ts.size, chunk):
        sl = slice(lo, lo + chunk)
        le = log_env[sl, None, None]
        row_lb = lb[sl]
        val = np.exp(le + first_pow + row_lb[:, first_idx])
        val += np.exp(le + second_pow + row_lb[:, second_idx])
        if one_minus_rho != 0.0:
            val += one_minus_rho * np.exp(le + third_pow + log_tail[sl][:, third_idx])
        out[positions[sl]] = val
    np.clip(out, 0.0, 1.0, out=out)
    return out


def kernel_block(lam, mu, times, n_rows, n_cols, eps_tail=EPS_TAIL):
    """Kernel entries ``G[j, n](t)`` for ``j < n_rows``, ``n < n_cols`` at each time.

    Parameters
    ----------
    lam, mu : float
        Arrival and service rates of the epoch.
    times : array_like
        Elapsed times, each ``>= 0``.
    n_rows, n_cols : int
        Number of initial and final states kept.

    Returns
    -------
    ndarray, shape (len(times), n_rows, n_cols)
    """
    lam, mu = _check_rates(lam, mu)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(times)) or np.any(times < 0):
        raise DomainError("elapsed times must be finite and nonnegative")
    n_rows = int(n_rows)
    n_cols = int(n_cols)
    if n_rows < 1 or n_cols < 1:
        raise DomainError("kernel block dimensions must be positive")
    if lam == 0.0:
        return _pure_death_block(mu, times, n_rows, n_cols)
    return _bessel_block(lam, mu, times, n_rows, n_cols, eps_tail)


def transition_kernel(j, n, params, eps_tail=EPS_TAIL):
    """Return ``P{Q(t) = n | Q(0) = j}`` after ``params.elapsed`` seconds."""
    j = int(j)
    n = int(n)
    if j < 0 or n < 0:
        raise DomainError("states must be nonnegative")
    block = kernel_block(params.lam, params.mu, [params.elapsed], j + 1, n + 1, eps_tail)
    return float(block[0, j, n])


def kernel_matrix(params, dim, eps_tail=EPS_TAIL):
    """Square truncated kernel on states ``0..dim-1`` with per-row tail deficits."""
    dim = int(dim)
    if dim < 1:
        raise DomainError(f"kernel dimension must be at least 1, got {dim}")
    entries = kernel_block(params.lam, params.mu, [params.elapsed], dim, dim, eps_tail)[0]
    deficits = np.maximum(1.0 - entries.sum(axis=1), 0.0)
    entries.setflags(write=False)
    deficits.setflags(write=False)
    return TransitionKernel(params=params, dim=dim, entries=entries, row_deficits=deficits)


def kernel_integral_block(lam, mu, horizon, n_rows, n_cols, eps_quad=EPS_QUAD, eps_tail=EPS_TAIL):
    """Matrix of ``int_0^horizon G[j, n](s) ds`` for ``j < n_rows``, ``n < n_cols``."""
    lam, mu = _check_rates(lam, mu)
    horizon = float(horizon)
    if not math.isfinite(horizon) or horizon < 0:
        raise DomainError(f"horizon must be finite and nonnegative, got {horizon}")
    if horizon == 0.0:
        return np.zeros((int(n_rows), int(n_cols)))

    def integrand(ts):
        return kernel_block(lam, mu, ts, n_rows, n_cols, eps_tail)

    out = adaptive_gauss_legendre(integrand, 0.0, horizon, abs_tol=eps_quad)
    return np.clip(out, 0.0, horizon)


def kernel_time_integral(j, n, horizon, lam, mu, eps_quad=EPS_QUAD):
    """Return ``int_0^horizon G[j, n](s; lam, mu) ds`` (seconds)."""
    j = int(j)
    n = int(n)
    if j < 0 or n < 0:
        raise DomainError("states must be nonnegative")
    return float(kernel_integral_block(lam, mu, horizon, j + 1, n + 1, eps_quad)[j, n])
