r"""Exponentially scaled modified Bessel functions of the first kind.

Only integer orders and real nonnegative arguments are supported. Every
routine returns (or works with) the scaled quantity

.. math::
    b_s(x) = e^{-x} I_s(x),

which lies in :math:`[0, 1]` and never overflows, whereas :math:`I_0(x)`
itself leaves double range near :math:`x = 713`.

Small arguments (``x < 20``) use the ascending series. Larger arguments use
Miller's backward recurrence on the ratios :math:`I_s / I_{s-1}`, normalized
with :math:`I_0 + 2\sum_{s\ge1} I_s = e^x`. Sequences are also available in
log form so that callers can combine them with large powers without
underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SERIES_LIMIT = 20.0


def _check_argument(x):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"Bessel argument must be finite, got {x!r}")
    if x < 0:
        raise DomainError(f"Bessel argument must be nonnegative, got {x!r}")
    return x


def _series(order, x):
    # e^{-x} (x/2)^s / s! * sum_m (x/2)^{2m} s! / ((s+m)! m!)
    half = 0.5 * x
    if half == 0.0:
        return 1.0 if order == 0 else 0.0
    quarter_sq = half * half
    term = 1.0
    total = 1.0
    m = 0
    while True:
        m += 1
        term *= quarter_sq / (m * (order + m))
        total += term
        if term < 1e-17 * total:
            break
    log_lead = order * math.log(half) - math.lgamma(order + 1) - x
    return math.exp(log_lead) * total


def _start_order(max_order, x):
    return max_order + int(math.ceil(10.0 * math.sqrt(max_order + x))) + 20


def _normalization_order(x):
    # e^{-x} I_s(x) ~ exp(-s^2 / 2x): negligible beyond ~10 sqrt(x).
    return int(math.ceil(10.0 * math.sqrt(x))) + 20


def log_scaled_bessel_table(max_order, xs):
    """Logarithms of ``e^{-x} I_s(x)`` for ``s = 0..max_order``.

    Parameters
    ----------
    max_order : int
        Highest order requested.
    xs : array_like
        One-dimensional array of nonnegative arguments.

    Returns
    -------
    ndarray, shape (len(xs), max_order + 1)
        Row ``i`` holds the log-scaled sequence for ``xs[i]``. Entries are
        ``-inf`` where the scaled value is exactly zero (only at ``x = 0``).
    """
    max_order = int(max_order)
    if max_order < 0:
        raise DomainError(f"max_order must be nonnegative, got {max_order}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.ndim != 1:
        raise DomainError("xs must be one-dimensional")
    if not np.all(np.isfinite(xs)):
        raise DomainError("Bessel arguments must be finite")
    if np.any(xs < 0):
        raise DomainError("Bessel arguments must be nonnegative")

    out = np.full((xs.size, max_order + 1), -np.inf)
    out[:, 0] = 0.0
    pos = xs > 0
    if not np.any(pos):
        return out
    x = xs[pos]
    xmax = float(x.max())
    big = x >= SERIES_LIMIT
    norm_order = _normalization_order(xmax) if np.any(big) else 0
    depth = max(max_order, norm_order)
    start = _start_order(depth, xmax)

    # r[s] = I_s / I_{s-1}, by the continued fraction run downward.
    ratios = np.empty((depth + 1, x.size))
    r = np.zeros_like(x)
    for s in range(start, 0, -1):
        r = x / (2.0 * s + x * r)
        if s <= depth:
            ratios[s] = r
    ratios[0] = 1.0
    np.minimum(ratios, 1.0, out=ratios)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(ratios[1:])  # -inf only where x/2s underflows
    cum = np.cumsum(log_ratio, axis=0)  # log(I_s / I_0), s = 1..depth

    log_b0 = np.empty_like(x)
    for i in np.flatnonzero(~big):
        log_b0[i] = math.log(_series(0, float(x[i])))
    if np.any(big):
        rel = np.exp(cum[:, big])
        log_b0[big] = -np.log1p(2.0 * rel.sum(axis=0))

    rows = np.empty((x.size, max_order + 1))
    rows[:, 0] = log_b0
    if max_order > 0:
        rows[:, 1:] = log_b0[:, None] + cum[:max_order].T
    out[pos] = rows
    return out


@dataclass(frozen=True)
class ScaledBesselSequence:
    """The values ``e^{-x} I_s(x)`` for ``s = 0..max_order`` at one argument."""

    argument: float
    max_order: int
    values: np.ndarray
    log_values: np.ndarray

    def __len__(self):
        return self.max_order + 1

    def __getitem__(self, s):
        return self.values[s]


def scaled_bessel_sequence(max_order, x):
    """Scaled Bessel values of orders ``0..max_order`` at a single argument."""
    x = _check_argument(x)
    max_order = int(max_order)
    if max_order < 0:
        raise DomainError(f"max_order must be nonnegative, got {max_order}")
    logs = log_scaled_bessel_table(max_order, [x])[0]
    values = np.exp(logs)
    values.setflags(write=False)
    logs.setflags(write=False)
    return ScaledBesselSequence(argument=x, max_order=max_order, values=values, log_values=logs)


def scaled_bessel(order, x):
    """Return ``e^{-x} I_order(x)`` for integer ``order`` (``I_{-s} = I_s``).

    Examples
    --------
    >>> scaled_bessel(0, 0.0)
    1.0
    >>> round(scaled_bessel(0, 1.0), 7)
    0.4657596
    """
    x = _check_argument(x)
    if int(order) != order:
        raise DomainError(f"only integer orders are supported, got {order!r}")
    s = abs(int(order))
    if x == 0.0:
        return 1.0 if s == 0 else 0.0
    if x < SERIES_LIMIT:
        return _series(s, x)
    return float(np.exp(log_scaled_bessel_table(s, [x])[0, s]))
