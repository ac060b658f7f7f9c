"""Truncated queue-length distributions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

EPS_MASS = 1e-9


@dataclass(frozen=True)
class QueueDistribution:
    """``probs[n] = P{Q(t) = n}`` for ``n < len(probs)``; the rest is ``tail_mass``.

    Q counts every packet in the system, including the one in service.
    """

    probs: np.ndarray = field(repr=False)
    tail_mass: float
    timestamp: float

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("probs must be a nonempty 1-d sequence")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))
        object.__setattr__(self, "timestamp", float(self.timestamp))

    @classmethod
    def from_probs(cls, probs, timestamp=0.0, clamp=1e-15):
        """Clamp round-off negatives to zero and put the remaining deficit in the tail.

        No renormalization is done: a deficit always shows up in ``tail_mass``.
        """
        p = np.array(probs, dtype=float)
        if np.any(p < -clamp):
            raise DomainError(f"negative probability {p.min():.3e} beyond round-off")
        np.maximum(p, 0.0, out=p)
        tail = max(1.0 - float(np.sum(p)), 0.0)
        return cls(p, tail, timestamp)

    @classmethod
    def delta(cls, j=0, dim=None, timestamp=0.0):
        """Point mass at ``j``."""
        j = int(j)
        if j < 0:
            raise DomainError("initial state must be nonnegative")
        dim = max(int(dim) if dim else 0, j + 1)
        p = np.zeros(dim)
        p[j] = 1.0
        return cls(p, 0.0, timestamp)

    @property
    def dim(self):
        return self.probs.size

    def padded(self, dim):
        """Probabilities as a length-``dim`` array (zero padding only, never truncation)."""
        if dim < self.dim:
            raise DomainError(f"cannot shrink a distribution from {self.dim} to {dim} states")
        out = np.zeros(dim)
        out[: self.dim] = self.probs
        return out

    def cdf(self, n):
        """``P{Q <= n}`` counting only represented states."""
        return float(np.sum(self.probs[: int(n) + 1]))

    def mean(self):
        return float(np.dot(np.arange(self.dim), self.probs))

    def total_variation(self, other_probs):
        """Total variation distance to another pmf, counting both tails as mismatch."""
        q = np.asarray(other_probs, dtype=float)
        m = max(self.dim, q.size)
        a = np.zeros(m)
        b = np.zeros(m)
        a[: self.dim] = self.probs
        b[: q.size] = q
        return 0.5 * (np.abs(a - b).sum() + abs(self.tail_mass - max(1.0 - b.sum(), 0.0)))
