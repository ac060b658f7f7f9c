import mpmath
import numpy as np
import pytest

from transq.propagate import propagate_switch_points
from transq.schedule import make_high_low, make_on_off, make_restless

mpmath.mp.dps = 40


def mp_scaled_bessel(s, x):
    """e^{-x} I_s(x) from the defining series at 40 digits."""
    x = mpmath.mpf(x)
    s = abs(int(s))
    q = (x / 2) ** 2
    term = (x / 2) ** s / mpmath.factorial(s)
    total = term
    m = 0
    # all terms are positive; stop once they are past the peak and negligible
    while True:
        m += 1
        term *= q / (m * (s + m))
        total += term
        if m > x and term < total * mpmath.mpf(10) ** -35:
            break
    return total * mpmath.exp(-x)


def mp_pure_death(j, n, mu, t):
    """P{j -> n} for a pure-death chain with rate mu after time t."""
    a = mpmath.mpf(mu) * t
    pmf = lambda m: mpmath.exp(-a) * a ** m / mpmath.factorial(m)
    if n > j:
        return mpmath.mpf(0)
    if n > 0:
        return pmf(j - n)
    return 1 - mpmath.fsum(pmf(m) for m in range(j))


@pytest.fixture(scope="session")
def fig5a():
    return make_on_off(10, 10, 0.5, 0.5, 5)


@pytest.fixture(scope="session")
def fig5b():
    return make_high_low(10, lambda k: k + 4, lambda k: 2 - (k % 2), 0.5, 0.5, 5)


@pytest.fixture(scope="session")
def fig5c():
    return make_restless(10, lambda k: 10 - abs(k - 6), lambda k: abs(k - 6) + 5, 1.0)


@pytest.fixture(scope="session")
def fig5a_profile(fig5a):
    return propagate_switch_points(fig5a)


@pytest.fixture(scope="session")
def fig5c_profile(fig5c):
    return propagate_switch_points(fig5c)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
