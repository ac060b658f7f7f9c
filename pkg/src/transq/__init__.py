"""Transient queue-length analysis for a single-server queue with switching rates."""

from .bessel import scaled_bessel, scaled_bessel_sequence
from .distribution import QueueDistribution
from .errors import CapacityError, ConfigurationError, DomainError, TransqError, UsageError
from .kernel import KernelParams, kernel_matrix, kernel_time_integral, transition_kernel
from .metrics import (cumulative_violation_time, subinterval_violation, time_avg_violation,
                      violation_at, violation_probability, violation_series)
from .oracle import OracleConfig, oracle_path, oracle_transient
from .propagate import TruncationPolicy, propagate_switch_points, transient_at
from .randomized import (DurationDistribution, RandomInterval, RandomizedSchedule,
                         expected_kernel, randomized_switch_profile)
from .schedule import Interval, RateSchedule, make_high_low, make_on_off, make_restless
from .simulator import SimConfig, estimate_randomized, estimate_violation, simulate_path

__version__ = "0.1.0"
