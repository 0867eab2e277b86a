"""Reproducible random streams and inverse-CDF samplers.

Every source of randomness in the package is a counter-based Philox stream
whose 128-bit key is derived from a user seed plus an integer path, via
``numpy.random.SeedSequence``.  Work units (one Monte-Carlo chunk, one data
replication, one covariance draw) each own a distinct path, so any partition
of the work across threads or processes produces bitwise-identical results.

Continuous variates are produced by inverse-CDF transforms of the uniform
stream (no rejection sampling), which keeps the draw count per variate fixed
and the values stable across platforms.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import gammaincinv, ndtri

# Path domain tags.  Each top-level consumer of randomness uses its own tag so
# streams never collide across subsystems.
DOMAIN_NULL_RANGE = 1   # Monte-Carlo draws of the null range statistic
DOMAIN_DATA = 2         # scenario data replications
DOMAIN_COV = 3          # stochastic covariance construction
DOMAIN_RESERVOIR = 4    # reservoir subsampling in diagnostics

# Smallest uniform passed to the normal quantile function; keeps ndtri finite
# for the (probability ~2^-53) event that the generator returns exactly 0.
_U_FLOOR = 2.0 ** -54


def substream(seed: int, *path: int) -> Generator:
    """Return the generator for the stream identified by ``(seed, *path)``."""
    key = SeedSequence(seed, spawn_key=tuple(int(p) for p in path)).generate_state(2, np.uint64)
    return Generator(Philox(key=key))


def derive_seed(seed: int, *path: int) -> int:
    """Fold ``(seed, *path)`` into a single 64-bit seed for nested settings."""
    state = SeedSequence(seed, spawn_key=tuple(int(p) for p in path)).generate_state(1, np.uint64)
    return int(state[0])


def uniform(gen: Generator, shape) -> np.ndarray:
    """Uniform draws on (0, 1), never exactly zero."""
    u = gen.random(shape)
    np.clip(u, _U_FLOOR, None, out=u)
    return u


def standard_normal(gen: Generator, shape) -> np.ndarray:
    """Standard normal draws via the inverse CDF of a uniform stream."""
    return ndtri(uniform(gen, shape))


def chi_square(gen: Generator, df: float, shape) -> np.ndarray:
    """Chi-square draws via the inverse regularized incomplete gamma."""
    return 2.0 * gammaincinv(df / 2.0, uniform(gen, shape))


def exponential(gen: Generator, shape) -> np.ndarray:
    """Unit-rate exponential draws."""
    return -np.log(uniform(gen, shape))


def rademacher(gen: Generator, shape) -> np.ndarray:
    """Draws from {-1, +1} with equal probability."""
    return np.where(gen.random(shape) < 0.5, -1.0, 1.0)
