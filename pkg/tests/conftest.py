"""Shared helpers for the test suite."""

import numpy as np
import pytest

from hdnorm import (
    CovSpec,
    DataMatrix,
    McSettings,
    Scenario,
    composite_test,
    sample_scenario,
)
from hdnorm import rng as hrng
from hdnorm.montecarlo import composite_from_summary
from hdnorm.radii import radial_summary


def gaussian_data(seed: int, n: int, d: int) -> DataMatrix:
    """Standard normal sample from a keyed stream (fast, reproducible)."""
    gen = hrng.substream(seed, hrng.DOMAIN_DATA, n, d)
    return DataMatrix.from_array(hrng.standard_normal(gen, (n, d)))


def random_orthogonal(gen: np.random.Generator, d: int) -> np.ndarray:
    """Haar-ish orthogonal matrix via QR with a fixed sign convention."""
    Q, R = np.linalg.qr(gen.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def similarity_transform(values: np.ndarray, sigma: float, V: np.ndarray,
                         w: np.ndarray) -> np.ndarray:
    """Apply x -> sigma * V x + w to every row."""
    return sigma * values @ V.T + w


def rejection_rate(scenario: Scenario, replications: int, settings: McSettings,
                   seed: int, squared: bool = False) -> float:
    """Empirical rejection rate of the composite test over fresh data draws."""
    rejected = 0
    for r in range(replications):
        gen = hrng.substream(seed, hrng.DOMAIN_DATA, 0, r)
        X = sample_scenario(scenario, gen)
        rs = radial_summary(X)
        if composite_from_summary(rs, settings, squared=squared).composite_reject:
            rejected += 1
    return rejected / replications


def null_scenario(n: int, d: int) -> Scenario:
    return Scenario(family="null_gaussian", n=n, d=d, cov=CovSpec.identity(d))


@pytest.fixture
def rng_fixture():
    return np.random.default_rng(20240815)
