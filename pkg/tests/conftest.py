import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from arlasso.core import RngSpec, validate_dataset
from arlasso.qrsolver import standardize_columns

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


def random_instance(stream: RngSpec, max_n: int = 30, max_p: int = 6):
    """Small random (dataset, tau, lam, weights) tuple for oracle comparisons."""
    g = stream.generator()
    n = int(g.integers(5, max_n + 1))
    p = int(g.integers(1, max_p + 1))
    X = g.standard_normal((n, p))
    y = 2.0 * g.standard_normal(n) + X @ g.standard_normal(p)
    tau = float(g.choice([0.25, 0.5, 0.75]))
    lam = float(g.choice([0.0, 0.05, 0.5]))
    weights = g.uniform(0.0, 2.0, p)
    data = standardize_columns(validate_dataset(y, X))
    return data, tau, lam, weights


@pytest.fixture
def rng():
    return RngSpec(20240801)
