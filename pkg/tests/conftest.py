import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def walsh_matrix(d):
    """Dense character table H[A, x] = (-1)^{|A & x|}, built without the fast transform."""
    n = 1 << d
    x = np.arange(n)
    H = np.empty((n, n))
    for A in range(n):
        H[A] = [(-1) ** bin(A & v).count("1") for v in x]
    return H
