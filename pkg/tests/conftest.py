import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def all_challenges(n: int) -> np.ndarray:
    """Every challenge of length n+1 (last coordinate +1), int8, shape (2**n, n+1)."""
    rows = np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int8).reshape(-1, n)
    return np.hstack([rows, np.ones((rows.shape[0], 1), dtype=np.int8)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
