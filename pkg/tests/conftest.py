import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, dim, jitter=0.5):
    """Random well-conditioned SPD matrix for oracle comparisons."""
    root = rng.standard_normal((dim, dim))
    return root @ root.T + jitter * np.eye(dim)
