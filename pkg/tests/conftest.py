import numpy as np
import pytest

from graphfrechet.graph import Graph


def random_graph(rng, n, p=None):
    p = rng.uniform(0.05, 0.9) if p is None else p
    A = np.triu(rng.random((n, n)) < p, 1)
    i, j = np.nonzero(A)
    return Graph(n, np.stack([i, j], axis=1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
