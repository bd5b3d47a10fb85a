import numpy as np
import pytest

from netmisfit.graph import Graph
from netmisfit.metrics import metrics


@pytest.fixture
def path3():
    """n=3 with edges (2,1) and (3,1)."""
    return Graph.from_edges(3, [(2, 1), (3, 1)])


@pytest.fixture
def two_block_graph():
    """n=6, blocks (1,1,1,2,2,2): one edge inside block 1, two inside block 2, three across."""
    edges = [(2, 1), (5, 4), (6, 5), (4, 1), (5, 2), (6, 3)]
    return Graph.from_edges(6, edges, labels=np.array([1, 1, 1, 2, 2, 2]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def fresh_metrics():
    metrics.reset()
    yield
    metrics.reset()
