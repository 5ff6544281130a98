import numpy as np
import pytest

from laplax import WeightedMultigraph
from laplax.generators import grid_graph, random_connected
from laplax.rng import make_rng


@pytest.fixture
def small_grid():
    return grid_graph(6, 5)


@pytest.fixture
def medium_graph():
    return random_connected(80, 0.06, seed=7)


def random_graph_and_weights(n: int, p: float, seed: int) -> WeightedMultigraph:
    return random_connected(n, p, seed, weights="loguniform", wmax=1000.0)


def projected_rhs(n: int, seed: int) -> np.ndarray:
    b = make_rng(seed, "rhs").standard_normal(n)
    return b - b.mean()
