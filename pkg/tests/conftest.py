import numpy as np
import pytest

from sogclab import Graph


@pytest.fixture
def k2() -> Graph:
    return Graph(2, ((0, 1),))


@pytest.fixture
def p3() -> Graph:
    """Path 0 - 1 - 2; degrees (1, 2, 1)."""
    return Graph(3, ((0, 1), (1, 2)))


@pytest.fixture
def k3() -> Graph:
    return Graph(3, ((0, 1), (0, 2), (1, 2)))


def random_connected_ish(rng: np.random.Generator, n_lo=5, n_hi=30,
                         p_lo=0.15, p_hi=0.6) -> Graph:
    """Random ER graph drawn from a child stream of ``rng``."""
    from sogclab import erdos_renyi

    n = int(rng.integers(n_lo, n_hi + 1))
    p = float(rng.uniform(p_lo, p_hi))
    return erdos_renyi(n, p, int(rng.integers(2**32)))
