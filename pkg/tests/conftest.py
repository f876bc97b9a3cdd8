import numpy as np
import pytest

from budgeted_assignment.model import Instance


def reference_instance(uniform: bool = False) -> Instance:
    """Two unit bins, two unit items, v = 2 on the diagonal and 1 off it, c_l = 1, B = 2."""
    off = 2.0 if uniform else 1.0
    links = [(0, 0, 0, 1, 2.0, 0.0), (0, 1, 0, 1, off, 0.0),
             (1, 0, 0, 1, off, 0.0), (1, 1, 0, 1, 2.0, 0.0)]
    return Instance.from_links([[1], [1]], [1.0, 1.0], [1, 1], links, 2.0)


@pytest.fixture
def reference():
    return reference_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
