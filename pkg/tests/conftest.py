import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from optdesign.core import DesignMatrix, DesignWeights


@pytest.fixture
def tri() -> DesignMatrix:
    """e1, e2 and (1,1): the smallest instance with a nontrivial optimum."""
    return DesignMatrix(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]))


@pytest.fixture
def tri_opt(tri) -> DesignWeights:
    return DesignWeights(np.array([0, 1, 2]), np.full(3, 1.0 / 3.0), 3)


@pytest.fixture
def ortho2() -> DesignMatrix:
    return DesignMatrix(np.eye(2))


def make_ortho(n: int) -> DesignMatrix:
    return DesignMatrix(np.eye(n))
