from __future__ import annotations

import numpy as np
import pytest

from diracspec.boundary import BoundaryMatrix
from diracspec.potential import FULL_PI, HALF_PI, ZERO, PotentialSpec, term

DIRICHLET = BoundaryMatrix.from_array([[1, 0, 0, 0], [0, 0, 1, 0]])
PERIODIC = BoundaryMatrix.from_array([[1, 0, -1, 0], [0, 1, 0, -1]])
CAUCHY = BoundaryMatrix.from_array([[1, 0, 0, 0], [0, 1, 0, 0]])
ANTIDIAG_1 = BoundaryMatrix.from_array([[1, 0, 0, 1], [0, 1, 1, 0]])


def antidiag(b) -> BoundaryMatrix:
    return BoundaryMatrix.from_array([[1, 0, 0, b], [0, 1, b, 0]])


# p = cos x, q = sin x: odd and even about pi/2 respectively
COS_SIN = PotentialSpec(p=(term(1, ("cos", 1)),), q=(term(1, ("sin", 1)),))
# q = x breaks the symmetry
COS_X = PotentialSpec(p=(term(1, ("cos", 1)),), q=(term([0, 1]),))
PIECEWISE = PotentialSpec(
    p=(term([0.5, -1.0], interval=(ZERO, HALF_PI)), term(2, ("sin", 2), interval=(HALF_PI, FULL_PI))),
    q=(term([0.0, 0.0, 0.3]),),
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
