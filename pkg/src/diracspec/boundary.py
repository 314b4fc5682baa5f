"""Two-point boundary conditions: the 2x4 coefficient matrix and its minors.

The conditions are

    U_j(y) = a_j1 y1(0) + a_j2 y2(0) + a_j3 y1(pi) + a_j4 y2(pi) = 0,  j = 1, 2.

``J_jk`` is the determinant of columns j and k of the coefficient matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import RankDeficient

#: relative zero threshold for minors, scaled by max |a_jk|^2
CLASS_TOL = 1e-12

PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


@dataclass(frozen=True)
class BoundaryMatrix:
    """Immutable 2x4 complex coefficient matrix."""

    rows: tuple[tuple[complex, ...], tuple[complex, ...]]

    def __post_init__(self):
        rows = tuple(tuple(complex(a) for a in row) for row in self.rows)
        if len(rows) != 2 or any(len(r) != 4 for r in rows):
            raise ValueError("boundary matrix must be 2x4")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_array(cls, a: Sequence[Sequence[complex]] | np.ndarray) -> "BoundaryMatrix":
        arr = np.asarray(a, dtype=complex)
        if arr.shape != (2, 4):
            raise ValueError(f"boundary matrix must be 2x4, got shape {arr.shape}")
        return cls(tuple(tuple(complex(v) for v in row) for row in arr))

    def __getitem__(self, jk: tuple[int, int]) -> complex:
        """1-based access: ``A[1, 4]`` is a_14."""
        j, k = jk
        return self.rows[j - 1][k - 1]

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=complex)

    @property
    def scale(self) -> float:
        """Largest |a_jk|."""
        return max(abs(a) for row in self.rows for a in row)

    def left_multiply(self, t: Sequence[Sequence[complex]] | np.ndarray) -> "BoundaryMatrix":
        """Return T @ A (an equivalent set of boundary conditions if T is invertible)."""
        return BoundaryMatrix.from_array(np.asarray(t, dtype=complex) @ self.as_array())


@dataclass(frozen=True)
class Minors:
    J12: complex
    J13: complex
    J14: complex
    J23: complex
    J24: complex
    J34: complex

    @property
    def J0(self) -> complex:
        return self.J12 + self.J34

    @property
    def J1(self) -> complex:
        return self.J14 - self.J23

    @property
    def J2(self) -> complex:
        return self.J13 + self.J24

    def get(self, j: int, k: int) -> complex:
        """J_jk for any ordered pair, using J_kj = -J_jk and J_jj = 0."""
        if j == k:
            return 0j
        if j > k:
            return -self.get(k, j)
        return getattr(self, f"J{j}{k}")

    def plucker(self) -> complex:
        """J12 J34 - J13 J24 + J14 J23; zero for any 2x4 matrix."""
        return self.J12 * self.J34 - self.J13 * self.J24 + self.J14 * self.J23

    def as_dict(self) -> dict[str, complex]:
        d = {f"J{j}{k}": self.get(j, k) for j, k in PAIRS}
        d.update(J0=self.J0, J1=self.J1, J2=self.J2)
        return d

    def max_abs(self) -> float:
        return max(abs(self.get(j, k)) for j, k in PAIRS)


class BoundaryKind(Enum):
    NONDEGENERATE = "NONDEGENERATE"
    DEGENERATE_BOTH = "DEGENERATE_BOTH"
    DEGENERATE_PLUS = "DEGENERATE_PLUS"
    DEGENERATE_MINUS = "DEGENERATE_MINUS"

    @property
    def degenerate(self) -> bool:
        return self is not BoundaryKind.NONDEGENERATE


@dataclass(frozen=True)
class BoundaryClass:
    kind: BoundaryKind
    theorem1_applicable: bool
    minors: Minors


def minors(A: BoundaryMatrix) -> Minors:
    """Column minors J_jk = a_1j a_2k - a_1k a_2j."""
    vals = {f"J{j}{k}": A[1, j] * A[2, k] - A[1, k] * A[2, j] for j, k in PAIRS}
    return Minors(**vals)


def zero_tol(A: BoundaryMatrix) -> float:
    return CLASS_TOL * A.scale**2


def check_rank(A: BoundaryMatrix) -> bool:
    """True iff the rows of ``A`` are linearly independent."""
    m = minors(A)
    return A.scale > 0 and m.max_abs() > zero_tol(A)


def classify(A: BoundaryMatrix) -> BoundaryClass:
    """Classify the boundary conditions as degenerate or nondegenerate.

    The three degenerate cases are tested in order, each as its own enum
    member; the first case does not constrain J0.

    Raises
    ------
    RankDeficient
        If the rows of ``A`` are linearly dependent.
    """
    if not check_rank(A):
        raise RankDeficient("rows of the boundary matrix are linearly dependent")
    m = minors(A)
    eps = zero_tol(A)

    def zero(z: complex) -> bool:
        return abs(z) <= eps

    plus, minus = m.J1 + 1j * m.J2, m.J1 - 1j * m.J2
    if zero(m.J1) and zero(m.J2):
        kind = BoundaryKind.DEGENERATE_BOTH
    elif zero(m.J0) and zero(minus) and not zero(plus):
        kind = BoundaryKind.DEGENERATE_PLUS
    elif zero(m.J0) and zero(plus) and not zero(minus):
        kind = BoundaryKind.DEGENERATE_MINUS
    else:
        kind = BoundaryKind.NONDEGENERATE
    applicable = zero(m.J14) and zero(m.J23) and zero(m.J13 + m.J24)
    return BoundaryClass(kind=kind, theorem1_applicable=applicable, minors=m)


def theorem1_applicable(A: BoundaryMatrix) -> bool:
    return classify(A).theorem1_applicable


def random_boundary_matrix(rng: np.random.Generator, real: bool = False) -> BoundaryMatrix:
    """Random full-rank matrix, used by property checks."""
    while True:
        a = rng.normal(size=(2, 4))
        if not real:
            a = a + 1j * rng.normal(size=(2, 4))
        A = BoundaryMatrix.from_array(a)
        if check_rank(A):
            return A
