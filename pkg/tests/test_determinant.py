from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from diracspec.boundary import BoundaryKind, BoundaryMatrix, classify, minors, random_boundary_matrix
from diracspec.determinant import (
    apply_boundary_forms,
    characteristic_determinant,
    characteristic_determinant_batch,
    characteristic_determinant_with_derivative,
    unperturbed_coefficients,
    unperturbed_determinant,
)
from diracspec.errors import RankDeficient
from diracspec.potential import PotentialSpec

from conftest import ANTIDIAG_1, CAUCHY, COS_SIN, DIRICHLET, PERIODIC, PIECEWISE, antidiag

ZERO_V = PotentialSpec.zero()


def test_apply_boundary_forms_examples():
    assert apply_boundary_forms(CAUCHY, (2 + 1j, -3), (7, 8)) == (2 + 1j, -3)
    assert apply_boundary_forms(ANTIDIAG_1, (1, 0), (0, 1)) == (2, 0)
    assert apply_boundary_forms(PERIODIC, (0, 0), (0, 0)) == (0, 0)


def test_apply_boundary_forms_linear(rng):
    A = random_boundary_matrix(rng)
    y = rng.normal(size=4) + 1j * rng.normal(size=4)
    k = 2.5 - 1j
    u = apply_boundary_forms(A, y[:2], y[2:])
    v = apply_boundary_forms(A, k * y[:2], k * y[2:])
    assert abs(v.U1 - k * u.U1) < 1e-13 and abs(v.U2 - k * u.U2) < 1e-13


@pytest.mark.parametrize("lam", [0, 1 + 1j, -3.7, 5j])
def test_theorem1_instance(lam):
    assert abs(characteristic_determinant(antidiag(2), COS_SIN, lam) + 3) <= 1e-8


def test_dirichlet_half():
    assert abs(characteristic_determinant(DIRICHLET, ZERO_V, 0.5) + 1) <= 1e-10


def test_lambda_zero_is_j0_plus_j1(rng):
    for _ in range(5):
        A = random_boundary_matrix(rng)
        m = minors(A)
        assert abs(characteristic_determinant(A, ZERO_V, 0.0) - (m.J0 + m.J1)) <= 1e-12 * m.max_abs()


def test_unperturbed_closed_forms():
    for lam in (0.3, 1.7 - 0.4j, 2.0):
        assert abs(unperturbed_determinant(DIRICHLET, lam) + cmath.sin(lam * math.pi)) < 1e-14
        assert abs(unperturbed_determinant(PERIODIC, lam) - (2 - 2 * cmath.cos(lam * math.pi))) < 1e-14
        assert abs(unperturbed_determinant(antidiag(2), lam) + 3) < 1e-14
    assert unperturbed_coefficients(DIRICHLET) == (0, 0, -1)


def test_rank_deficient():
    A = BoundaryMatrix.from_array([[1, 0, 0, 0], [2, 0, 0, 0]])
    with pytest.raises(RankDeficient):
        characteristic_determinant(A, ZERO_V, 1.0)
    with pytest.raises(RankDeficient):
        unperturbed_determinant(A, 1.0)


def test_oracle_agreement(rng):
    for _ in range(20):
        A = random_boundary_matrix(rng)
        lams = [complex(*v) for v in rng.uniform(-7, 7, (5, 2)) if abs(complex(*v)) <= 10]
        got = characteristic_determinant_batch(A, ZERO_V, lams)
        ref = np.array([unperturbed_determinant(A, l) for l in lams])
        assert np.max(np.abs(got - ref)) <= 1e-9 * max(1.0, np.abs(ref).max())


def test_left_equivalence_covariance(rng):
    lams = [0.4, 2 - 1j, -3 + 2.5j]
    for _ in range(3):
        A = random_boundary_matrix(rng)
        T = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        d1 = characteristic_determinant_batch(A, PIECEWISE, lams)
        d2 = characteristic_determinant_batch(A.left_multiply(T), PIECEWISE, lams)
        assert np.max(np.abs(d2 - np.linalg.det(T) * d1)) <= 1e-9 * max(1.0, np.abs(d2).max())


def test_degenerate_both_is_constant(rng):
    for _ in range(10):
        A = antidiag(complex(*rng.normal(size=2))).left_multiply(rng.normal(size=(2, 2)))
        assert classify(A).kind is BoundaryKind.DEGENERATE_BOTH
        l1, l2 = (complex(*rng.uniform(-5, 5, 2)) for _ in range(2))
        assert abs(unperturbed_determinant(A, l1) - unperturbed_determinant(A, l2)) <= 1e-12 * A.scale**2


def test_entire_mean_value():
    # the mean of an entire function over a circle equals its value at the centre
    lam0, r, n = 1.2 + 0.7j, 0.5, 64
    pts = [lam0 + r * cmath.exp(2j * math.pi * k / n) for k in range(n)]
    vals = characteristic_determinant_batch(DIRICHLET, PIECEWISE, pts + [lam0])
    assert abs(np.mean(vals[:-1]) - vals[-1]) <= 1e-8


def test_derivative_matches_closed_form():
    for lam in (0.3, 2.2 - 0.5j):
        d, dd = characteristic_determinant_with_derivative(PERIODIC, ZERO_V, lam)
        assert abs(d - (2 - 2 * cmath.cos(lam * math.pi))) < 1e-10
        assert abs(dd - 2 * math.pi * cmath.sin(lam * math.pi)) < 1e-9


def test_conjugate_symmetry_real_problem():
    A = BoundaryMatrix.from_array([[1, 0.5, 0, 2], [0, 1, -1, 0.3]])
    from conftest import COS_X

    lam = 1.3 + 0.9j
    a = characteristic_determinant(A, COS_X, lam)
    b = characteristic_determinant(A, COS_X, lam.conjugate())
    assert abs(a - b.conjugate()) <= 1e-9 * abs(a)
