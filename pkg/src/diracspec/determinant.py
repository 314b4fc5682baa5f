"""Characteristic determinant Delta(lambda) of the boundary-value problem.

Delta(lambda) = det [U_i(E^[k])], with E^[k] the columns of the
fundamental matrix normalised at pi/2.  Since det E = 1 the value does not
depend on the normalisation point.  For V = 0 it reduces to

    Delta_0(lambda) = J0 + J1 cos(lambda pi) - J2 sin(lambda pi),

whose derivation is replayed exactly by :mod:`diracspec.symbolic`.
"""

from __future__ import annotations

import cmath
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .boundary import BoundaryMatrix, check_rank, minors, zero_tol
from .errors import RankDeficient
from .integrator import (
    DEFAULT_CONFIG,
    FundamentalMatrix,
    IntegratorConfig,
    endpoints_batch,
    hp_context,
)
from .potential import HALF_PI, PotentialSpec


class BoundaryFormValue(NamedTuple):
    U1: complex
    U2: complex


def apply_boundary_forms(A: BoundaryMatrix, y0: Sequence[complex],
                         ypi: Sequence[complex]) -> BoundaryFormValue:
    """Values of U1, U2 on a solution with y(0) = y0 and y(pi) = ypi."""
    vals = []
    for i in (1, 2):
        vals.append(A[i, 1] * y0[0] + A[i, 2] * y0[1] + A[i, 3] * ypi[0] + A[i, 4] * ypi[1])
    return BoundaryFormValue(*vals)


def _require_rank(A: BoundaryMatrix) -> None:
    if not check_rank(A):
        raise RankDeficient("rows of the boundary matrix are linearly dependent")


def _form_matrix(A: BoundaryMatrix, e0: Sequence, epi: Sequence):
    """2x2 matrix [U_i(E^[k])] from endpoint entries (e11, e12, e21, e22)."""
    m = []
    for i in (1, 2):
        row = []
        for k in (0, 1):
            row.append(A[i, 1] * e0[k] + A[i, 2] * e0[2 + k]
                       + A[i, 3] * epi[k] + A[i, 4] * epi[2 + k])
        m.append(row)
    return m


def determinant_from_endpoints(A: BoundaryMatrix, e0: Sequence, epi: Sequence):
    """Delta from endpoint values; works for complex and (in context) mpc entries."""
    m = _form_matrix(A, e0, epi)
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _assemble(A: BoundaryMatrix, E0: FundamentalMatrix, Epi: FundamentalMatrix,
              derivative: bool) -> tuple[complex, complex | None]:
    bits = max(E0.bits, Epi.bits)
    with hp_context(bits):
        m = _form_matrix(A, E0.entries, Epi.entries)
        delta = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        if not derivative:
            return complex(delta), None
        dm = _form_matrix(A, E0.derivative, Epi.derivative)
        ddelta = (dm[0][0] * m[1][1] + m[0][0] * dm[1][1]
                  - dm[0][1] * m[1][0] - m[0][1] * dm[1][0])
        return complex(delta), complex(ddelta)


def characteristic_determinant_batch(A: BoundaryMatrix, V: PotentialSpec,
                                     lams: Iterable[complex],
                                     cfg: IntegratorConfig = DEFAULT_CONFIG,
                                     derivative: bool = False):
    """Delta (and optionally dDelta/dlambda) at many lambda values.

    Returns a complex array, or a pair of arrays when ``derivative`` is set.
    """
    _require_rank(A)
    lams = [complex(l) for l in lams]
    ends = endpoints_batch(V, lams, HALF_PI, cfg, derivative)
    vals = np.empty(len(lams), dtype=complex)
    ders = np.empty(len(lams), dtype=complex)
    for i, (e0, epi) in enumerate(ends):
        d, dd = _assemble(A, e0, epi, derivative)
        vals[i] = d
        if derivative:
            ders[i] = dd
    return (vals, ders) if derivative else vals


def characteristic_determinant(A: BoundaryMatrix, V: PotentialSpec, lam: complex,
                               cfg: IntegratorConfig = DEFAULT_CONFIG) -> complex:
    """Delta(lambda) with the fundamental matrix normalised at pi/2.

    Raises
    ------
    RankDeficient
        If the boundary conditions are not of rank 2.
    ToleranceNotMet
        Propagated from the integrator.
    """
    return complex(characteristic_determinant_batch(A, V, [lam], cfg)[0])


def characteristic_determinant_with_derivative(A: BoundaryMatrix, V: PotentialSpec,
                                               lam: complex,
                                               cfg: IntegratorConfig = DEFAULT_CONFIG
                                               ) -> tuple[complex, complex]:
    vals, ders = characteristic_determinant_batch(A, V, [lam], cfg, derivative=True)
    return complex(vals[0]), complex(ders[0])


def unperturbed_coefficients(A: BoundaryMatrix) -> tuple[complex, complex, complex]:
    """Coefficients of 1, cos(lambda pi), sin(lambda pi) in Delta_0: (J0, J1, -J2).

    Coefficients below the classification tolerance are returned as exact
    zeros, so that Delta_0 is constant for every matrix classified as
    degenerate in both directions.
    """
    m = minors(A)
    tol = zero_tol(A)
    j1 = 0j if abs(m.J1) <= tol else m.J1
    j2 = 0j if abs(m.J2) <= tol else m.J2
    return m.J0, j1, -j2


def unperturbed_determinant(A: BoundaryMatrix, lam: complex) -> complex:
    """Closed-form characteristic determinant for V = 0."""
    _require_rank(A)
    c0, cc, cs = unperturbed_coefficients(A)
    z = complex(lam) * np.pi
    return c0 + cc * cmath.cos(z) + cs * cmath.sin(z)
