"""Characteristic determinant and spectrum of a 2x2 Dirac system on [0, pi].

The system is B y' + V y = lambda y with B = [[0, 1], [-1, 0]] and
V = [[p, q], [q, -p]], under two-point boundary conditions
U_i(y) = a_i1 y1(0) + a_i2 y2(0) + a_i3 y1(pi) + a_i4 y2(pi) = 0.
"""

from __future__ import annotations

from .boundary import BoundaryClass, BoundaryKind, BoundaryMatrix, Minors, classify, minors
from .determinant import (
    apply_boundary_forms,
    characteristic_determinant,
    characteristic_determinant_batch,
    unperturbed_determinant,
)
from .errors import (
    DiracSpecError,
    HypothesisViolated,
    IdenticallyZero,
    NoConvergence,
    RankDeficient,
    ToleranceNotMet,
    ZeroOnContour,
)
from .integrator import IntegratorConfig, endpoints, fundamental_matrix, remark2_entries
from .potential import PotentialSpec, evaluate, symmetrize, symmetry_report, term
from .spectrum import (
    LambdaBox,
    SpectrumReport,
    Verdict,
    count_zeros,
    find_eigenvalues,
    screen_identically_zero,
    verify_theorem1,
)
from .symbolic import derive_unperturbed_form, verify_theorem1_identity

__version__ = "0.1.0"
