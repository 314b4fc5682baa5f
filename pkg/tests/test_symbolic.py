from __future__ import annotations

import time
from fractions import Fraction

import numpy as np
import pytest

from diracspec.boundary import BoundaryMatrix
from diracspec.determinant import determinant_from_endpoints
from diracspec.errors import SymbolMismatch
from diracspec.symbolic import (
    A_SYMBOLS,
    E0_SYMBOLS,
    MultivariatePoly,
    RewriteSystem,
    J,
    const,
    derive_unperturbed_form,
    expand_characteristic_determinant,
    expansion_terms,
    generic_reduced_form,
    grouped_coefficients,
    reduce,
    reflection_substitutions,
    var,
    verify_theorem1_identity,
    wronskian_relation,
)

XY = ("x", "y")
x = MultivariatePoly.var("x", XY)
y = MultivariatePoly.var("y", XY)


def test_arithmetic_examples():
    assert (x + 1) * (x - 1) == x**2 - 1
    assert x + 0 == x
    assert ((x + y) ** 2 - (x**2 + 2 * x * y + y**2)).is_zero()


def test_rational_coefficients():
    p = x * Fraction(1, 3) + Fraction(2, 3) * x
    assert p == x
    assert (x * Fraction(1, 4)).coefficient({"x": 1}) == Fraction(1, 4)


def test_symbol_mismatch():
    with pytest.raises(SymbolMismatch):
        _ = x + var("a11")
    with pytest.raises(SymbolMismatch):
        MultivariatePoly.var("z", XY)


def test_canonical_form_and_printing():
    p = 3 * x * y - x + 0 * y
    assert len(p) == 2
    assert str(p) == "3*x*y - x"
    assert hash(p) == hash(-x + 3 * y * x)
    assert str(MultivariatePoly(XY)) == "0"


def _random_poly(rng) -> MultivariatePoly:
    p = MultivariatePoly(XY)
    for _ in range(rng.integers(1, 5)):
        i, j = rng.integers(0, 3, 2)
        p = p + Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4))) * x**int(i) * y**int(j)
    return p


def test_ring_axioms(rng):
    for _ in range(10):
        a, b, c = (_random_poly(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a and a * b == b * a
        assert (a - a).is_zero()


def test_expansion_counts():
    assert len(expansion_terms()) == 32
    assert len(expand_characteristic_determinant()) == 24


def test_expansion_coefficients():
    p = expand_characteristic_determinant()
    assert p.coefficient({"a11": 1, "a21": 1, "e11_0": 1, "e12_0": 1}) == 0
    assert p.coefficient({"a11": 1, "a24": 1, "e11_0": 1, "e22_pi": 1}) == 1


def test_expansion_after_reflection_squares():
    p = reduce(expand_characteristic_determinant(), RewriteSystem.build(reflection_substitutions()))
    assert p.coefficient({"a11": 1, "a24": 1, "e11_0": 2}) == 1
    assert p.coefficient({"a21": 1, "a14": 1, "e11_0": 2}) == -1


def test_reduce_examples():
    rs13 = RewriteSystem.build(reflection_substitutions())
    assert reduce(var("e11_pi"), rs13) == var("e22_0")
    w = RewriteSystem.build({}, [wronskian_relation()])
    e11, e12, e21, e22 = (var(s) for s in E0_SYMBOLS)
    assert reduce(e11 * e22 - e12 * e21, w) == const(1)
    assert reduce(const(Fraction(7, 2)), rs13.then(w)) == const(Fraction(7, 2))


def test_reduce_idempotent(rng):
    rs = RewriteSystem.build(reflection_substitutions(), [wronskian_relation()])
    p = reduce(expand_characteristic_determinant(), rs)
    assert reduce(p, rs) == p
    e11, e22 = var("e11_0"), var("e22_0")
    q = (e11 * e22) ** 3 + e11**2 * e22 + var("e12_pi")
    assert reduce(reduce(q, rs), rs) == reduce(q, rs)


def test_rewrite_system_must_be_triangular():
    with pytest.raises(ValueError):
        RewriteSystem({"e11_pi": var("e22_pi"), "e22_pi": var("e11_0")})


def test_identity_full_pipeline():
    t = time.perf_counter()
    res = verify_theorem1_identity()
    assert time.perf_counter() - t < 1.0
    assert res.holds and res.residual.is_zero()
    assert str(res.normal_form) == "a11*a22 - a12*a21 + a13*a24 - a14*a23"
    assert res.matches_generic_form


def test_identity_ablations():
    no_reflection = verify_theorem1_identity(use_reflection=False)
    assert not no_reflection.holds
    assert no_reflection.normal_form.used_symbols() & {"e11_pi", "e12_pi", "e21_pi", "e22_pi"}
    no_wronskian = verify_theorem1_identity(use_wronskian=False)
    assert not no_wronskian.holds
    assert not no_wronskian.residual.is_zero()


def test_generic_reduced_form():
    res = verify_theorem1_identity(use_constraints=False)
    assert res.reduced == generic_reduced_form()


def test_grouped_coefficients():
    g = grouped_coefficients()
    j0 = J(1, 2) + J(3, 4)
    assert g["e11_0*e22_0"] == j0
    assert g["e12_0*e21_0"] == -j0
    assert g["e11_0^2"] == J(1, 4) and g["e12_0^2"] == -J(1, 4)
    assert g["e21_0^2"] == J(2, 3) and g["e22_0^2"] == -J(2, 3)
    assert g["e11_0*e21_0"] == J(1, 3) + J(2, 4)
    assert g["e12_0*e22_0"] == -(J(1, 3) + J(2, 4))
    # the e11 e12 and e21 e22 groups cancel completely
    assert "e11_0*e12_0" not in g and "e21_0*e22_0" not in g
    assert len(g) == 8


@pytest.mark.parametrize("anchor", ["zero", "midpoint"])
def test_unperturbed_form(anchor):
    form = derive_unperturbed_form(anchor)
    assert form.matches_minors()
    assert form.constant == J(1, 2) + J(3, 4)
    assert form.cos_coeff == J(1, 4) - J(2, 3)
    assert form.sin_coeff == -(J(1, 3) + J(2, 4))


def test_unperturbed_form_dirichlet_values():
    form = derive_unperturbed_form()
    vals = dict.fromkeys(A_SYMBOLS, 0)
    vals.update(a11=1, a23=1)
    assert [form.constant.evaluate(vals), form.cos_coeff.evaluate(vals), form.sin_coeff.evaluate(vals)] == [0, 0, -1]


def test_numeric_symbolic_consistency(rng):
    p = verify_theorem1_identity(use_constraints=False).expanded
    for _ in range(10):
        a = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
        e0 = rng.normal(size=4) + 1j * rng.normal(size=4)
        e0[3] = (1 + e0[1] * e0[2]) / e0[0]
        epi = rng.normal(size=4) + 1j * rng.normal(size=4)
        epi[3] = (1 + epi[1] * epi[2]) / epi[0]
        vals = {f"a{i + 1}{k + 1}": a[i, k] for i in range(2) for k in range(4)}
        vals.update(zip(E0_SYMBOLS, e0))
        vals.update(zip(("e11_pi", "e12_pi", "e21_pi", "e22_pi"), epi))
        sym = complex(p.evaluate(vals))
        num = determinant_from_endpoints(BoundaryMatrix.from_array(a), e0, epi)
        assert abs(sym - num) <= 1e-12 * max(1.0, abs(num))
