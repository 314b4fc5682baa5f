"""Exact polynomial replay of the characteristic-determinant reduction.

Polynomials have rational coefficients over one fixed, ordered symbol set:
the boundary coefficients ``a11 .. a24``, the endpoint entries
``e11_0 .. e22_0`` and ``e11_pi .. e22_pi`` of the midpoint-normalised
fundamental matrix, and trigonometric indeterminates (``c``, ``s`` for
cos/sin(lambda pi), ``ch``, ``sh`` for cos/sin(lambda pi / 2)).

Reduction is rewriting, not Groebner-basis computation: symbol
substitutions followed by single-monomial rules ``lead -> replacement``
derived from side relations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import SymbolMismatch

A_SYMBOLS = tuple(f"a{i}{k}" for i in (1, 2) for k in (1, 2, 3, 4))
E0_SYMBOLS = ("e11_0", "e12_0", "e21_0", "e22_0")
EPI_SYMBOLS = ("e11_pi", "e12_pi", "e21_pi", "e22_pi")
TRIG_SYMBOLS = ("c", "s", "ch", "sh")
SYMBOLS = A_SYMBOLS + E0_SYMBOLS + EPI_SYMBOLS + TRIG_SYMBOLS

Monomial = tuple  # exponent vector over the symbol set


class MultivariatePoly:
    """Sparse polynomial: exponent vector -> nonzero Fraction."""

    __slots__ = ("symbols", "terms")

    def __init__(self, symbols: Sequence[str] = SYMBOLS,
                 terms: Mapping[Monomial, Fraction | int] | None = None):
        self.symbols = tuple(symbols)
        n = len(self.symbols)
        clean: dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != n or any(e < 0 for e in mono):
                raise ValueError(f"bad exponent vector {mono}")
            c = Fraction(coeff)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if not clean[mono]:
                    del clean[mono]
        self.terms = clean

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, symbols: Sequence[str] = SYMBOLS) -> "MultivariatePoly":
        return cls(symbols, {(0,) * len(symbols): Fraction(value)})

    @classmethod
    def var(cls, name: str, symbols: Sequence[str] = SYMBOLS) -> "MultivariatePoly":
        symbols = tuple(symbols)
        if name not in symbols:
            raise SymbolMismatch(f"unknown symbol {name!r}")
        mono = tuple(1 if s == name else 0 for s in symbols)
        return cls(symbols, {mono: 1})

    @classmethod
    def monomial(cls, powers: Mapping[str, int], coeff=1,
                 symbols: Sequence[str] = SYMBOLS) -> "MultivariatePoly":
        symbols = tuple(symbols)
        unknown = set(powers) - set(symbols)
        if unknown:
            raise SymbolMismatch(f"unknown symbols {sorted(unknown)}")
        return cls(symbols, {tuple(powers.get(s, 0) for s in symbols): coeff})

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "MultivariatePoly":
        if isinstance(other, MultivariatePoly):
            if other.symbols != self.symbols:
                raise SymbolMismatch("polynomials are over different symbol sets")
            return other
        if isinstance(other, (int, Fraction)):
            return MultivariatePoly.constant(other, self.symbols)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return MultivariatePoly(self.symbols, out)

    __radd__ = __add__

    def __neg__(self):
        return MultivariatePoly(self.symbols, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return MultivariatePoly(self.symbols, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = MultivariatePoly.constant(1, self.symbols)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultivariatePoly.constant(other, self.symbols)
        if not isinstance(other, MultivariatePoly):
            return NotImplemented
        return self.symbols == other.symbols and self.terms == other.terms

    def __hash__(self):
        return hash((self.symbols, frozenset(self.terms.items())))

    # inspection ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient(self, powers: Mapping[str, int]) -> Fraction:
        mono = tuple(powers.get(s, 0) for s in self.symbols)
        return self.terms.get(mono, Fraction(0))

    def used_symbols(self) -> set[str]:
        return {s for m in self.terms for s, e in zip(self.symbols, m) if e}

    def collect(self, over: Iterable[str]) -> dict[tuple[int, ...], "MultivariatePoly"]:
        """Group terms by their exponents in ``over``; values are the cofactors."""
        over = tuple(over)
        idx = [self.symbols.index(s) for s in over]
        groups: dict[tuple[int, ...], dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            key = tuple(m[i] for i in idx)
            rest = list(m)
            for i in idx:
                rest[i] = 0
            groups.setdefault(key, {})[tuple(rest)] = c
        return {k: MultivariatePoly(self.symbols, v) for k, v in groups.items()}

    def cofactor(self, powers: Mapping[str, int], over: Iterable[str]) -> "MultivariatePoly":
        """Coefficient polynomial of one monomial in the ``over`` symbols."""
        over = tuple(over)
        key = tuple(powers.get(s, 0) for s in over)
        return self.collect(over).get(key, MultivariatePoly(self.symbols))

    def substitute(self, mapping: Mapping[str, "MultivariatePoly"]) -> "MultivariatePoly":
        if not mapping:
            return self
        idx = {self.symbols.index(s): self._coerce(p) for s, p in mapping.items()}
        out = MultivariatePoly(self.symbols)
        for m, c in self.terms.items():
            rest = list(m)
            term = MultivariatePoly.constant(c, self.symbols)
            for i, p in idx.items():
                if m[i]:
                    term = term * p ** m[i]
                    rest[i] = 0
            out = out + term * MultivariatePoly(self.symbols, {tuple(rest): 1})
        return out

    def evaluate(self, values: Mapping[str, complex]):
        total = 0
        for m, c in self.terms.items():
            t = c
            for s, e in zip(self.symbols, m):
                if e:
                    t = t * values[s] ** e
            total = total + t
        return total

    # printing -----------------------------------------------------------

    def _mono_str(self, m: Monomial) -> str:
        parts = []
        for s, e in zip(self.symbols, m):
            if e == 1:
                parts.append(s)
            elif e > 1:
                parts.append(f"{s}^{e}")
        return "*".join(parts)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for m in sorted(self.terms, reverse=True):
            c = self.terms[m]
            ms = self._mono_str(m)
            mag = abs(c)
            if ms and mag == 1:
                body = ms
            elif ms:
                body = f"{mag}*{ms}"
            else:
                body = str(mag)
            if not out:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append(("- " if c < 0 else "+ ") + body)
        return " ".join(out)

    def __repr__(self) -> str:
        return f"MultivariatePoly({self})"


def var(name: str) -> MultivariatePoly:
    return MultivariatePoly.var(name)


def const(value) -> MultivariatePoly:
    return MultivariatePoly.constant(value)


def J(j: int, k: int) -> MultivariatePoly:
    """Minor of columns j, k of the boundary matrix in the a-symbols."""
    return var(f"a1{j}") * var(f"a2{k}") - var(f"a1{k}") * var(f"a2{j}")


# --------------------------------------------------------------------------
# rewriting


@dataclass(frozen=True)
class Rule:
    """Replace every occurrence of the monomial ``lead`` by ``replacement``."""

    lead: Monomial
    replacement: MultivariatePoly

    @classmethod
    def from_relation(cls, relation: MultivariatePoly, lead: MultivariatePoly) -> "Rule":
        """Rule from ``relation == 0`` solved for its monomial ``lead``."""
        if len(lead) != 1:
            raise ValueError("lead must be a single monomial")
        (mono, _), = lead.terms.items()
        alpha = relation.terms.get(mono)
        if not alpha:
            raise ValueError("lead monomial does not occur in the relation")
        rest = relation - MultivariatePoly(relation.symbols, {mono: alpha})
        return cls(mono, rest * (-1 / alpha))


@dataclass(frozen=True)
class RewriteSystem:
    substitutions: Mapping[str, MultivariatePoly] = field(default_factory=dict)
    side_relations: tuple[MultivariatePoly, ...] = ()
    rules: tuple[Rule, ...] = ()

    def __post_init__(self):
        targets = set(self.substitutions)
        for s, p in self.substitutions.items():
            if p.used_symbols() & targets:
                raise ValueError(f"substitution for {s} is not triangular")

    @classmethod
    def build(cls, substitutions: Mapping[str, MultivariatePoly] | None = None,
              relations: Sequence[tuple[MultivariatePoly, MultivariatePoly]] = ()) -> "RewriteSystem":
        """``relations`` are (relation, lead monomial) pairs."""
        return cls(dict(substitutions or {}), tuple(r for r, _ in relations),
                   tuple(Rule.from_relation(r, l) for r, l in relations))

    def then(self, other: "RewriteSystem") -> "RewriteSystem":
        """Rules of both systems; substitutions of ``self`` only."""
        return RewriteSystem(self.substitutions, self.side_relations + other.side_relations,
                             self.rules + other.rules)


def _divides(lead: Monomial, m: Monomial) -> bool:
    return all(a <= b for a, b in zip(lead, m))


def reduce(poly: MultivariatePoly, rs: RewriteSystem, max_rounds: int = 10_000) -> MultivariatePoly:
    """Apply the substitutions, then the rules until no lead monomial divides a term."""
    p = poly.substitute(rs.substitutions)
    for _ in range(max_rounds):
        out: dict[Monomial, Fraction] = {}
        changed = False
        for m, c in p.terms.items():
            for rule in rs.rules:
                if _divides(rule.lead, m):
                    rest = tuple(a - b for a, b in zip(m, rule.lead))
                    for m2, c2 in rule.replacement.terms.items():
                        mm = tuple(a + b for a, b in zip(rest, m2))
                        out[mm] = out.get(mm, Fraction(0)) + c * c2
                    changed = True
                    break
            else:
                out[m] = out.get(m, Fraction(0)) + c
        p = MultivariatePoly(p.symbols, out)
        if not changed:
            return p
    raise RuntimeError("rewriting did not terminate")


# --------------------------------------------------------------------------
# the characteristic determinant


def _entry(i: int, k: int, at: str) -> MultivariatePoly:
    return var(f"e{i}{k}_{at}")


def boundary_form(i: int, k: int) -> list[MultivariatePoly]:
    """The four summands of U_i applied to column k of E."""
    return [
        var(f"a{i}1") * _entry(1, k, "0"),
        var(f"a{i}2") * _entry(2, k, "0"),
        var(f"a{i}3") * _entry(1, k, "pi"),
        var(f"a{i}4") * _entry(2, k, "pi"),
    ]


def expansion_terms() -> list[tuple[int, MultivariatePoly]]:
    """Signed products of U1(E1) U2(E2) - U2(E1) U1(E2), before cancellation."""
    out = []
    for sign, (i1, i2) in ((1, (1, 2)), (-1, (2, 1))):
        for x in boundary_form(i1, 1):
            for y in boundary_form(i2, 2):
                out.append((sign, x * y))
    return out


def expand_characteristic_determinant() -> MultivariatePoly:
    total = MultivariatePoly()
    for sign, t in expansion_terms():
        total = total + (t if sign > 0 else -t)
    return total


def reflection_substitutions() -> dict[str, MultivariatePoly]:
    """Endpoint relations for a potential symmetric about pi/2."""
    return {
        "e11_pi": var("e22_0"),
        "e22_pi": var("e11_0"),
        "e21_pi": var("e12_0"),
        "e12_pi": var("e21_0"),
    }


def wronskian_relation() -> tuple[MultivariatePoly, MultivariatePoly]:
    """(e11 e22 - e12 e21 - 1 at x = 0, lead monomial e11 e22)."""
    lead = var("e11_0") * var("e22_0")
    return lead - var("e12_0") * var("e21_0") - 1, lead


def theorem1_constraints() -> list[tuple[MultivariatePoly, MultivariatePoly]]:
    """J14 = 0, J23 = 0, J13 + J24 = 0 with one a-monomial lead each."""
    return [
        (J(1, 4), var("a11") * var("a24")),
        (J(2, 3), var("a12") * var("a23")),
        (J(1, 3) + J(2, 4), var("a11") * var("a23")),
    ]


def generic_reduced_form() -> MultivariatePoly:
    """Delta after the endpoint relations and det E(0) = 1, before J-constraints."""
    e11, e12, e21, e22 = (var(s) for s in E0_SYMBOLS)
    return (J(1, 2) + J(3, 4)
            + (e11**2 - e12**2) * J(1, 4)
            + (e21**2 - e22**2) * J(2, 3)
            + (e11 * e21 - e22 * e12) * (J(1, 3) + J(2, 4)))


def grouped_coefficients() -> dict[str, MultivariatePoly]:
    """Cofactors of the quadratic e(0)-monomials once the endpoint relations are applied."""
    p = reduce(expand_characteristic_determinant(), RewriteSystem.build(reflection_substitutions()))
    groups = p.collect(E0_SYMBOLS)
    out = {}
    for key, cof in sorted(groups.items(), reverse=True):
        name = "*".join(f"{s}^{e}" if e > 1 else s for s, e in zip(E0_SYMBOLS, key) if e)
        out[name or "1"] = cof
    return out


@dataclass(frozen=True)
class IdentityResult:
    holds: bool
    expanded: MultivariatePoly
    reduced: MultivariatePoly
    normal_form: MultivariatePoly
    target: MultivariatePoly
    matches_generic_form: bool

    @property
    def residual(self) -> MultivariatePoly:
        return self.normal_form - self.target


def verify_theorem1_identity(use_reflection: bool = True, use_wronskian: bool = True,
                             use_constraints: bool = True) -> IdentityResult:
    """Reduce the expanded determinant to J12 + J34 exactly.

    The three switches disable the endpoint relations, the unit Wronskian
    and the minor constraints respectively, for ablation.
    """
    expanded = expand_characteristic_determinant()
    rs = RewriteSystem.build(reflection_substitutions() if use_reflection else {},
                             [wronskian_relation()] if use_wronskian else [])
    reduced = reduce(expanded, rs)
    normal = reduce(reduced, RewriteSystem.build({}, theorem1_constraints())) if use_constraints else reduced
    target = J(1, 2) + J(3, 4)
    return IdentityResult(
        holds=normal == target,
        expanded=expanded,
        reduced=reduced,
        normal_form=normal,
        target=target,
        matches_generic_form=reduced == generic_reduced_form(),
    )


@dataclass(frozen=True)
class UnperturbedForm:
    constant: MultivariatePoly
    cos_coeff: MultivariatePoly
    sin_coeff: MultivariatePoly
    remainder: MultivariatePoly

    def matches_minors(self) -> bool:
        return (self.remainder.is_zero()
                and self.constant == J(1, 2) + J(3, 4)
                and self.cos_coeff == J(1, 4) - J(2, 3)
                and self.sin_coeff == -(J(1, 3) + J(2, 4)))


def derive_unperturbed_form(anchor: str = "zero") -> UnperturbedForm:
    """Delta for V = 0 as J-polynomial coefficients of 1, cos(lambda pi), sin(lambda pi).

    ``anchor="zero"`` normalises E at x = 0, so E(pi) is the rotation by
    lambda*pi with entries c, s, reduced modulo c^2 + s^2 - 1.
    ``anchor="midpoint"`` normalises at pi/2 with half-angle entries ch, sh,
    reduced modulo ch^2 + sh^2 - 1 and mapped to c, s by the double-angle
    rules ch^2 = (1 + c)/2, ch*sh = s/2.
    """
    c, s, ch, sh = (var(x) for x in TRIG_SYMBOLS)
    if anchor == "zero":
        e0 = (const(1), const(0), const(0), const(1))
        epi = (c, -s, s, c)
        relations = [(c**2 + s**2 - 1, s**2)]
    elif anchor == "midpoint":
        e0 = (ch, sh, -sh, ch)
        epi = (ch, -sh, sh, ch)
        relations = [
            (ch**2 + sh**2 - 1, sh**2),
            (ch**2 - (1 + c) * Fraction(1, 2), ch**2),
            (ch * sh - s * Fraction(1, 2), ch * sh),
        ]
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    subs = dict(zip(E0_SYMBOLS, e0)) | dict(zip(EPI_SYMBOLS, epi))
    delta = reduce(expand_characteristic_determinant(), RewriteSystem.build(subs, relations))
    groups = delta.collect(("c", "s"))
    zero = MultivariatePoly()
    constant = groups.pop((0, 0), zero)
    cos_coeff = groups.pop((1, 0), zero)
    sin_coeff = groups.pop((0, 1), zero)
    remainder = zero
    for (ec, es), cof in groups.items():
        remainder = remainder + cof * c**ec * s**es
    return UnperturbedForm(constant, cos_coeff, sin_coeff, remainder)
