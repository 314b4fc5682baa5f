"""Piecewise potentials p, q on [0, pi] and the midpoint symmetry test.

A potential entry is a sum of terms.  Each term lives on one piece
``[lo, hi]`` of a partition of [0, pi] and has the form

    poly(u) * trig(k u),   u = x  or  u = pi - x  (``reflected``),

with complex polynomial coefficients (ascending powers) and ``trig`` one of
cos, sin or absent.  The class is closed under x -> pi - x, which makes
:func:`symmetrize` exact.  Breakpoints are :class:`Point` values
``offset + r*pi`` with rational ``r`` so that reflected breakpoints stay
exact at any working precision.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, NamedTuple, Sequence

import gmpy2
import numpy as np

from .errors import OutOfDomain, PotentialError

PI = math.pi
#: absolute tolerance on the L1 symmetry defects
SYMMETRY_TOL = 1e-10

_MAX_SNAP_DEN = 12


# --------------------------------------------------------------------------
# breakpoints


@dataclass(frozen=True, order=False)
class Point:
    """The real number ``offset + pi_coeff * pi``."""

    offset: float = 0.0
    pi_coeff: Fraction = Fraction(0)

    def __post_init__(self):
        off = float(self.offset)
        r = Fraction(self.pi_coeff)
        if r == 0 and off != 0.0:
            snapped = _snap_to_pi(off)
            if snapped is not None:
                off, r = 0.0, snapped
        object.__setattr__(self, "offset", off + 0.0)
        object.__setattr__(self, "pi_coeff", r)

    @property
    def value(self) -> float:
        if self.pi_coeff == 0:
            return self.offset
        return self.offset + float(self.pi_coeff) * PI

    def hp(self):
        """Value as an mpfr in the current gmpy2 context."""
        v = gmpy2.mpfr(self.offset)
        if self.pi_coeff:
            r = self.pi_coeff
            v += gmpy2.const_pi() * r.numerator / r.denominator
        return v

    def reflect(self) -> "Point":
        """pi - self."""
        return Point(-self.offset, 1 - self.pi_coeff)

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> float | str:
        if self.pi_coeff == 0:
            return self.offset
        r = self.pi_coeff
        s = "pi" if abs(r.numerator) == 1 else f"{abs(r.numerator)}*pi"
        if r.denominator != 1:
            s += f"/{r.denominator}"
        if r < 0:
            s = "-" + s
        if self.offset:
            s += f" {'+' if self.offset > 0 else '-'} {abs(self.offset)!r}"
        return s

    @classmethod
    def parse(cls, v: Any) -> "Point":
        if isinstance(v, Point):
            return v
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return cls(float(v))
        if isinstance(v, str):
            return _parse_point(v)
        raise PotentialError(f"cannot interpret {v!r} as a point")


ZERO = Point(0.0)
HALF_PI = Point(0.0, Fraction(1, 2))
FULL_PI = Point(0.0, Fraction(1))


def _snap_to_pi(x: float) -> Fraction | None:
    """Recognise floats that are correctly rounded small rational multiples of pi."""
    for den in range(1, _MAX_SNAP_DEN + 1):
        num = round(x * den / PI)
        if num == 0:
            continue
        if abs(x - num * PI / den) <= 4 * math.ulp(x):
            return Fraction(num, den)
    return None


_PI_TOKEN = re.compile(r"^(?:(\d+(?:\.\d*)?)\s*\*?\s*)?pi(?:\s*/\s*(\d+))?$")


def _parse_point(text: str) -> Point:
    s = text.replace(" ", "").lower()
    if not s:
        raise PotentialError("empty point expression")
    tokens = re.findall(r"[+-]?[^+-]+", s)
    if "".join(tokens) != s:
        raise PotentialError(f"cannot parse point {text!r}")
    offset, r = 0.0, Fraction(0)
    for tok in tokens:
        sign = -1 if tok.startswith("-") else 1
        body = tok.lstrip("+-")
        m = _PI_TOKEN.match(body)
        if m:
            num = Fraction(m.group(1)) if m.group(1) else Fraction(1)
            den = int(m.group(2)) if m.group(2) else 1
            r += sign * num / den
        else:
            try:
                offset += sign * float(body)
            except ValueError:
                raise PotentialError(f"cannot parse point {text!r}") from None
    return Point(offset, r)


# --------------------------------------------------------------------------
# terms


class Trig(NamedTuple):
    kind: str  # "cos" or "sin"
    k: int


@dataclass(frozen=True)
class Term:
    lo: Point
    hi: Point
    poly: tuple[complex, ...]
    trig: Trig | None = None
    reflected: bool = False

    def __post_init__(self):
        lo, hi = Point.parse(self.lo), Point.parse(self.hi)
        if not lo.value < hi.value:
            raise PotentialError(f"empty piece [{lo.value}, {hi.value}]")
        if lo.value < -1e-15 or hi.value > PI + 1e-15:
            raise PotentialError(f"piece [{lo.value}, {hi.value}] leaves [0, pi]")
        poly = [complex(c) for c in self.poly]
        trig = self.trig
        if trig is not None:
            kind, k = trig
            if kind not in ("cos", "sin"):
                raise PotentialError(f"unknown trig kind {kind!r}")
            if int(k) != k:
                raise PotentialError("trig frequency must be an integer")
            k = int(k)
            if k < 0:
                k = -k
                if kind == "sin":
                    poly = [-c for c in poly]
            if k == 0:
                trig = None
                if kind == "sin":
                    poly = []
            else:
                trig = Trig(kind, k)
        for c in poly:
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise PotentialError("non-finite polynomial coefficient")
        while poly and poly[-1] == 0:
            poly.pop()
        reflected = bool(self.reflected)
        if trig is None and len(poly) <= 1:
            reflected = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "poly", tuple(poly))
        object.__setattr__(self, "trig", trig)
        object.__setattr__(self, "reflected", reflected)

    @property
    def is_zero(self) -> bool:
        return not self.poly

    @property
    def interval(self) -> tuple[Point, Point]:
        return (self.lo, self.hi)

    def shape_key(self) -> tuple:
        """Terms with equal keys differ only in their coefficients."""
        return (self.lo, self.hi, self.trig, self.reflected)

    def value(self, x: float) -> complex:
        """Value of the term's formula at x (the piece is not checked)."""
        if not self.poly:
            return 0j
        u = PI - x if self.reflected else x
        acc = 0j
        for c in reversed(self.poly):
            acc = acc * u + c
        if self.trig is not None:
            kind, k = self.trig
            acc *= math.cos(k * u) if kind == "cos" else math.sin(k * u)
        return acc

    def value_hp(self, x, pi_hp):
        """Same as :meth:`value` for an mpfr ``x`` in the current context."""
        if not self.poly:
            return gmpy2.mpc(0)
        u = pi_hp - x if self.reflected else x
        acc = gmpy2.mpc(0)
        for c in reversed(self.poly):
            acc = acc * u + c
        if self.trig is not None:
            kind, k = self.trig
            acc *= gmpy2.cos(k * u) if kind == "cos" else gmpy2.sin(k * u)
        return acc

    def taylor(self, x0, order: int, pi_hp) -> list:
        """Taylor coefficients in h of the term at ``x0 + h`` up to ``h**order``."""
        sigma = -1 if self.reflected else 1
        u0 = pi_hp - x0 if self.reflected else x0
        # Taylor shift of the polynomial to u0
        c = [gmpy2.mpc(a) for a in self.poly]
        n = len(c)
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                c[j] += u0 * c[j + 1]
        if sigma < 0:
            c = [v if j % 2 == 0 else -v for j, v in enumerate(c)]
        if self.trig is None:
            out = c[: order + 1]
            out += [gmpy2.mpc(0)] * (order + 1 - len(out))
            return out
        kind, k = self.trig
        theta = k * u0
        C, S = gmpy2.cos(theta), gmpy2.sin(theta)
        cyc = (C, -S, -C, S) if kind == "cos" else (S, C, -S, -C)
        t = []
        fac = gmpy2.mpfr(1)
        ks = sigma * k
        for j in range(order + 1):
            t.append(cyc[j % 4] * fac)
            fac = fac * ks / (j + 1)
        out = []
        for j in range(order + 1):
            acc = gmpy2.mpc(0)
            for i in range(min(j, n - 1) + 1):
                acc += c[i] * t[j - i]
            out.append(acc)
        return out

    def reflect(self) -> "Term":
        """The term x -> t(pi - x)."""
        return Term(self.hi.reflect(), self.lo.reflect(), self.poly, self.trig, not self.reflected)

    def scaled(self, factor: complex) -> "Term":
        return Term(self.lo, self.hi, tuple(factor * c for c in self.poly), self.trig, self.reflected)

    def restricted(self, lo: Point, hi: Point) -> "Term":
        return Term(lo, hi, self.poly, self.trig, self.reflected)

    def to_json(self) -> dict:
        d: dict[str, Any] = {
            "interval": [self.lo.to_json(), self.hi.to_json()],
            "poly": [[c.real, c.imag] for c in self.poly],
            "trig": None if self.trig is None else {"kind": self.trig.kind, "k": self.trig.k},
        }
        if self.reflected:
            d["reflected"] = True
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Term":
        lo, hi = d["interval"]
        trig = d.get("trig")
        return cls(
            Point.parse(lo),
            Point.parse(hi),
            tuple(_complex_from_json(c) for c in d.get("poly", [])),
            None if trig is None else Trig(trig["kind"], trig["k"]),
            bool(d.get("reflected", False)),
        )


def _complex_from_json(v: Any) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise PotentialError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def term(poly: Sequence[complex] | complex, trig: tuple[str, int] | None = None,
         interval: tuple[Any, Any] = (ZERO, FULL_PI), reflected: bool = False) -> Term:
    """Convenience constructor; ``poly`` may be a scalar constant."""
    if not isinstance(poly, (list, tuple)):
        poly = (poly,)
    lo, hi = interval
    return Term(Point.parse(lo), Point.parse(hi), tuple(poly),
                None if trig is None else Trig(*trig), reflected)


# --------------------------------------------------------------------------
# one entry (p or q)


def _check_partition(terms: Sequence[Term], name: str) -> None:
    if not terms:
        return
    pieces = sorted({t.interval for t in terms}, key=lambda iv: (iv[0].value, iv[1].value))
    if pieces[0][0] != ZERO:
        raise PotentialError(f"{name}: pieces must start at 0")
    if pieces[-1][1] != FULL_PI:
        raise PotentialError(f"{name}: pieces must end at pi")
    for (lo1, hi1), (lo2, hi2) in zip(pieces, pieces[1:]):
        if hi1 != lo2:
            raise PotentialError(
                f"{name}: pieces [{lo1.value}, {hi1.value}] and [{lo2.value}, {hi2.value}]"
                " overlap or leave a gap"
            )


def _entry_value(terms: Sequence[Term], x: float) -> complex:
    total = 0j
    for t in terms:
        lo, hi = t.lo.value, t.hi.value
        if lo <= x < hi or (x == hi and t.hi == FULL_PI):
            total += t.value(x)
    return total


def _entry_points(terms: Iterable[Term]) -> list[Point]:
    pts = {p for t in terms for p in t.interval}
    return sorted(pts, key=lambda p: p.value)


def _refine(terms: Sequence[Term], points: Sequence[Point]) -> list[Term]:
    """Split every term at the given breakpoints."""
    out = []
    for t in terms:
        inner = [p for p in points if t.lo.value < p.value < t.hi.value]
        edges = [t.lo, *inner, t.hi]
        out.extend(t.restricted(a, b) for a, b in zip(edges, edges[1:]))
    return out


def _combine(terms: Iterable[Term]) -> tuple[Term, ...]:
    """Drop zero terms and sort; coefficients are never added in float.

    Float addition would round differently on mirrored pieces and break exact
    reflection symmetry at the 1e-17 level, which Delta amplifies by |E|^2.
    """
    out = []
    covered = set()
    pieces = []
    for t in terms:
        if (t.lo, t.hi) not in pieces:
            pieces.append((t.lo, t.hi))
        if not t.is_zero:
            out.append(t)
            covered.add((t.lo, t.hi))
    # pieces with only zero terms keep one so the partition stays whole
    for lo, hi in pieces:
        if (lo, hi) not in covered:
            out.append(Term(lo, hi, (), None, False))
    out.sort(key=lambda t: (t.lo.value, t.hi.value, t.trig or ("", -1), t.reflected))
    return tuple(out)


@dataclass(frozen=True)
class PotentialSpec:
    """The pair (p, q) as term lists; an empty list is the zero function."""

    p: tuple[Term, ...] = ()
    q: tuple[Term, ...] = ()
    _segments: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        p, q = tuple(self.p), tuple(self.q)
        _check_partition(p, "p")
        _check_partition(q, "q")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "_segments", self._build_segments())

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls()

    @property
    def is_zero(self) -> bool:
        return not self.p and not self.q

    def breakpoints(self) -> list[Point]:
        """Interior breakpoints of p and q, sorted and deduplicated."""
        pts = [pt for pt in _entry_points(self.p + self.q) if pt not in (ZERO, FULL_PI)]
        out: list[Point] = []
        for pt in pts:
            if out and abs(out[-1].value - pt.value) <= 4 * math.ulp(pt.value):
                continue
            out.append(pt)
        return out

    def _build_segments(self):
        edges = [ZERO, *self.breakpoints(), FULL_PI]
        segs = []
        for a, b in zip(edges, edges[1:]):
            mid = 0.5 * (a.value + b.value)
            pt = tuple(t for t in self.p if t.lo.value <= mid < t.hi.value)
            qt = tuple(t for t in self.q if t.lo.value <= mid < t.hi.value)
            segs.append((a, b, pt, qt))
        return tuple(segs)

    def segments(self) -> tuple:
        """(lo, hi, p_terms, q_terms) for each smooth segment of [0, pi]."""
        return self._segments

    def values(self, x: float) -> tuple[complex, complex]:
        return _entry_value(self.p, x), _entry_value(self.q, x)

    def sup_norm_estimate(self, n: int = 257) -> float:
        xs = np.linspace(0.0, PI, n)
        return max(abs(a) + abs(b) for a, b in (self.values(float(x)) for x in xs))

    def to_json(self) -> dict:
        return {"p": [t.to_json() for t in self.p], "q": [t.to_json() for t in self.q]}

    @classmethod
    def from_json(cls, d: dict) -> "PotentialSpec":
        try:
            return cls(tuple(Term.from_json(t) for t in d.get("p", [])),
                       tuple(Term.from_json(t) for t in d.get("q", [])))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PotentialError):
                raise
            raise PotentialError(f"malformed potential term: {exc}") from exc


def concat(a: PotentialSpec, b: PotentialSpec) -> PotentialSpec:
    """Sum of two potentials as a term list (pieces refined to a common partition)."""
    def merge(s, t):
        if not s or not t:
            return s + t
        pts = _entry_points(s + t)
        return tuple(_refine(s, pts) + _refine(t, pts))
    return PotentialSpec(merge(a.p, b.p), merge(a.q, b.q))


# --------------------------------------------------------------------------
# operations


def evaluate(V: PotentialSpec, x: float) -> tuple[complex, complex]:
    """(p(x), q(x)); interior breakpoints belong to the piece on their right."""
    if not (0.0 <= x <= PI):
        raise OutOfDomain(f"x = {x!r} is outside [0, pi]")
    return V.values(x)


@dataclass(frozen=True)
class SymmetryReport:
    defect_p: float
    defect_q: float
    satisfied: bool


def _l1_defect(terms: Sequence[Term], sign: int, n_quad: int) -> float:
    """L1 norm over [0, pi] of x -> f(pi - x) + sign * f(x)."""
    if not terms:
        return 0.0
    pts = _entry_points(list(terms) + [t.reflect() for t in terms])
    # the reflected difference vanishes at pi/2, so |.| typically has a kink there
    edges = sorted({p.value for p in pts} | {HALF_PI.value})
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        if b - a <= 0:
            continue
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        for t, w in zip(nodes, weights):
            x = mid + half * t
            total += w * half * abs(_entry_value(terms, PI - x) + sign * _entry_value(terms, x))
    return float(total)


def symmetry_report(V: PotentialSpec, n_quad: int = 32, tol: float = SYMMETRY_TOL) -> SymmetryReport:
    """L1 defects of p(pi - x) = -p(x) and q(pi - x) = q(x)."""
    if n_quad < 16:
        raise ValueError("n_quad must be at least 16")
    dp = _l1_defect(V.p, +1, n_quad)
    dq = _l1_defect(V.q, -1, n_quad)
    return SymmetryReport(dp, dq, max(dp, dq) <= tol)


def symmetrize(V: PotentialSpec) -> PotentialSpec:
    """Project onto p odd, q even about pi/2, exactly on the term representation."""
    def part(terms, sign):
        if not terms:
            return ()
        mixed = [t.scaled(0.5) for t in terms] + [t.reflect().scaled(0.5 * sign) for t in terms]
        return _combine(_refine(mixed, _entry_points(mixed)))
    return PotentialSpec(part(V.p, -1), part(V.q, +1))


def random_potential(rng: np.random.Generator, n_pieces: int | None = None,
                     max_degree: int = 2, max_k: int = 3, scale: float = 1.0) -> PotentialSpec:
    """A random piecewise-smooth complex potential, for property checks."""
    def entry():
        n = n_pieces if n_pieces is not None else int(rng.integers(1, 4))
        cuts = sorted(rng.uniform(0.3, PI - 0.3, size=n - 1))
        edges = [ZERO, *(Point(float(c)) for c in cuts), FULL_PI]
        terms = []
        for a, b in zip(edges, edges[1:]):
            for _ in range(int(rng.integers(1, 3))):
                deg = int(rng.integers(0, max_degree + 1))
                poly = tuple(complex(*(rng.normal(size=2) * scale / (1 + i)))
                             for i in range(deg + 1))
                trig = None
                if rng.random() < 0.6:
                    trig = Trig(str(rng.choice(["cos", "sin"])), int(rng.integers(1, max_k + 1)))
                terms.append(Term(a, b, poly, trig))
        return tuple(terms)
    return PotentialSpec(entry(), entry())
