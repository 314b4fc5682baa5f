"""Fundamental matrices of the Dirac system B y' + V y = lambda y.

In scalar form the system reads

    y1' = q y1 - (lambda + p) y2
    y2' = (lambda - p) y1 - q y2,

i.e. ``Y' = F(x) Y`` with a traceless ``F``, so det Y is constant.  The
fundamental matrix ``E(x, lambda)`` equals the identity at an anchor point
(``pi/2`` by default); optionally the lambda-derivative ``Z = dE/dlambda``
is carried along through the variational system ``Z' = F Z + G E`` with
``G = [[0, -1], [1, 0]]``.

Two backends share one contract:

* ``double``: adaptive Dormand-Prince 5(4) in float64, vectorised over a
  batch of lambda values, landing on every breakpoint of the potential;
* ``multi``: Taylor-series integration in gmpy2 multiprecision, using the
  closed-form Taylor coefficients of the polynomial-times-trig potential.

The determinant is never renormalised.  Solutions grow like
``exp(|Im lambda| * distance)``, so |det E - 1| computed from float64
entries carries a rounding floor of order ``eps * |E|**2``.  With
``precision="auto"`` every lambda is integrated in float64 first and redone
in multiprecision when the measured defect or that floor would exceed the
Wronskian tolerance; working precision is derived from the observed growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import gmpy2
import numpy as np

from .errors import OutOfDomain, ToleranceNotMet
from .potential import FULL_PI, HALF_PI, PI, ZERO, Point, PotentialSpec

_EPS = 2.0**-53

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

PRECISIONS = ("auto", "double", "multi")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float = PI / 16
    wronskian_tol: float = 1e-10
    max_steps: int = 200_000
    precision: str = "auto"

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "wronskian_tol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.precision not in PRECISIONS:
            raise ValueError(f"precision must be one of {PRECISIONS}")

    def with_overrides(self, **kw) -> "IntegratorConfig":
        return replace(self, **kw)


DEFAULT_CONFIG = IntegratorConfig()


def hp_context(bits: int):
    """gmpy2 context manager with ``bits`` of working precision."""
    return gmpy2.context(gmpy2.get_context(), precision=max(int(bits), 53))


@dataclass(frozen=True)
class FundamentalMatrix:
    """E(at, lam) for the solution equal to I at ``anchor``.

    ``entries`` holds (e11, e12, e21, e22) as Python complex numbers
    (``bits == 53``) or gmpy2 ``mpc`` values carrying ``bits`` of precision.
    ``derivative`` holds dE/dlambda in the same layout when requested.
    """

    entries: tuple
    anchor: float
    at: float
    lam: complex
    bits: int = 53
    derivative: tuple | None = None

    def __getitem__(self, ij: tuple[int, int]) -> complex:
        """1-based access rounded to complex: ``E[2, 1]`` is e21."""
        i, j = ij
        return complex(self.entries[2 * (i - 1) + (j - 1)])

    @property
    def e11(self) -> complex:
        return complex(self.entries[0])

    @property
    def e12(self) -> complex:
        return complex(self.entries[1])

    @property
    def e21(self) -> complex:
        return complex(self.entries[2])

    @property
    def e22(self) -> complex:
        return complex(self.entries[3])

    def matrix(self) -> np.ndarray:
        return np.array([[self.e11, self.e12], [self.e21, self.e22]], dtype=complex)

    def derivative_matrix(self) -> np.ndarray:
        if self.derivative is None:
            raise ValueError("derivative was not computed")
        d = [complex(v) for v in self.derivative]
        return np.array([[d[0], d[1]], [d[2], d[3]]], dtype=complex)

    def det(self) -> complex:
        a, b, c, d = self.entries
        with hp_context(self.bits):
            return complex(a * d - b * c)

    @property
    def wronskian_defect(self) -> float:
        a, b, c, d = self.entries
        with hp_context(self.bits):
            return float(abs(a * d - b * c - 1))

    @property
    def magnitude(self) -> float:
        return max(abs(complex(v)) for v in self.entries)


def difference(x, y, bits: int) -> complex:
    """x - y evaluated at ``bits`` of precision, rounded to complex."""
    with hp_context(bits):
        return complex(x - y)


# --------------------------------------------------------------------------
# helpers


def as_point(x: Point | float) -> Point:
    if isinstance(x, Point):
        p = x
    else:
        p = Point(float(x))
    if not (-1e-15 <= p.value <= PI + 1e-15):
        raise OutOfDomain(f"{p.value!r} is outside [0, pi]")
    return p


def _path(V: PotentialSpec, start: Point, stop: Point):
    """Smooth sub-intervals traversed from ``start`` to ``stop``.

    Yields (a, b, p_terms, q_terms) with a -> b in travel order.
    """
    sv, ev = start.value, stop.value
    if sv == ev:
        return []
    lo, hi = min(sv, ev), max(sv, ev)
    pieces = []
    for a, b, pt, qt in V.segments():
        if b.value <= lo or a.value >= hi:
            continue
        a2 = a if a.value >= lo else (start if sv < ev else stop)
        b2 = b if b.value <= hi else (stop if sv < ev else start)
        pieces.append((a2, b2, pt, qt))
    if sv > ev:
        pieces = [(b, a, pt, qt) for a, b, pt, qt in reversed(pieces)]
    return pieces


def _pq(pt, qt, x: float) -> tuple[complex, complex]:
    p = 0j
    for t in pt:
        p += t.value(x)
    q = 0j
    for t in qt:
        q += t.value(x)
    return p, q


# --------------------------------------------------------------------------
# float64 backend


def _rhs(x: float, y: np.ndarray, lam: np.ndarray, pt, qt, sign: float) -> np.ndarray:
    p, q = _pq(pt, qt, x)
    f11 = sign * q
    f12 = -sign * (lam + p)
    f21 = sign * (lam - p)
    f22 = -f11
    out = np.empty_like(y)
    out[0] = f11 * y[0] + f12 * y[2]
    out[1] = f11 * y[1] + f12 * y[3]
    out[2] = f21 * y[0] + f22 * y[2]
    out[3] = f21 * y[1] + f22 * y[3]
    if y.shape[0] == 8:
        out[4] = f11 * y[4] + f12 * y[6] - sign * y[2]
        out[5] = f11 * y[5] + f12 * y[7] - sign * y[3]
        out[6] = f21 * y[4] + f22 * y[6] + sign * y[0]
        out[7] = f21 * y[5] + f22 * y[7] + sign * y[1]
    return out


def _identity_state(n: int, derivative: bool) -> np.ndarray:
    y = np.zeros((8 if derivative else 4, n), dtype=complex)
    y[0] = 1.0
    y[3] = 1.0
    return y


def _propagate_double(V: PotentialSpec, lams: np.ndarray, start: Point, stop: Point,
                      cfg: IntegratorConfig, derivative: bool) -> np.ndarray:
    """State (rows e11, e12, e21, e22[, z11, z12, z21, z22]) at ``stop``."""
    y = _identity_state(lams.size, derivative)
    pieces = _path(V, start, stop)
    if not pieces:
        return y
    scale = 1.0 + float(np.max(np.abs(lams))) + V.sup_norm_estimate(65)
    h = min(cfg.max_step, 0.05 / scale)
    steps = 0
    for a, b, pt, qt in pieces:
        av, bv = a.value, b.value
        sign = 1.0 if bv > av else -1.0
        length = abs(bv - av)
        s = 0.0
        k1 = _rhs(av, y, lams, pt, qt, sign)
        while length - s > 1e-15 * max(1.0, length):
            last = s + h >= length
            hs = length - s if last else h
            x0 = av + sign * s
            ks = [k1]
            for i in range(1, 7):
                yi = y.copy()
                for j, aij in enumerate(_A[i]):
                    if aij:
                        yi += (hs * aij) * ks[j]
                xi = bv if (last and _C[i] == 1.0) else x0 + sign * _C[i] * hs
                ks.append(_rhs(xi, yi, lams, pt, qt, sign))
            y_new = yi  # stage 7 abscissa is the 5th-order solution (FSAL)
            err = sum(e * k for e, k in zip(_E, ks) if e) * hs
            sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            ratio = np.abs(err) / sc
            err_norm = float(np.max(np.sqrt(np.mean(ratio**2, axis=0))))
            steps += 1
            if steps > cfg.max_steps:
                raise ToleranceNotMet(f"step budget of {cfg.max_steps} exhausted")
            if not math.isfinite(err_norm):
                raise ToleranceNotMet("non-finite state during integration")
            if err_norm <= 1.0:
                s = length if last else s + hs
                y = y_new
                k1 = ks[6]
                fac = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm**-0.2)
                if not last:
                    h = min(cfg.max_step, hs * fac)
            else:
                h = hs * max(0.2, 0.9 * err_norm**-0.2)
                if h < 1e-13 * max(1.0, length):
                    raise ToleranceNotMet("step size underflow")
    return y


# --------------------------------------------------------------------------
# multiprecision backend


def _taylor_order(tol: float) -> int:
    return int(min(160, max(16, math.ceil(-math.log(tol) / 2) + 6)))


def _propagate_multi(V: PotentialSpec, lam: complex, start: Point, stop: Point,
                     bits: int, tol: float, cfg: IntegratorConfig, derivative: bool) -> list:
    """Taylor-series integration; returns 4 (or 8) mpc entries at ``stop``.

    Must be called inside ``hp_context(bits)``.
    """
    one, zero = gmpy2.mpc(1), gmpy2.mpc(0)
    Y = [one, zero, zero, one]
    Z = [zero, zero, zero, zero] if derivative else None
    pieces = _path(V, start, stop)
    if not pieces:
        return Y + (Z or [])
    pi_hp = gmpy2.const_pi()
    lam_hp = gmpy2.mpc(lam)
    order = _taylor_order(tol)
    log_tol = math.log(tol)
    steps = 0
    for a, b, pt, qt in pieces:
        ah, bh = a.hp(), b.hp()
        sigma = 1 if b.value > a.value else -1
        x = ah
        remaining = abs(bh - ah)
        while remaining > 0:
            steps += 1
            if steps > cfg.max_steps:
                raise ToleranceNotMet(f"step budget of {cfg.max_steps} exhausted")
            pc = [zero] * (order + 1)
            for t in pt:
                pc = [u + v for u, v in zip(pc, t.taylor(x, order, pi_hp))]
            qc = [zero] * (order + 1)
            for t in qt:
                qc = [u + v for u, v in zip(qc, t.taylor(x, order, pi_hp))]
            fs = []
            for k in range(order + 1):
                sg = sigma ** (k + 1)
                if k == 0:
                    f = (sg * qc[0], -sg * (lam_hp + pc[0]), sg * (lam_hp - pc[0]), -sg * qc[0])
                    fs.append((0, f))
                elif pc[k] != 0 or qc[k] != 0:
                    fs.append((k, (sg * qc[k], -sg * pc[k], -sg * pc[k], -sg * qc[k])))
            ys = [Y]
            zs = [Z] if derivative else None
            for n in range(order):
                s11 = s12 = s21 = s22 = zero
                for k, (f11, f12, f21, f22) in fs:
                    if k > n:
                        break
                    y11, y12, y21, y22 = ys[n - k]
                    s11 += f11 * y11 + f12 * y21
                    s12 += f11 * y12 + f12 * y22
                    s21 += f21 * y11 + f22 * y21
                    s22 += f21 * y12 + f22 * y22
                inv = gmpy2.mpfr(1) / (n + 1)
                ys.append((s11 * inv, s12 * inv, s21 * inv, s22 * inv))
                if derivative:
                    y11, y12, y21, y22 = ys[n]
                    t11, t12, t21, t22 = -sigma * y21, -sigma * y22, sigma * y11, sigma * y12
                    for k, (f11, f12, f21, f22) in fs:
                        if k > n:
                            break
                        z11, z12, z21, z22 = zs[n - k]
                        t11 += f11 * z11 + f12 * z21
                        t12 += f11 * z12 + f12 * z22
                        t21 += f21 * z11 + f22 * z21
                        t22 += f21 * z12 + f22 * z22
                    zs.append((t11 * inv, t12 * inv, t21 * inv, t22 * inv))

            def norm(n):
                vals = list(ys[n]) + (list(zs[n]) if derivative else [])
                return max(float(abs(v)) for v in vals)

            n0 = max(norm(0), 1e-300)
            h_est = math.inf
            for n in (order - 1, order):
                nn = norm(n)
                if nn > 0:
                    h_est = min(h_est, math.exp((log_tol + math.log(n0) - math.log(nn)) / n))
            h_est *= 0.9
            if h_est >= float(remaining):
                h = remaining
            else:
                h = gmpy2.mpfr(h_est)
                if h_est < 1e-12:
                    raise ToleranceNotMet("Taylor step size underflow")
            acc = list(ys[order])
            for n in range(order - 1, -1, -1):
                acc = [u * h + v for u, v in zip(acc, ys[n])]
            Y = acc
            if derivative:
                accz = list(zs[order])
                for n in range(order - 1, -1, -1):
                    accz = [u * h + v for u, v in zip(accz, zs[n])]
                Z = accz
            if h is remaining:
                break
            x = x + sigma * h
            remaining = abs(bh - x)
    return Y + (Z or [])


# --------------------------------------------------------------------------
# driver


def _growth_bound(V: PotentialSpec, lam: complex, length: float) -> float:
    return math.exp(min(700.0, (abs(lam.imag) + V.sup_norm_estimate()) * length))


def _solve(V: PotentialSpec, lams: Sequence[complex], anchor: Point, targets: Sequence[Point],
           cfg: IntegratorConfig, derivative: bool) -> list[list[FundamentalMatrix]]:
    lam_arr = np.asarray(lams, dtype=complex).ravel()
    n = lam_arr.size
    wtol = cfg.wronskian_tol
    results: list[list[FundamentalMatrix | None]] = [[None] * len(targets) for _ in range(n)]
    growth = np.ones(n)
    needs_multi = np.zeros(n, dtype=bool)

    if cfg.precision == "multi":
        needs_multi[:] = True
    double_ok = True
    if n:
        try:
            states = [_propagate_double(V, lam_arr, anchor, t, cfg, derivative) for t in targets]
        except ToleranceNotMet:
            if cfg.precision == "double":
                raise
            double_ok = False
            needs_multi[:] = True
            length = max(abs(t.value - anchor.value) for t in targets)
            growth = np.array([_growth_bound(V, complex(l), length) for l in lam_arr])
    if double_ok and n:
        for ti, t in enumerate(targets):
            y = states[ti]
            mag = np.max(np.abs(y[:4]), axis=0)
            growth = np.maximum(growth, mag)
            defect = np.abs(y[0] * y[3] - y[1] * y[2] - 1.0)
            if cfg.precision == "auto":
                needs_multi |= (defect > wtol / 4) | (64 * _EPS * mag**2 > wtol / 4)
            for i in range(n):
                results[i][ti] = FundamentalMatrix(
                    entries=tuple(complex(v) for v in y[:4, i]),
                    anchor=anchor.value, at=t.value, lam=complex(lam_arr[i]), bits=53,
                    derivative=tuple(complex(v) for v in y[4:, i]) if derivative else None,
                )

    for i in np.flatnonzero(needs_multi):
        lam = complex(lam_arr[i])
        g = max(float(growth[i]), 1.0)
        delta = wtol / (100.0 * g * g)
        step_tol = delta * 1e-3
        bits = int(math.ceil(-math.log2(step_tol))) + 32
        with hp_context(bits):
            for ti, t in enumerate(targets):
                vals = _propagate_multi(V, lam, anchor, t, bits, step_tol, cfg, derivative)
                results[i][ti] = FundamentalMatrix(
                    entries=tuple(vals[:4]), anchor=anchor.value, at=t.value, lam=lam,
                    bits=bits, derivative=tuple(vals[4:]) if derivative else None,
                )

    for i in range(n):
        for fm in results[i]:
            d = fm.wronskian_defect
            if not d <= wtol:
                raise ToleranceNotMet(
                    f"Wronskian defect {d:.3e} exceeds {wtol:.1e} at lambda={fm.lam}, x={fm.at}"
                )
    return results  # type: ignore[return-value]


def fundamental_matrix(V: PotentialSpec, lam: complex, anchor: Point | float = HALF_PI,
                       at: Point | float = FULL_PI, cfg: IntegratorConfig = DEFAULT_CONFIG,
                       derivative: bool = False) -> FundamentalMatrix:
    """E(at, lam) normalised by E(anchor, lam) = I.

    Raises
    ------
    OutOfDomain
        If ``anchor`` or ``at`` lies outside [0, pi].
    ToleranceNotMet
        If the step budget is exhausted or the Wronskian defect exceeds
        ``cfg.wronskian_tol``.
    """
    a, t = as_point(anchor), as_point(at)
    return _solve(V, [complex(lam)], a, [t], cfg, derivative)[0][0]


def endpoints(V: PotentialSpec, lam: complex, anchor: Point | float = HALF_PI,
              cfg: IntegratorConfig = DEFAULT_CONFIG,
              derivative: bool = False) -> tuple[FundamentalMatrix, FundamentalMatrix]:
    """(E(0, lam), E(pi, lam)) from one integration in both directions from the anchor."""
    e0, epi = _solve(V, [complex(lam)], as_point(anchor), [ZERO, FULL_PI], cfg, derivative)[0]
    return e0, epi


def endpoints_batch(V: PotentialSpec, lams: Iterable[complex], anchor: Point | float = HALF_PI,
                    cfg: IntegratorConfig = DEFAULT_CONFIG,
                    derivative: bool = False) -> list[tuple[FundamentalMatrix, FundamentalMatrix]]:
    """:func:`endpoints` for many lambda values, integrated as one vectorised batch."""
    lams = [complex(l) for l in lams]
    out = _solve(V, lams, as_point(anchor), [ZERO, FULL_PI], cfg, derivative)
    return [(r[0], r[1]) for r in out]


def transfer_entries(V: PotentialSpec, lam: complex,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> FundamentalMatrix:
    """E~(pi, lam) for the solution normalised at x = 0."""
    return fundamental_matrix(V, lam, anchor=ZERO, at=FULL_PI, cfg=cfg)


def remark2_entries(V: PotentialSpec, lam: complex,
                    cfg: IntegratorConfig = DEFAULT_CONFIG) -> tuple[complex, complex, complex, complex]:
    """(c1, s1, s2, c2) at x = pi, where E~(pi) = [[c1, -s2], [s1, c2]]."""
    fm = transfer_entries(V, lam, cfg)
    return fm.e11, fm.e21, -fm.e12, fm.e22


def remark2_difference(V: PotentialSpec, lam: complex,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> complex:
    """s1(pi, lam) - s2(pi, lam), evaluated before rounding to float64."""
    fm = transfer_entries(V, lam, cfg)
    # s1 - s2 = e21 + e12
    with hp_context(fm.bits):
        return complex(fm.entries[2] + fm.entries[1])


def reflection_defects(V: PotentialSpec, lam: complex,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> dict[str, float]:
    """Deviations in the endpoint relations for a midpoint-anchored E.

    Keys name the relation: e11(pi) = e22(0), e22(pi) = e11(0),
    e21(pi) = e12(0), e12(pi) = e21(0).
    """
    e0, epi = endpoints(V, lam, HALF_PI, cfg)
    bits = max(e0.bits, epi.bits)
    pairs = {
        "e11(pi)-e22(0)": (epi.entries[0], e0.entries[3]),
        "e22(pi)-e11(0)": (epi.entries[3], e0.entries[0]),
        "e21(pi)-e12(0)": (epi.entries[2], e0.entries[1]),
        "e12(pi)-e21(0)": (epi.entries[1], e0.entries[2]),
    }
    return {k: abs(difference(a, b, bits)) for k, (a, b) in pairs.items()}


def rotation(lam: complex, x: float) -> np.ndarray:
    """Closed-form E for V = 0 over a distance x: rotation by the angle lam*x."""
    c, s = np.cos(lam * x), np.sin(lam * x)
    return np.array([[c, -s], [s, c]], dtype=complex)
