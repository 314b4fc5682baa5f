"""Eigenvalues as zeros of Delta(lambda) inside a rectangle of the complex plane.

Zeros are counted with the argument principle, isolated by quadrisection,
and refined by Newton's method with the analytic derivative carried by the
variational system.  Degenerate situations (Delta identically zero, no
zeros in the box) are reported as verdicts rather than errors.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .boundary import BoundaryMatrix, classify, minors
from .determinant import characteristic_determinant_batch
from .errors import HypothesisViolated, IdenticallyZero, ZeroOnContour
from .integrator import DEFAULT_CONFIG, IntegratorConfig, reflection_defects, remark2_difference
from .potential import PotentialSpec, symmetry_report

#: contour floor relative to the largest sampled |Delta|, raised to 100 x the
#: integration rel_tol when that is larger
CONTOUR_FLOOR = 1e-12
#: integration tolerances used while sampling counting contours; only the
#: rounded winding number matters there
COUNT_RTOL = 1e-9
COUNT_WRONSKIAN_TOL = 1e-6
RESIDUAL_TOL = 1e-9
NEWTON_MAXITER = 50
SCREEN_PROBES = 16
SCREEN_HALF_WIDTH = 8.0
SCREEN_TOL = 1e-10
SCREEN_SEED = 20240917
THEOREM1_TOL = 1e-8
RELATION_TOL = 1e-9

_SPLITS = ((0.5137, 0.4871), (0.4629, 0.5411), (0.5563, 0.4457), (0.4311, 0.5723))


@dataclass(frozen=True)
class LambdaBox:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        vals = (self.re_lo, self.re_hi, self.im_lo, self.im_hi)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("box bounds must be finite")
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValueError(f"degenerate box {vals}")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo)

    def corners(self) -> list[complex]:
        """Counter-clockwise from the lower-left corner."""
        return [complex(self.re_lo, self.im_lo), complex(self.re_hi, self.im_lo),
                complex(self.re_hi, self.im_hi), complex(self.re_lo, self.im_hi)]

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (self.re_lo - slack <= z.real <= self.re_hi + slack
                and self.im_lo - slack <= z.imag <= self.im_hi + slack)

    def split(self, fx: float = 0.5, fy: float = 0.5) -> list["LambdaBox"]:
        xm = self.re_lo + fx * (self.re_hi - self.re_lo)
        ym = self.im_lo + fy * (self.im_hi - self.im_lo)
        return [LambdaBox(self.re_lo, xm, self.im_lo, ym), LambdaBox(xm, self.re_hi, self.im_lo, ym),
                LambdaBox(xm, self.re_hi, ym, self.im_hi), LambdaBox(self.re_lo, xm, ym, self.im_hi)]

    def dilate(self, frac: float) -> "LambdaBox":
        hw = 0.5 * (self.re_hi - self.re_lo) * (1 + frac)
        hh = 0.5 * (self.im_hi - self.im_lo) * (1 + frac)
        c = self.center
        return LambdaBox(c.real - hw, c.real + hw, c.imag - hh, c.imag + hh)

    def grid(self, n: int) -> list[complex]:
        """n x n points, Re-major then Im, both increasing; n = 1 is the center."""
        if n < 1:
            raise ValueError("grid size must be positive")
        if n == 1:
            return [self.center]
        res = np.linspace(self.re_lo, self.re_hi, n)
        ims = np.linspace(self.im_lo, self.im_hi, n)
        return [complex(r, i) for r in res for i in ims]


DEFAULT_BOX = LambdaBox(-5.0, 5.0, -5.0, 5.0)


class Verdict(Enum):
    FINITE_LIST = "FINITE_LIST"
    EMPTY_IN_BOX = "EMPTY_IN_BOX"
    IDENTICALLY_ZERO = "IDENTICALLY_ZERO"


@dataclass(frozen=True)
class Eigenvalue:
    lam: complex
    multiplicity: int
    residual: float
    converged: bool = True


@dataclass(frozen=True)
class SpectrumReport:
    verdict: Verdict
    eigenvalues: tuple[Eigenvalue, ...] = ()
    scale: float = 0.0
    notes: tuple[str, ...] = ()

    @property
    def total_count(self) -> int:
        return sum(e.multiplicity for e in self.eigenvalues)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "eigenvalues": [{"re": e.lam.real, "im": e.lam.imag, "mult": e.multiplicity,
                             "converged": e.converged} for e in self.eigenvalues],
            "residuals": [e.residual for e in self.eigenvalues],
            "total_count": self.total_count,
            "scale": self.scale,
            "notes": list(self.notes),
        }


class DeltaFunction:
    """Memoised Delta and dDelta/dlambda for one problem; batches cache misses."""

    def __init__(self, A: BoundaryMatrix, V: PotentialSpec, cfg: IntegratorConfig = DEFAULT_CONFIG):
        self.A, self.V, self.cfg = A, V, cfg
        self._cache: dict[complex, tuple[complex, complex]] = {}

    def __call__(self, lams) -> tuple[np.ndarray, np.ndarray]:
        lams = [complex(l) for l in lams]
        missing = list(dict.fromkeys(l for l in lams if l not in self._cache))
        if missing:
            vals, ders = characteristic_determinant_batch(self.A, self.V, missing, self.cfg,
                                                          derivative=True)
            for l, v, d in zip(missing, vals, ders):
                self._cache[l] = (complex(v), complex(d))
        out = [self._cache[l] for l in lams]
        return (np.array([v for v, _ in out], dtype=complex),
                np.array([d for _, d in out], dtype=complex))

    def one(self, lam: complex) -> tuple[complex, complex]:
        v, d = self([lam])
        return complex(v[0]), complex(d[0])


# --------------------------------------------------------------------------
# identically-zero screen


def screen_probes() -> list[complex]:
    rng = np.random.default_rng(SCREEN_SEED)
    pts = rng.uniform(-SCREEN_HALF_WIDTH, SCREEN_HALF_WIDTH, size=(SCREEN_PROBES, 2))
    return [complex(a, b) for a, b in pts]


def screen_identically_zero(A: BoundaryMatrix, V: PotentialSpec,
                            cfg: IntegratorConfig = DEFAULT_CONFIG) -> bool:
    """Heuristic test that Delta vanishes identically.

    True iff |Delta| <= 1e-10 * max|a_jk|^2 at 16 fixed pseudo-random probes
    in [-8, 8]^2.  Stops at the first probe that is clearly nonzero.
    """
    scale = A.scale**2
    tight = replace(cfg, wronskian_tol=min(cfg.wronskian_tol, 1e-13))
    for lam in screen_probes():
        d = characteristic_determinant_batch(A, V, [lam], tight)[0]
        if abs(d) > SCREEN_TOL * scale:
            return False
    return True


# --------------------------------------------------------------------------
# counting


def _count_cfg(cfg: IntegratorConfig) -> IntegratorConfig:
    return replace(cfg, rel_tol=max(cfg.rel_tol, COUNT_RTOL), abs_tol=max(cfg.abs_tol, COUNT_RTOL),
                   wronskian_tol=max(cfg.wronskian_tol, COUNT_WRONSKIAN_TOL))


def _winding(f: DeltaFunction, box: LambdaBox, min_level: int = 1,
             max_level: int = 9) -> tuple[int, float]:
    """(winding number of Delta around ``box``, max sampled |Delta|).

    Trapezoid sums of Delta'/Delta on each edge with Romberg extrapolation,
    refined by doubling until the total settles, cross-checked against the
    accumulated change of arg Delta over the same samples.
    """
    corners = box.corners()
    edges = list(zip(corners, corners[1:] + corners[:1]))
    n0 = 8
    samples: list[dict[float, complex]] = [dict() for _ in edges]  # t -> Delta'/Delta
    values: list[dict[float, complex]] = [dict() for _ in edges]   # t -> Delta
    romberg: list[list[list[complex]]] = [[] for _ in edges]
    prev_total = None
    scale = 0.0
    for level in range(max_level + 1):
        n = n0 * 2**level
        ts = [i / n for i in range(n + 1)]
        new = [(e, t) for e in range(4) for t in ts if t not in samples[e]]
        lams = [edges[e][0] + t * (edges[e][1] - edges[e][0]) for e, t in new]
        vals, ders = f(lams)
        for (e, t), v, d in zip(new, vals, ders):
            values[e][t] = v
            samples[e][t] = d / v if v != 0 else complex("nan")
        scale = max(scale, max(abs(v) for vv in values for v in vv.values()))
        # |Delta| below its own evaluation error cannot certify a zero-free contour
        floor = max(CONTOUR_FLOOR, 100 * f.cfg.rel_tol) * scale
        bad = [(edges[e][0] + t * (edges[e][1] - edges[e][0])) for e in range(4)
               for t, v in values[e].items() if not abs(v) > floor]
        if bad:
            raise ZeroOnContour(f"|Delta| below {floor:.3e} at lambda = {bad[0]}")
        total = 0j
        for e, (za, zb) in enumerate(edges):
            g = [samples[e][t] for t in ts]
            trap = (zb - za) * (sum(g) - 0.5 * (g[0] + g[-1])) / n
            row = [trap]
            prev_row = romberg[e][-1] if romberg[e] else []
            for j, pv in enumerate(prev_row):
                row.append(row[j] + (row[j] - pv) / (4 ** (j + 1) - 1))
            romberg[e].append(row)
            total += row[-1]
        w = total / (2j * math.pi)
        if level >= min_level and prev_total is not None:
            change = abs(total - prev_total) / (2 * math.pi)
            nearest = round(w.real)
            gap = abs(w - nearest)
            if change < 0.02 and gap <= 0.05 and _arg_winding(values, edges) == nearest:
                return int(nearest), float(scale)
        prev_total = total
    raise ZeroOnContour(f"winding number did not settle on box {box}")


def _arg_winding(values: list[dict[float, complex]], edges) -> int | None:
    seq = []
    for e in range(4):
        seq.extend(values[e][t] for t in sorted(values[e]) if t < 1.0)
    seq.append(seq[0])
    total = 0.0
    for a, b in zip(seq, seq[1:]):
        step = cmath.phase(b / a)
        if abs(step) > 0.5 * math.pi:
            return None
        total += step
    return round(total / (2 * math.pi))


def count_zeros(A: BoundaryMatrix, V: PotentialSpec, box: LambdaBox,
                cfg: IntegratorConfig = DEFAULT_CONFIG) -> int:
    """Number of zeros of Delta inside ``box``, counted with multiplicity.

    Raises
    ------
    IdenticallyZero
        If the pre-screen finds Delta identically zero.
    ZeroOnContour
        If Delta (nearly) vanishes on the boundary of ``box``.
    """
    if screen_identically_zero(A, V, cfg):
        raise IdenticallyZero("Delta vanishes at every probe point")
    return _winding(DeltaFunction(A, V, _count_cfg(cfg)), box)[0]


# --------------------------------------------------------------------------
# isolation and refinement


@dataclass
class _Search:
    f: DeltaFunction
    fc: DeltaFunction
    scale: float
    cluster_size: float
    found: list[Eigenvalue] = field(default_factory=list)

    def newton(self, z0: complex, mult: int, box: LambdaBox) -> tuple[complex, float, bool]:
        z = z0
        prev = math.inf
        d, dd = self.f.one(z)
        for _ in range(NEWTON_MAXITER):
            if d == 0:
                return z, 0.0, True
            if dd == 0 or not cmath.isfinite(dd):
                break
            step = mult * d / dd
            z = z - step
            d, dd = self.f.one(z)
            size = abs(step)
            if size <= 4e-16 * max(1.0, abs(z)) or (size >= prev and size < 1e-7 * max(1.0, abs(z))):
                break
            prev = size
        resid = abs(d)
        ok = resid <= RESIDUAL_TOL * self.scale and box.contains(z, 1e-9 * max(1.0, box.diameter))
        return z, resid, ok

    def children(self, box: LambdaBox, n: int) -> list[tuple[LambdaBox, int]]:
        last: Exception | None = None
        for fx, fy in _SPLITS:
            try:
                kids = [(b, _winding(self.fc, b)[0]) for b in box.split(fx, fy)]
            except ZeroOnContour as exc:
                last = exc
                continue
            if sum(k for _, k in kids) == n:
                return kids
            last = ZeroOnContour(f"sub-box counts do not add up to {n} in {box}")
        raise last  # type: ignore[misc]

    def solve(self, box: LambdaBox, n: int, depth: int = 0) -> None:
        if n == 0:
            return
        if n == 1:
            z, resid, ok = self.newton(box.center, 1, box)
            if ok or depth >= 30 or box.diameter < self.cluster_size:
                self.found.append(Eigenvalue(z, 1, resid, ok))
                return
        elif box.diameter < self.cluster_size or depth >= 30:
            z, resid, ok = self.newton(box.center, n, box)
            self.found.append(Eigenvalue(z, n, resid, ok))
            return
        for child, k in self.children(box, n):
            self.solve(child, k, depth + 1)


def find_eigenvalues(A: BoundaryMatrix, V: PotentialSpec, box: LambdaBox,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> SpectrumReport:
    """Locate all zeros of Delta in ``box`` with multiplicities.

    Sub-boxes are quadrisected until each holds one zero (or shrinks below
    1e-3 of the box diameter, in which case its count is taken as the
    multiplicity of a single zero), then refined by Newton's method.
    Newton failures are kept in the report with ``converged=False``.
    """
    if screen_identically_zero(A, V, cfg):
        return SpectrumReport(
            Verdict.IDENTICALLY_ZERO, (), 0.0,
            ("Delta vanished at all 16 probe points in [-8, 8]^2; every complex lambda is "
             "reported as an eigenvalue (sampling heuristic, not a proof)",),
        )
    fc = DeltaFunction(A, V, _count_cfg(cfg))
    n, scale = _winding(fc, box)
    if n == 0:
        return SpectrumReport(Verdict.EMPTY_IN_BOX, (), scale)
    search = _Search(DeltaFunction(A, V, cfg), fc, scale, 1e-3 * box.diameter)
    search.solve(box, n)
    eigs = tuple(sorted(search.found, key=lambda e: (e.lam.real, e.lam.imag)))
    notes = tuple(f"Newton did not converge near {e.lam}" for e in eigs if not e.converged)
    return SpectrumReport(Verdict.FINITE_LIST, eigs, scale, notes)


# --------------------------------------------------------------------------
# theorem check


@dataclass(frozen=True)
class VerificationReport:
    check: str
    max_deviation: float
    tolerance: float
    n_points: int
    J0: complex | None = None

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_json(self) -> dict:
        out = {"check": self.check, "max_deviation": self.max_deviation,
               "tolerance": self.tolerance, "n_points": self.n_points, "pass": self.passed}
        if self.J0 is not None:
            out["J0"] = [self.J0.real, self.J0.imag]
        return out


def check_symmetry(V: PotentialSpec) -> None:
    rep = symmetry_report(V)
    if not rep.satisfied:
        raise HypothesisViolated(
            "symmetry", f"defect_p={rep.defect_p:.3e}, defect_q={rep.defect_q:.3e}")


def check_theorem1_hypotheses(A: BoundaryMatrix, V: PotentialSpec) -> None:
    """Raise :class:`HypothesisViolated` unless both hypotheses hold."""
    if not classify(A).theorem1_applicable:
        m = minors(A)
        raise HypothesisViolated(
            "boundary", f"J14={m.J14}, J23={m.J23}, J13+J24={m.J13 + m.J24}")
    check_symmetry(V)


def max_deviation_from_J0(A: BoundaryMatrix, V: PotentialSpec, box: LambdaBox, grid_n: int,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """max |Delta(lambda) - J0| over the grid, with no hypothesis check."""
    j0 = minors(A).J0
    vals = characteristic_determinant_batch(A, V, box.grid(grid_n), cfg)
    return float(np.max(np.abs(vals - j0)))


def verify_theorem1(A: BoundaryMatrix, V: PotentialSpec, grid_n: int = 10,
                    box: LambdaBox = DEFAULT_BOX,
                    cfg: IntegratorConfig = DEFAULT_CONFIG) -> VerificationReport:
    """Sample Delta - J0 on a grid; passes iff the deviation is <= 1e-8 max(1, |J0|)."""
    check_theorem1_hypotheses(A, V)
    j0 = minors(A).J0
    dev = max_deviation_from_J0(A, V, box, grid_n, cfg)
    return VerificationReport("theorem1", dev, THEOREM1_TOL * max(1.0, abs(j0)), grid_n * grid_n, j0)


def verify_relations13(V: PotentialSpec, lams: Sequence[complex],
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> VerificationReport:
    """Largest deviation in the four reflected endpoint equalities of E."""
    check_symmetry(V)
    dev = max(max(reflection_defects(V, l, cfg).values()) for l in lams)
    return VerificationReport("relations13", float(dev), RELATION_TOL, len(lams))


def verify_remark2(V: PotentialSpec, lams: Sequence[complex],
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> VerificationReport:
    """Largest |s1(pi) - s2(pi)| for the solution matrix normalised at 0."""
    check_symmetry(V)
    dev = max(abs(remark2_difference(V, l, cfg)) for l in lams)
    return VerificationReport("remark2", float(dev), RELATION_TOL, len(lams))
