"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class DiracSpecError(Exception):
    """Base class for every error raised by this package."""


class RankDeficient(DiracSpecError, ValueError):
    """The two rows of the boundary matrix are linearly dependent."""


class OutOfDomain(DiracSpecError, ValueError):
    """A point lies outside the interval [0, pi]."""


class PotentialError(DiracSpecError, ValueError):
    """A potential description is malformed (bad pieces, bad terms)."""


class ToleranceNotMet(DiracSpecError, RuntimeError):
    """The integrator could not reach the requested accuracy."""


class ZeroOnContour(DiracSpecError, RuntimeError):
    """The characteristic determinant (nearly) vanishes on a counting contour."""


class IdenticallyZero(DiracSpecError, RuntimeError):
    """The characteristic determinant vanishes identically."""


class NoConvergence(DiracSpecError, RuntimeError):
    """Newton refinement did not converge."""


class HypothesisViolated(DiracSpecError, ValueError):
    """A hypothesis of the vanishing-perturbation theorem does not hold.

    ``hypothesis`` is ``"boundary"`` for the minor conditions
    J14 = J23 = J13 + J24 = 0 and ``"symmetry"`` for the potential
    conditions p(pi - x) = -p(x), q(pi - x) = q(x).
    """

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        self.detail = detail
        msg = f"hypothesis violated: {hypothesis}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SymbolMismatch(DiracSpecError, ValueError):
    """Polynomials over different symbol sets were combined."""


class ConfigError(DiracSpecError, ValueError):
    """A problem configuration file failed validation."""
