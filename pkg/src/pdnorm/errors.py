"""Exception hierarchy shared by all pdnorm modules.

Every failure mode that callers are expected to handle gets its own class;
the CLI maps these onto exit codes (2 for bad input, 3 for numerical
failure) and onto the ``error`` name in structured error output.
"""

from __future__ import annotations


class PdnormError(Exception):
    """Base class for all package-specific errors."""

    #: short name used in structured CLI error output
    name = "Error"


class InputError(PdnormError):
    """A precondition on the problem data is violated."""

    name = "Input"


class NotPoincareError(InputError):
    """The origin lies in (or on) the convex hull of the eigenvalues."""

    name = "NotPoincare"


class MixedSpectrumError(InputError):
    """Map eigenvalues straddle the unit circle; no contracting side."""

    name = "MixedSpectrum"


class NonInvertibleError(InputError):
    """A linear part that must be inverted is singular."""

    name = "NonInvertible"


class NearlyDefectiveError(InputError):
    """Eigenvalues cluster below the separation threshold and the matrix
    was not supplied in explicit bidiagonal Jordan form."""

    name = "NearlyDefective"


class DivisorTooSmallError(InputError):
    """A divisor classified as non-resonant falls below the safety floor,
    which signals a mis-specified spectrum."""

    name = "DivisorTooSmall"


class ContractionImpossibleError(InputError):
    """rho* + epsilon + delta >= 1, so no contraction radius exists."""

    name = "ContractionImpossible"


class NumericalError(PdnormError):
    """A computation failed to reach its requested accuracy."""

    name = "Numerical"


class StepUnderflowError(NumericalError):
    """The adaptive step size shrank below the hard floor."""

    name = "StepUnderflow"


class EscapeError(NumericalError):
    """A trajectory or iterate left the configured safe radius."""

    name = "Escape"


class NoConvergenceError(NumericalError):
    """An iteration hit its budget with the tail estimate above tolerance."""

    name = "NoConvergence"
