"""Exception hierarchy shared by all solver modules.

The CLI maps these onto process exit codes: parameter problems exit with 2,
numerical failures with 3 and I/O trouble with 4.
"""


class DampedWaveError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(DampedWaveError):
    """Invalid or inconsistent input parameters."""

    exit_code = 2


class NumericalError(DampedWaveError):
    """A numerical routine failed to converge or produced garbage."""

    exit_code = 3


class OutputError(DampedWaveError):
    """Result files could not be written."""

    exit_code = 4


class ContourInaccurate(NumericalError):
    """Contour quadrature did not land close enough to an integer count."""


class ContourHitsSpectrum(NumericalError):
    """A quadrature node is (numerically) on the spectrum of the pencil."""


class OutOfBasin(NumericalError):
    """Nonlinear eigenvalue refinement left the basin of the seeded root."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class WindowTooSmall(ParameterError):
    """The probed window contains points where the WKB amplitude is <= 0."""


class UnderResolved(NumericalError):
    """A quasimode grid would violate the resolution rules within budget."""


class HypothesisViolated(ParameterError):
    """Input coefficients do not satisfy the assumptions of a construction."""
