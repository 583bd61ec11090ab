"""Exception hierarchy used across the package."""


class XcpotError(Exception):
    """Base class for all package errors."""


class GridParameterError(XcpotError, ValueError):
    """Invalid grid construction parameters."""


class ShapeError(XcpotError, ValueError):
    """Array does not live on the expected grid."""


class EigensolverError(XcpotError, RuntimeError):
    """The eigensolver failed or could not certify the lowest states."""


class OrbitalError(XcpotError, ValueError):
    """Orbital set violates orthonormality or related invariants."""


class DegenerateDensityError(XcpotError, ArithmeticError):
    """The density-weighted overlap operator has an unexpected kernel.

    Raised when the density splits into disconnected pieces so that the
    KLI or ELP linear systems lose uniqueness beyond the constant shift.
    """


class GapAssumptionError(XcpotError, ArithmeticError):
    """The HOMO/LUMO gap is too small for the OEP linear response."""


class InvariantBreach(XcpotError, AssertionError):
    """A computed quantity violates a hard mathematical bound."""


class UsageError(XcpotError, ValueError):
    """Bad command-line or configuration input."""
