"""Exception and warning types shared across the package.

Every failure mode named in the public contracts maps to one of these, so
callers can distinguish bad input (DomainError and friends) from numerical
breakdown (IllConditionedError) and from missing data.
"""


class ImpedLabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ImpedLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidGeometryError(ImpedLabError, ValueError):
    """A boundary description is degenerate or self-intersecting."""


class ValidationError(ImpedLabError, ValueError):
    """A configuration violates the admissible a-priori class.

    The message lists every violated bound, one per line.
    """


class IllConditionedError(ImpedLabError, ArithmeticError):
    """A linear system or normal-equation solve lost too many digits."""


class NoDataError(ImpedLabError, ValueError):
    """An operation was asked to run on an empty sample set."""


class ReconstructionError(ImpedLabError, RuntimeError):
    """Impedance recovery failed; carries diagnostics for the report.

    Attributes
    ----------
    diagnostics : dict
        Solver state at the point of failure (residual, mask size, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class PersistenceError(ImpedLabError, ValueError):
    """A file could not be parsed; message carries location information."""


class ConsistencyError(ImpedLabError, ValueError):
    """Loaded data does not match the geometry or run it is paired with."""


class AccuracyWarning(UserWarning):
    """Result is returned but its accuracy guarantee is degraded."""


class TruncationCapWarning(UserWarning):
    """A series was cut at the representation cap before its tail decayed."""
