"""Exception taxonomy shared across the package.

The CLI maps these onto distinct exit codes (see `qplab.cli`).
"""


class QplabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QplabError, ValueError):
    """Invalid configuration: bad parameter ranges, dimension mismatches,
    rational frequencies, malformed config files."""


class InvalidInputError(QplabError, ValueError):
    """Structurally invalid numerical input, e.g. a potential whose Fourier
    coefficients violate the reality constraint."""


class UnsupportedOperationError(QplabError, NotImplementedError):
    """Requested operation is outside the supported parameter domain."""


class ResourceLimitError(QplabError, RuntimeError):
    """A configured resource cap (matrix dimension, memory) was exceeded."""


class EnergyRangeError(QplabError, ValueError):
    """Energy argument falls outside a table's valid grid range."""


class SingularDensityError(QplabError, ArithmeticError):
    """Density-of-states derivative below the configured floor where a
    velocity symbol 1/(pi N') is required."""


class DegenerateFrameError(QplabError, ArithmeticError):
    """Bloch frame degenerate: vanishing Wronskian-type constant or a
    singular conjugation sample."""


class HorizonError(QplabError, RuntimeError):
    """A lattice shift or evolution pushed significant amplitude into the
    truncation boundary."""
