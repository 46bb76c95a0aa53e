"""Exception hierarchy shared by every layer of the package.

Each class carries an ``exit_code`` so the command line front end can map
failures to distinct process exit statuses without a lookup table.
"""

from __future__ import annotations


class EsavError(Exception):
    """Base class for all package errors."""

    exit_code = 10


class InvalidArgumentError(EsavError, ValueError):
    """Shapes, grids or parameters do not fit together."""

    exit_code = 11


class SingularOperatorError(EsavError, ZeroDivisionError):
    """A shifted Fourier multiplier vanishes at some wavenumber."""

    exit_code = 12

    def __init__(self, message: str, wavenumber: tuple[float, float] | None = None):
        super().__init__(message)
        self.wavenumber = wavenumber


class OverflowGuardError(EsavError, OverflowError):
    """An exponent argument left the representable range of ``exp``."""

    exit_code = 13


class ExtrapolationDegenerateError(EsavError):
    """The extrapolated auxiliary ratio of the Crank-Nicolson step is not positive."""

    exit_code = 14


class InvalidShiftError(EsavError, ValueError):
    """``E1 + C`` is not positive, so the square-root variable is undefined."""

    exit_code = 15


class DegenerateReductionError(EsavError):
    """The scalar pivot of the SAV elimination vanished."""

    exit_code = 16


class IterationLimitError(EsavError):
    """An inner iterative solver did not reach its tolerance."""

    exit_code = 17

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ConfigError(EsavError):
    """A configuration file or override could not be parsed or validated."""

    exit_code = 20

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line


class InvariantViolation(EsavError):
    """A run finished but an energy or mass monitor reported a failure."""

    exit_code = 30
