"""Exception hierarchy shared by every csdis module."""


class CsdisError(Exception):
    """Base class for all csdis errors."""

    exit_code = 1


class ConfigError(CsdisError, ValueError):
    exit_code = 2


class ShapeError(ConfigError):
    """Array shapes or sample layouts are inconsistent."""


class SpecError(ConfigError):
    """A decoder specification has an inconsistent shape chain or bad parameters."""


class InputError(CsdisError, ValueError):
    """Input data contains non-finite values."""

    exit_code = 3


class NumericalError(CsdisError, ArithmeticError):
    exit_code = 3


class DegenerateInput(NumericalError):
    """A statistic is undefined for the given input (e.g. zero variance)."""


class FormatError(CsdisError):
    """Malformed CSTD file. ``offset`` is the byte position where parsing failed."""

    exit_code = 4

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
