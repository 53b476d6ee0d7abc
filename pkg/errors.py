"""Exception types shared by the library and the CLI."""


class FksumError(Exception):
    """Base class for errors raised by fksum."""

    exit_code = 1


class InputError(FksumError, ValueError):
    """Invalid argument or input data."""

    exit_code = 2


class NumericError(FksumError, ArithmeticError):
    """A computation failed numerically (rank deficiency, non-finite values)."""

    exit_code = 3
