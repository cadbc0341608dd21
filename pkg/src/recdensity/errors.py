"""Exception hierarchy shared by the library and the command line."""


class RecDensityError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ParseError(RecDensityError, ValueError):
    exit_code = 2


class PrecisionError(RecDensityError, ArithmeticError):
    """The requested answer cannot be certified at the working precision."""

    exit_code = 3


class UndecidableError(PrecisionError):
    """A sign or modulus comparison fell inside the error radius."""


class DomainError(RecDensityError, ValueError):
    exit_code = 4


class ResourceError(RecDensityError, MemoryError):
    exit_code = 5

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
