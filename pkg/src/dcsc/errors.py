"""Exception hierarchy shared across the package."""


class DcscError(Exception):
    """Base class for all package errors."""


class DimensionError(DcscError, ValueError):
    pass


class NearSingularError(DcscError, ArithmeticError):
    """A factorization pivot fell below its floor.

    ``column`` is the failing column in the *permuted* order and
    ``original_column`` maps it back to the caller's numbering.
    """

    def __init__(self, message: str, column: int = -1, original_column: int = -1):
        super().__init__(message)
        self.column = column
        self.original_column = original_column


class ParseError(DcscError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CaseError(DcscError, ValueError):
    """Invalid grid case (disconnected network, bad reference bus, ...)."""


class MergeError(DcscError, ValueError):
    pass


class ContractError(DcscError, ValueError):
    """A caller violated an operation precondition."""
