"""Exceptions raised by the HGM library."""

# Standard library imports
from typing import Any, List, Optional


class HgmError(Exception):
    """Base class for every error the library raises on purpose."""

    pass


class InvalidParameter(HgmError, ValueError):
    """An argument is outside its documented domain."""

    pass


class DimensionMismatch(HgmError, ValueError):
    """Shapes of the inputs do not agree."""

    pass


class ConstantColumn(HgmError):
    """A variable has zero sample variance and cannot be standardized."""

    def __init__(self, column: int) -> None:
        """Keep the offending column index."""
        super().__init__(f"column {column} has zero sample variance")
        self.column = column


class NotPositiveDefinite(HgmError, ArithmeticError):
    """A matrix expected to be positive definite failed its Cholesky factorization."""

    pass


class SingularSystem(HgmError, ArithmeticError):
    """The linear system of the Z update cannot be solved."""

    pass


class MaxIterExceeded(HgmError):
    """An iterative solver ran out of sweeps; carries its best iterate."""

    def __init__(self, message: str, *, estimate: Any = None, report: Any = None) -> None:
        """Keep the best iterate and its report."""
        super().__init__(message)
        self.estimate = estimate
        self.report = report


class ZeroDiagonal(HgmError):
    """A Gram matrix has a zero diagonal entry."""

    def __init__(self, index: int) -> None:
        """Keep the offending index."""
        super().__init__(f"diagonal entry {index} of the Gram matrix is zero")
        self.index = index


class KTooLarge(HgmError, ValueError):
    """More groups were requested than there are variables."""

    def __init__(self, k: int, p: int) -> None:
        """Keep both counts."""
        super().__init__(f"k = {k} exceeds the number of variables p = {p}")
        self.k = k
        self.p = p


class AllRestartsFailed(HgmError):
    """Every restart of the alternating solver raised."""

    def __init__(self, errors: List[HgmError]) -> None:
        """Keep the per-restart errors in restart order."""
        super().__init__(f"all {len(errors)} restarts failed; last error: {errors[-1]}")
        self.errors = errors


class AllGridPointsFailed(HgmError):
    """Every point of a tuning grid raised."""

    def __init__(self, message: str, failures: Optional[List[Any]] = None) -> None:
        """Keep the failed grid points in grid order."""
        super().__init__(message)
        self.failures = list(failures or [])


class InvalidBlockStructure(HgmError, ValueError):
    """Block-diagonal simulation parameters are inconsistent."""

    pass


class ParseError(HgmError):
    """An input file could not be parsed."""

    def __init__(self, message: str, *, location: Optional[int] = None) -> None:
        """Keep the line number (csv) or byte offset (bin)."""
        super().__init__(message if location is None else f"{message} (at {location})")
        self.location = location


class NonRectangular(HgmError):
    """A csv row has a different number of fields than the first one."""

    def __init__(self, row: int, expected: int, found: int) -> None:
        """Keep the row number and both widths."""
        super().__init__(f"row {row} has {found} fields, expected {expected}")
        self.row = row


class NonFinite(HgmError, ValueError):
    """An input value is NaN or infinite."""

    def __init__(self, row: int, column: int) -> None:
        """Keep the 1-based location of the value."""
        super().__init__(f"non-finite value at row {row}, column {column}")
        self.row = row
        self.column = column
