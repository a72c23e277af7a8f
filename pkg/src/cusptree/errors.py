"""Exception hierarchy shared by every module."""


class CuspTreeError(Exception):
    """Base class for all errors raised by the package."""


class InputError(CuspTreeError, ValueError):
    """Malformed or out-of-range input (unknown vertex, bad word, bad file)."""


class DomainError(CuspTreeError, ValueError):
    """Input is well formed but outside the mathematical domain of the operation."""


class UnsupportedFamilyError(CuspTreeError):
    """The group family cannot decide the requested membership question."""


class BudgetError(CuspTreeError):
    """An exhaustive search would exceed its fixed budget."""
