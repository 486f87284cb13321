"""Shared exception and warning types."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition.

    Carries an optional list of human-readable rejection reasons so callers
    (notably the command line) can print a full report instead of the first
    failure only.
    """

    def __init__(self, message, reasons=None):
        super().__init__(message)
        self.reasons = list(reasons) if reasons is not None else [message]


class LedgerInequalityError(RuntimeError):
    """Raised when the discrete energy ledger violates its inequality.

    The offending row index and the two sides of the inequality are attached
    so the failure is reproducible from the report alone.
    """

    def __init__(self, message, row_index, lhs, rhs):
        super().__init__(message)
        self.row_index = row_index
        self.lhs = lhs
        self.rhs = rhs


class KernelResolutionWarning(UserWarning):
    """Kernel width sqrt(h) is below twice the grid spacing."""
