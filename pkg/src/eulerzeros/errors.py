"""Exception hierarchy shared by every module."""


class EulerZerosError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EulerZerosError, ValueError):
    pass


class BranchCut(DomainError):
    """Argument lies on the branch cut (real axis, <= 0)."""


class BudgetExceeded(EulerZerosError, ArithmeticError):
    """A series or continued fraction did not converge within its term budget."""


class ResourceError(EulerZerosError):
    pass


class TableTooSmall(EulerZerosError, ValueError):
    pass


class ParseError(EulerZerosError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MonotonicityError(EulerZerosError, ValueError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class OutOfRange(EulerZerosError, IndexError):
    pass


class NoRootInWindow(EulerZerosError):
    pass


class AlignmentError(EulerZerosError, ValueError):
    pass


class EmptySample(EulerZerosError, ValueError):
    pass


class SingularFit(EulerZerosError, ValueError):
    pass


class InsufficientData(EulerZerosError, ValueError):
    pass
