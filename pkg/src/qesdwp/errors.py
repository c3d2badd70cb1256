"""Exception and warning types shared across the package."""


class QesError(Exception):
    """Base class for all package errors."""

    code = "qes-error"


class InvalidQesParameters(QesError, ValueError):
    code = "invalid-parameters"


class DomainError(QesError, ValueError):
    code = "domain"


class PoleCollision(QesError, ArithmeticError):
    """A root came within the guard distance of a pole of the Bethe equations."""

    code = "pole-collision"


class Unsupported(QesError, NotImplementedError):
    code = "unsupported"


class IndexOutOfRange(QesError, IndexError):
    code = "index-out-of-range"


class DegenerateNullspace(QesError, ArithmeticError):
    """The pencil has a numerically multi-dimensional nullspace at the requested root."""

    code = "degenerate-nullspace"

    def __init__(self, message, basis=None):
        super().__init__(message)
        self.basis = basis


class MethodDisagreement(QesError):
    code = "method-disagreement"


class IncompleteEnumeration(UserWarning):
    """Fewer Bethe configurations were found than the level count predicts."""

    def __init__(self, expected, found, message=None):
        self.expected = expected
        self.found = found
        super().__init__(message or f"found {found} of {expected} expected configurations")


class RootCountMismatch(UserWarning):
    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"found {found} of {expected} real determinant roots")


class GridMarginWarning(UserWarning):
    pass
