"""Exception types raised across the package.

All of them derive from ``ValueError`` so callers that only care about bad
input can catch one thing.
"""


class RcsError(ValueError):
    pass


class EmptyInput(RcsError):
    pass


class InsufficientSamples(RcsError):
    pass


class ShapeMismatch(RcsError):
    pass


class NotPositiveDefinite(RcsError):
    pass


class InvalidArgument(RcsError):
    pass


class AbsentClass(RcsError):
    pass


class ParseError(RcsError):
    def __init__(self, row: int, col: int, message: str = ""):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col}: {message}".rstrip(": "))
