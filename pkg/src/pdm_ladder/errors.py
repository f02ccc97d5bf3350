"""Exception hierarchy."""


class PDMError(Exception):
    """Base class for errors raised by this package."""


class ParseError(PDMError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(PDMError, ArithmeticError):
    """An expression was evaluated outside its domain of definition."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class PositivityError(PDMError, ValueError):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class GridError(PDMError, ValueError):
    pass


class NonFiniteError(PDMError, ValueError):
    def __init__(self, message, index=None, x=None):
        super().__init__(message)
        self.index = index
        self.x = x


class InsufficientDomainError(PDMError):
    """A state does not decay to the boundary tolerance on the grid."""

    def __init__(self, message, level=None, boundary=None, suggested=None):
        super().__init__(message)
        self.level = level
        self.boundary = boundary
        self.suggested = suggested


class OrderingError(PDMError, ValueError):
    pass
