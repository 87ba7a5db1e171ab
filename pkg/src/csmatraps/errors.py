"""Exception types raised across the package."""


class CsmaTrapsError(Exception):
    """Base class for all package errors."""


class ParseError(CsmaTrapsError):
    """Graph text is not well-formed JSON of the expected shape."""


class ValidationError(CsmaTrapsError):
    """Graph content violates a structural rule (self-loop, duplicate edge, size)."""


class InvalidSize(ValidationError):
    pass


class InvalidParameter(CsmaTrapsError, ValueError):
    pass


class UnknownLink(CsmaTrapsError, IndexError):
    pass


class StateSpaceTooLarge(CsmaTrapsError):
    pass


class ColumnOutOfRange(CsmaTrapsError, IndexError):
    pass


class LevelOutOfRange(CsmaTrapsError, IndexError):
    pass


class SingularSystem(CsmaTrapsError):
    pass


class NestedTraps(CsmaTrapsError):
    """The two traps overlap; their passage time is defined to be zero."""


class InvalidConfig(CsmaTrapsError, ValueError):
    pass


class InsufficientSamples(CsmaTrapsError):
    def __init__(self, count: int, required: int):
        super().__init__(f"only {count} samples collected, need at least {required}")
        self.count = count
        self.required = required
