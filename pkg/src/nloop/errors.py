"""Exception hierarchy shared by all modules."""


class NloopError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class InputError(NloopError):
    exit_code = 2


class ResourceLimit(NloopError):
    exit_code = 3


class NotInZ(InputError):
    pass


class NonUnit(NloopError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class Malformed(InputError):
    pass


class SiteNotFound(NloopError):
    pass


class MissingDelta(NloopError):
    pass


class UnsupportedLabel(NloopError):
    pass


class SkeletonMismatch(NloopError):
    pass


class TooLarge(ResourceLimit):
    pass


class MissingLine(NloopError):
    pass


class NotInSpace(NloopError):
    pass


class ShapeMismatch(InputError):
    pass


class Singular(NloopError):
    pass


class NormalizationFailure(NloopError):
    pass


class PPartViolation(NloopError):
    pass


class InsufficientNu(NloopError):
    pass


class NonUnitConstant(NloopError):
    pass


class UnexpandedLabel(NloopError):
    pass
