"""Exception types raised across the package."""


class FoldcapError(Exception):
    """Base class for all package errors."""


class InvalidState(FoldcapError, ValueError):
    pass


class OutOfRange(FoldcapError, ValueError):
    pass


class NegativeCapacitance(FoldcapError, ValueError):
    pass


class Singular(FoldcapError, ValueError):
    pass


class NegativeRadicand(FoldcapError, ValueError):
    pass


class ShortCircuit(FoldcapError):
    pass


class RangeViolation(FoldcapError, ValueError):
    pass


class EmptyRecording(FoldcapError, ValueError):
    pass


class TooShort(FoldcapError, ValueError):
    pass


class Misaligned(FoldcapError, ValueError):
    pass


class InsufficientSessions(FoldcapError, ValueError):
    pass


class ParseError(FoldcapError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ChannelCountMismatch(ParseError):
    pass


class MissingMarker(FoldcapError, KeyError):
    pass


class NoOverlap(FoldcapError, ValueError):
    pass


class WeakCorrelation(UserWarning):
    """Alignment peak below threshold; the best offset is still returned."""


class ShapeMismatch(FoldcapError, ValueError):
    pass


class Diverged(FoldcapError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class VersionMismatch(FoldcapError):
    pass


class CorruptFile(FoldcapError):
    pass


class DegenerateInput(FoldcapError, ValueError):
    pass


class Infeasible(FoldcapError, ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(FoldcapError, ValueError):
    pass
