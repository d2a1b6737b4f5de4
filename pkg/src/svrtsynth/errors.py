"""Exception hierarchy shared by all modules."""


class SVRTError(Exception):
    """Base class for every error raised by this package."""


class GenerationExhausted(SVRTError):
    """No simple contour could be produced within the retry budget."""


class PlacementError(SVRTError):
    pass


class PlacementExhausted(PlacementError):
    """Rejection sampling ran out of attempts."""


class PlacementOutOfBounds(PlacementError):
    pass


class SeparationViolation(PlacementError):
    """Two contours that must stay apart are closer than one background pixel."""

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class UnknownProblem(SVRTError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class AmbiguousRule(SVRTError):
    """Ground truth satisfies neither or both category rules."""


class ParseError(SVRTError, ValueError):
    def __init__(self, msg, line, column):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class TooManyShapes(SVRTError, ValueError):
    pass


class DegenerateInput(SVRTError, ValueError):
    pass


class DimensionMismatch(SVRTError, ValueError):
    pass


class MalformedProgram(SVRTError, ValueError):
    pass


class NoProgramFound(SVRTError):
    pass


class DomainError(SVRTError, ValueError):
    pass
