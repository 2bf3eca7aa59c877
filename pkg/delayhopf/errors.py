"""Exception hierarchy for delayhopf."""

from typing import Optional


class DelayHopfError(Exception):
    """Base class for every error raised by delayhopf."""


class DegenerateParameters(DelayHopfError):
    """Parameters hit a division by zero in the closed-form analysis."""


class NoCrossing(DelayHopfError):
    """No purely imaginary characteristic root exists for any delay."""


class BranchFailure(DelayHopfError):
    """Neither arccos branch of a critical delay satisfies the characteristic equation."""


class DegenerateCrossing(DelayHopfError):
    """h'(z0) vanishes, so the crossing cannot be shown to be simple."""


class ContourOnRoot(DelayHopfError):
    """A characteristic root sits on the counting contour after all perturbations."""


class NonIntegerWinding(DelayHopfError):
    """The winding integral did not settle on an integer."""


class LostRoot(DelayHopfError):
    """Newton continuation could not follow a root in the delay."""


class StepTooLarge(DelayHopfError):
    """Integration step is too large for the method of steps."""


class NonFiniteState(DelayHopfError):
    """The numerical solution left the finite range."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class OutOfRange(DelayHopfError):
    """A trajectory was sampled outside the computed window."""


class TooShort(DelayHopfError):
    """A trajectory is too short for envelope or period analysis."""


class ConsistencyFailure(DelayHopfError):
    """Two independent computations disagree."""


class ValidationError(DelayHopfError, ValueError):
    """A value violates a documented invariant."""

    def __init__(self, message: str, field: Optional[str] = None):
        if field is not None and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class ParseError(DelayHopfError):
    """A scenario or report file could not be parsed."""

    def __init__(
        self, message: str, line: Optional[int] = None, field: Optional[str] = None
    ):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.line = line
        self.field = field
