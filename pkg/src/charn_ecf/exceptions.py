class CharnError(Exception):
    """Base class for errors raised by charn_ecf."""


class DivergenceError(CharnError):
    """A simulated recursion produced a non-finite state."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class DegenerateTruncationError(CharnError):
    """Too few observations survive the truncation weights."""


class SeriesTooShortError(CharnError):
    """The series cannot support the requested estimation or test."""


class DegenerateDataError(CharnError, ValueError):
    """The data have no spread, so a scale-based quantity is undefined."""
