"""Shared exception types."""


class EngineError(Exception):
    """Base class for engine failures."""


class MismatchedInstance(EngineError):
    """Operands belong to different instances."""


class InvalidInstance(EngineError):
    """Instance bounds or poset laws are violated."""


class FiberExhausted(EngineError):
    """No admissible partner fiber remains; the instance is too small."""


class StageViolation(EngineError):
    """A name uses cells above its declared stage."""


class ParseError(EngineError):
    """Malformed spec or formula text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
