"""Exception types and source locations shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Location of a token in an input text (1-based line and column)."""

    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class MagistralError(Exception):
    """Base class for all engine errors."""


class ParseError(MagistralError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class ValidationError(MagistralError):
    """A program parsed but violates a semantic requirement."""

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(f"{span}: {message}" if span else message)
        self.message = message
        self.span = span


class ArityMismatch(ValidationError):
    pass


class UnsafeRule(ValidationError):
    def __init__(self, message: str, variable: str, span: SourceSpan | None = None):
        super().__init__(message, span)
        self.variable = variable


class UnstratifiedProgram(ValidationError):
    def __init__(self, message: str, cycle: tuple[str, ...], span: SourceSpan | None = None):
        super().__init__(message, span)
        self.cycle = cycle


class MixedClassification(ValidationError):
    pass


class CapacityExceeded(MagistralError):
    """A desk-scale bound (ground rules, candidate atoms, variables) was hit."""


class PreconditionFailed(MagistralError):
    """A checked precondition of a diagnostic operation does not hold."""


class Interrupted(MagistralError):
    """A timeout expired during grounding or search."""


class AnswersDisagree(MagistralError):
    """Benchmark configurations produced different answers for the same case."""
