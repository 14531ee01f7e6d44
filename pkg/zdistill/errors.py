"""
Exception hierarchy for zdistill.

Every error raised by the library derives from ZDistillError and from the
closest builtin, so callers can catch either.
"""

from typing import List, Optional, Tuple


class ZDistillError(Exception):
    """Base class for all zdistill errors."""


class InvariantViolationError(ZDistillError, ValueError):
    """A value does not satisfy the invariants of its type."""


class NonDiagonalizableError(ZDistillError, ArithmeticError):
    """The operator has no complete biorthogonal eigenbasis."""


class ProtocolParseError(ZDistillError, ValueError):
    """
    Protocol text could not be parsed.

    Carries every problem found in one pass as ``(line, message)`` pairs;
    line 0 refers to the program as a whole.
    """

    def __init__(self, errors: List[Tuple[int, str]]):
        self.errors = list(errors)
        lines = [f"line {line}: {msg}" if line else msg for line, msg in self.errors]
        super().__init__("; ".join(lines))


class CompileError(ZDistillError, ValueError):
    """A parsed program references labels the model does not define."""


class YieldUnderflowError(ZDistillError, ArithmeticError):
    """The post-selection probability dropped below representable range."""

    def __init__(self, message: str, last_valid_n: int):
        self.last_valid_n = last_valid_n
        super().__init__(message)


class PreconditionError(ZDistillError, ValueError):
    """An operation was called outside its documented domain."""


class ConditionNotMetError(PreconditionError):
    """The cavity resonance condition sin(g_A t_A) = +-1 does not hold."""


class NonUniqueDominantError(ZDistillError, ArithmeticError):
    """The dominant eigenvalue is degenerate in magnitude."""


class InternalConsistencyError(ZDistillError, AssertionError):
    """Two independent evaluations of the same quantity disagree."""


class ConfigError(ZDistillError, ValueError):
    """A run configuration is malformed or inconsistent."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        self.errors = list(errors or [])
        super().__init__(message if not self.errors else f"{message}: " + "; ".join(self.errors))
