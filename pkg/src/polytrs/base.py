"""Shared error taxonomy and evaluation budgets."""

from __future__ import annotations

from dataclasses import dataclass


class TrsError(Exception):
    """Base class for all toolkit errors; `code` is machine-readable."""

    code = "error"


class ParseError(TrsError):
    code = "parse-error"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


class SignatureError(TrsError):
    code = "signature-error"


class NoMatchingEquation(TrsError):
    code = "no-matching-equation"


class BudgetExceeded(TrsError):
    code = "budget-exceeded"


class NonConfluentProgram(TrsError):
    code = "non-confluent-program"


class CycleDetected(TrsError):
    code = "cycle-detected"


class NotWordProgram(TrsError):
    code = "not-word-program"


class NormalizationError(TrsError):
    code = "normalization-error"


class PrecedenceError(TrsError):
    code = "precedence-error"


class QiError(TrsError):
    code = "qi-error"


@dataclass(frozen=True)
class Budget:
    """Caps on evaluation effort.

    max_rules bounds the judgement count of a single derivation, max_depth
    the nesting of function activations, and max_derivations the number of
    derivations an exhaustive enumeration may emit.
    """

    max_rules: int = 200_000
    max_depth: int = 2_000
    max_derivations: int = 5_000

    def spent(self, rules: int, depth: int) -> bool:
        return rules > self.max_rules or depth > self.max_depth


DEFAULT_BUDGET = Budget()
