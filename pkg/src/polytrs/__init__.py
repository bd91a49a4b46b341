"""Complexity certification toolkit for first-order constructor rewriting.

The package parses rewrite programs over constructor terms, evaluates them
under plain and memoising call-by-value semantics, checks product path
ordering termination and quasi-interpretations, blinds word programs, and
measures or certifies polynomial-time bounds.
"""

from .base import (
    Budget,
    BudgetExceeded,
    CycleDetected,
    NoMatchingEquation,
    NonConfluentProgram,
    NormalizationError,
    NotWordProgram,
    ParseError,
    PrecedenceError,
    QiError,
    SignatureError,
    TrsError,
)
from .parser import format_program, parse_program, parse_term
from .terms import (
    App,
    Equation,
    Program,
    Symbol,
    Term,
    Var,
    apply_subst,
    match,
    matching_equations,
    term_depth,
    term_size,
)

__version__ = "0.1.0"

__all__ = [
    "App",
    "Budget",
    "BudgetExceeded",
    "CycleDetected",
    "Equation",
    "NoMatchingEquation",
    "NonConfluentProgram",
    "NormalizationError",
    "NotWordProgram",
    "ParseError",
    "PrecedenceError",
    "Program",
    "QiError",
    "SignatureError",
    "Symbol",
    "Term",
    "TrsError",
    "Var",
    "apply_subst",
    "format_program",
    "match",
    "matching_equations",
    "parse_program",
    "parse_term",
    "term_depth",
    "term_size",
]
