"""Epistemic-temporal logic: formulas, parser, evaluator, equivalence checks."""

from .evaluator import (
    EvalContext,
    PerspectiveRequired,
    UnknownProposition,
    ValidityReport,
    check_valid,
    eval_common,
    eval_formula,
    iterated_common,
    reachable_set,
)
from .formula import *  # noqa: F401,F403
from .parser import ParseError, parse_formula, to_text
from .theorems import EquivalenceReport, check_theorem4

__all__ = [
    "EvalContext",
    "EquivalenceReport",
    "ParseError",
    "PerspectiveRequired",
    "UnknownProposition",
    "ValidityReport",
    "check_theorem4",
    "check_valid",
    "eval_common",
    "eval_formula",
    "iterated_common",
    "parse_formula",
    "reachable_set",
    "to_text",
]
