"""Probabilistic layer: per-cell run measures, epsilon-acceptability and the
acc-guarded characterization.  All masses are exact fractions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .logic.evaluator import EvalContext, check_valid
from .logic.theorems import (
    EquivalenceReport,
    _first_invalid,
    _record,
    common_schema,
    everyone_schema,
    realized_t_prefixes,
    temporal_schema,
    with_prior,
)
from .logic.formula import Acc, InitGeq
from .model import Interpretation, InterpretedSystem
from .properties import check_acceptability


@dataclass(frozen=True)
class CellMass:
    cell: str
    acceptable_mass: Fraction
    runs: int
    acceptable_runs: int


@dataclass(frozen=True)
class EpsAcceptabilityReport:
    holds: bool
    eps: Fraction
    cells: tuple[CellMass, ...]

    def __bool__(self):
        return self.holds


def acceptable_runs(sys: InterpretedSystem, T: int, delta: int) -> tuple[bool, ...]:
    return tuple(check_acceptability(run, T, delta).holds for run in sys.runs)


def check_eps_acceptability(sys: InterpretedSystem, T: int, delta: int, eps) -> EpsAcceptabilityReport:
    """Every cell puts mass at least ``1 - eps`` on acceptable runs."""
    eps = Fraction(eps)
    ok = acceptable_runs(sys, T, delta)
    cells = []
    for name, cell in zip(sys.cell_names, sys.cells):
        mass = sum((sys.weights[r] for r in cell if ok[r]), Fraction(0))
        cells.append(CellMass(name, mass, len(cell), sum(ok[r] for r in cell)))
    return EpsAcceptabilityReport(all(c.acceptable_mass >= 1 - eps for c in cells), eps, tuple(cells))


def build_acceptable_interpretation(sys: InterpretedSystem, T: int, delta: int) -> InterpretedSystem:
    """Same runs, with ``acc`` true exactly on the acceptable runs."""
    i = sys.interpretation
    return sys.with_interpretation(Interpretation(T, i.props, acceptable_runs(sys, T, delta)))


def check_acc_constant(sys: InterpretedSystem) -> bool:
    """An acceptable interpretation gives acc one value along each run; runs
    carry a single flag here, so this only checks that acc is interpreted."""
    return sys.interpretation.acc is not None and len(sys.interpretation.acc) == len(sys.runs)


def check_theorem5(sys: InterpretedSystem, T: int, delta: int, eps) -> EquivalenceReport:
    """(a) eps-acceptability; (b)-(d) validity of the prior-and-acc-guarded
    schemas under the canonical acc (acceptable runs).

    If (a) fails no acc can satisfy (b), so checking the canonical acc decides
    the existential in (b)-(d).
    """
    eps = Fraction(eps)
    base = build_acceptable_interpretation(sys, T, delta)
    ctx = EvalContext(base)
    rep = EquivalenceReport("theorem5", {})
    a = check_eps_acceptability(sys, T, delta, eps)
    rep.conditions["a"] = a.holds
    if not a.holds:
        rep.counterexamples["a"] = [
            {"cell": c.cell, "acceptable_mass": str(c.acceptable_mass)} for c in a.cells if c.acceptable_mass < 1 - eps
        ]
    alpha = 1 - eps
    Xs = realized_t_prefixes(base, T)
    agents = base.agents
    _record(rep, "b", _first_invalid(ctx, (
        with_prior(temporal_schema(i, j, X, delta, guard_acc=True), alpha) for X in Xs for i in agents for j in agents
    )))
    _record(rep, "c", _first_invalid(ctx, (with_prior(everyone_schema(X, delta, guard_acc=True), alpha) for X in Xs)))
    _record(rep, "d", _first_invalid(ctx, (with_prior(common_schema(X, delta, guard_acc=True), alpha) for X in Xs)))
    rep.notes.append("cell masses: " + ", ".join(f"{c.cell}={c.acceptable_mass}" for c in a.cells))
    return rep


def prior_acc_valid(sys_with_acc: InterpretedSystem, eps) -> bool:
    """Validity of ``init>=(1-eps) acc``."""
    return check_valid(EvalContext(sys_with_acc), InitGeq(1 - Fraction(eps), Acc())).valid
