"""Mechanized characterization: acceptability versus the temporal, E_H and
C_H formula schemas, checked exhaustively on a finite system."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..model import InterpretedSystem, Point
from ..properties import check_acceptability
from .evaluator import EvalContext, check_valid
from .formula import (
    Acc,
    And,
    Box,
    C,
    E,
    Formula,
    Honest,
    HonestSelf,
    Implies,
    InitGeq,
    Next,
    TPrefix,
    TPrefixSelf,
    YOp,
)


def realized_t_prefixes(sys: InterpretedSystem, T: int) -> list[tuple[str, ...]]:
    """Maximal T-prefixes of every ledger held at any point.

    Only a T-prefix of some held ledger can make the schemas' antecedents
    true, and failure for a shorter prefix implies failure for the maximal
    one it extends.
    """
    found = set()
    for run in sys.runs:
        for state in run.states:
            for s in state.local_states:
                found.add(s.ledger.max_t_prefix(T).ids())
    return sorted(found, key=lambda x: (len(x), x))


def all_t_prefixes(sys: InterpretedSystem, T: int) -> list[tuple[str, ...]]:
    """Every T-prefix (not just maximal ones) of held ledgers; for cross-checks."""
    found = set()
    for X in realized_t_prefixes(sys, T):
        for n in range(len(X) + 1):
            found.add(X[:n])
    return sorted(found, key=lambda x: (len(x), x))


def temporal_schema(i: str, j: str, X, delta: int, guard_acc: bool = False) -> Formula:
    ante: Formula = And(Honest(i), TPrefix(tuple(X), i))
    if guard_acc:
        ante = And(ante, Acc())
    return Implies(ante, Next(delta, Box(Implies(Honest(j), TPrefix(tuple(X), j)))))


def everyone_schema(X, delta: int, guard_acc: bool = False) -> Formula:
    ante: Formula = And(HonestSelf(), TPrefixSelf(tuple(X)))
    if guard_acc:
        ante = And(ante, Acc())
    return Implies(ante, Next(delta, Box(E(TPrefixSelf(tuple(X)), "H", guard_acc))))


def common_schema(X, delta: int, guard_acc: bool = False) -> Formula:
    ante: Formula = And(HonestSelf(), TPrefixSelf(tuple(X)))
    if guard_acc:
        ante = And(ante, Acc())
    return Implies(ante, C(TPrefixSelf(tuple(X)), "H", YOp(delta, True), guard_acc))


def with_prior(f: Formula, alpha) -> Formula:
    return And(InitGeq(alpha, Acc()), f)


@dataclass
class EquivalenceReport:
    name: str
    conditions: dict[str, bool]
    counterexamples: dict[str, object] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return len(set(self.conditions.values())) == 1

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "conditions": dict(self.conditions),
            "agree": self.agree,
            "counterexamples": {k: _plain(v) for k, v in self.counterexamples.items()},
            "notes": list(self.notes),
        }


def _plain(v):
    if isinstance(v, Point):
        return {"run": v.run, "time": v.time, "agent": v.agent}
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _first_invalid(ctx: EvalContext, formulas):
    for f in formulas:
        rep = check_valid(ctx, f)
        if not rep.valid:
            return f, rep.counterexample
    return None


def _record(report: EquivalenceReport, key: str, failure):
    report.conditions[key] = failure is None
    if failure is not None:
        f, pt = failure
        report.counterexamples[key] = {"formula": str(f), "point": _plain(pt)}


def check_theorem4(sys: InterpretedSystem, T: int, delta: int, ctx: EvalContext | None = None) -> EquivalenceReport:
    sys = sys.with_T(T) if sys.T != T else sys
    ctx = ctx if ctx is not None and ctx.system is sys else EvalContext(sys)
    rep = EquivalenceReport("theorem4", {})
    bad = next(((k, r) for k, run in enumerate(sys.runs) if not (r := check_acceptability(run, T, delta))), None)
    rep.conditions["a"] = bad is None
    if bad is not None:
        k, r = bad
        rep.counterexamples["a"] = {"run": k, "witness": list(r.witness)}
    Xs = realized_t_prefixes(sys, T)
    agents = sys.agents
    _record(rep, "b", _first_invalid(ctx, (temporal_schema(i, j, X, delta) for X in Xs for i in agents for j in agents)))
    _record(rep, "c", _first_invalid(ctx, (everyone_schema(X, delta) for X in Xs)))
    _record(rep, "d", _first_invalid(ctx, (common_schema(X, delta) for X in Xs)))
    if not rep.conditions["a"]:
        rep.notes.append("system is not acceptable")
    return rep
