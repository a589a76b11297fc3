"""Agent-relative satisfaction over a finite interpreted system.

A point is ``(run, time)``; evaluation also carries a perspective agent that
only matters for ``Honest`` / ``tprefix(.., L)``.  ``K_j`` switches the
perspective to ``j``.  Times past the horizon clamp to it.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from ..model import InterpretedSystem, MissingAcc, Point, is_t_prefix
from .formula import (
    Acc,
    And,
    B,
    Bottom,
    Box,
    C,
    E,
    Formula,
    Honest,
    HonestSelf,
    Implies,
    InitGeq,
    K,
    Next,
    Not,
    Or,
    Prop,
    Top,
    TPrefix,
    TPrefixSelf,
    YOp,
    needs_perspective,
    uses_acc,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class PerspectiveRequired(ValueError):
    pass


class UnknownProposition(KeyError):
    pass


Triple = tuple[int, int, str]


class EvalContext:
    """Evaluation state over one immutable system.

    ``common_perspective``: ``"witness"`` evaluates the argument of ``C`` at a
    reached point from the agent that witnessed the last step; ``"none"``
    evaluates it without a perspective.
    """

    def __init__(self, system: InterpretedSystem, memo: bool = True, common_perspective: str = "witness"):
        if common_perspective not in ("witness", "none"):
            raise ValueError("common_perspective must be 'witness' or 'none'")
        self.system = system
        self.use_memo = memo
        self.common_perspective = common_perspective
        self.memo: dict[tuple, bool] = {}
        self._persp: dict[Formula, bool] = {}
        self._step_cache: dict[tuple, frozenset[Triple]] = {}
        self._reach_cache: dict[tuple, frozenset[Triple]] = {}
        self.vacuous: set[tuple] = set()
        acc = system.interpretation.acc
        if acc is not None:
            # acceptable interpretations: acc is a property of whole runs
            if len(acc) != len(system.runs):
                raise MissingAcc("acc must assign one value per run")

    # -- helpers -----------------------------------------------------------

    def _needs(self, f: Formula) -> bool:
        v = self._persp.get(f)
        if v is None:
            v = self._persp[f] = needs_perspective(f)
        return v

    def y_times(self, y: YOp, m: int) -> range:
        M = self.system.horizon
        if y.steps is None:
            return range(m, m + 1)
        t = min(m + y.steps, M)
        return range(t, M + 1) if y.box else range(t, t + 1)

    # -- satisfaction ------------------------------------------------------

    def eval(self, f: Formula, r: int, m: int, agent: str | None = None) -> bool:
        m = self.system.clamp(m)
        if not self._needs(f):
            agent = None
        if not self.use_memo:
            return self._eval(f, r, m, agent)
        key = (f, r, m, agent)
        v = self.memo.get(key)
        if v is None:
            v = self.memo[key] = self._eval(f, r, m, agent)
        return v

    def _eval(self, f: Formula, r: int, m: int, agent: str | None) -> bool:
        sysm = self.system
        run = sysm.runs[r]
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Honest):
            return run.honest(f.agent, m)
        if isinstance(f, TPrefix):
            led = run.ledger(f.agent, m)
            return led is not None and is_t_prefix(f.X, led.ids(), sysm.T)
        if isinstance(f, HonestSelf):
            if agent is None:
                raise PerspectiveRequired("'Honest' needs an agent perspective")
            return run.honest(agent, m)
        if isinstance(f, TPrefixSelf):
            if agent is None:
                raise PerspectiveRequired("'tprefix(X, L)' needs an agent perspective")
            led = run.ledger(agent, m)
            return led is not None and is_t_prefix(f.X, led.ids(), sysm.T)
        if isinstance(f, Acc):
            return sysm.acc(r)
        if isinstance(f, Prop):
            try:
                pred = sysm.interpretation.props[f.name]
            except KeyError:
                raise UnknownProposition(f.name) from None
            return bool(pred(run.at(m)))
        if isinstance(f, Not):
            return not self.eval(f.sub, r, m, agent)
        if isinstance(f, And):
            return self.eval(f.left, r, m, agent) and self.eval(f.right, r, m, agent)
        if isinstance(f, Or):
            return self.eval(f.left, r, m, agent) or self.eval(f.right, r, m, agent)
        if isinstance(f, Implies):
            return not self.eval(f.left, r, m, agent) or self.eval(f.right, r, m, agent)
        if isinstance(f, Box):
            return all(self.eval(f.sub, r, t, agent) for t in range(m, sysm.horizon + 1))
        if isinstance(f, Next):
            return self.eval(f.sub, r, m + f.steps, agent)
        if isinstance(f, K):
            cls = sysm.knowledge_set(r, m, f.agent)
            if not cls:
                self.vacuous.add(("K", f.agent, r, m))
            return all(self.eval(f.sub, r2, m2, f.agent) for r2, m2 in cls)
        if isinstance(f, B):
            return self._believes(f.agent, f.sub, f.set_name, f.acc, r, m)
        if isinstance(f, E):
            members = sysm.members(f.set_name, r, m)
            if not members:
                self.vacuous.add(("E", f.set_name, r, m))
            return all(self._believes(j, f.sub, f.set_name, f.acc, r, m) for j in sorted(members))
        if isinstance(f, C):
            return self.eval_common(f.set_name, f.y, f.sub, r, m, f.acc)
        if isinstance(f, InitGeq):
            cell = sysm.cells[sysm.cell_of(r)]
            box = Box(f.sub)
            mass = sum((sysm.weights[r2] for r2 in cell if self.eval(box, r2, 0, agent)), Fraction(0))
            return mass >= f.alpha
        raise TypeError(f"cannot evaluate {f!r}")

    def _believes(self, j: str, sub: Formula, set_name: str, acc: bool, r: int, m: int) -> bool:
        """``K_j(j in S [and acc] -> sub)``."""
        sysm = self.system
        for r2, m2 in sysm.knowledge_set(r, m, j):
            if j not in sysm.members(set_name, r2, m2):
                continue
            if acc and not sysm.acc(r2):
                continue
            if not self.eval(sub, r2, m2, j):
                return False
        return True

    # -- common knowledge by reachability ----------------------------------

    def one_step(self, r: int, m: int, set_name: str, y: YOp, use_acc: bool) -> frozenset[Triple]:
        key = (r, m, set_name, y, use_acc)
        out = self._step_cache.get(key)
        if out is not None:
            return out
        sysm = self.system
        found = set()
        for t in self.y_times(y, m):
            for i in sysm.members(set_name, r, t):
                for r2, m2 in sysm.knowledge_set(r, t, i):
                    if i not in sysm.members(set_name, r2, m2):
                        continue
                    if use_acc and not sysm.acc(r2):
                        continue
                    found.add((r2, m2, i))
        out = self._step_cache[key] = frozenset(found)
        return out

    def reachable(self, r: int, m: int, set_name: str, y: YOp, use_acc: bool) -> frozenset[Triple]:
        """Every ``(run, time, witness agent)`` reachable in one or more steps."""
        m = self.system.clamp(m)
        key = (r, m, set_name, y, use_acc)
        out = self._reach_cache.get(key)
        if out is not None:
            return out
        triples: set[Triple] = set()
        seen: set[tuple[int, int]] = set()
        todo = deque([(r, m)])
        while todo:
            p = todo.popleft()
            for tr in self.one_step(*p, set_name, y, use_acc):
                triples.add(tr)
                q = tr[:2]
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
        out = self._reach_cache[key] = frozenset(triples)
        return out

    def eval_common(self, set_name: str, y: YOp, sub: Formula, r: int, m: int, use_acc: bool = False) -> bool:
        for r2, m2, i in sorted(self.reachable(r, m, set_name, y, use_acc)):
            persp = i if self.common_perspective == "witness" else None
            if not self.eval(sub, r2, m2, persp):
                return False
        return True


def eval_formula(ctx: EvalContext, f: Formula, point: Point) -> bool:
    return ctx.eval(f, point.run, point.time, point.agent)


def reachable_set(ctx: EvalContext, point: Point, set_name: str, y: YOp, use_acc: bool) -> set[Point]:
    return {Point(r, m, i) for r, m, i in ctx.reachable(point.run, point.time, set_name, y, use_acc)}


def eval_common(ctx: EvalContext, set_name: str, y: YOp, f: Formula, point: Point, use_acc: bool = False) -> bool:
    return ctx.eval_common(set_name, y, f, point.run, point.time, use_acc)


def iterated_common(ctx: EvalContext, set_name: str, y: YOp, f: Formula, use_acc: bool = False) -> dict[tuple[int, int], bool]:
    """Independent oracle for ``C``: conjunction of ``(Y E_S)^n f`` for
    ``n = 1, 2, ...`` evaluated clause by clause.

    From ``n = 1`` on the level formulas are perspective-free, so each level's
    truth table is a function of the previous one; once a table repeats the
    conjunction can no longer change.
    """
    sysm = ctx.system
    pts = list(sysm.points())
    level = f
    seen: list[tuple[bool, ...]] = []
    acc_table = [True] * len(pts)
    for _ in range(len(pts) + 2):
        level = y.wrap(E(level, set_name, use_acc))
        table = tuple(ctx.eval(level, r, m) for r, m in pts)
        if table in seen:
            break
        seen.append(table)
        acc_table = [a and b for a, b in zip(acc_table, table)]
    return dict(zip(pts, acc_table))


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    counterexample: Point | None = None
    vacuous_points: int = 0

    def __bool__(self):
        return self.valid


def iter_perspectives(ctx: EvalContext, f: Formula) -> Iterator[str | None]:
    if needs_perspective(f):
        yield from ctx.system.agents
    else:
        yield None


def check_valid(ctx: EvalContext, f: Formula) -> ValidityReport:
    """``f`` holds at every point, from every agent's perspective when it is
    agent-relative."""
    if uses_acc(f) and ctx.system.interpretation.acc is None:
        raise MissingAcc("formula uses acc but the interpretation does not interpret it")
    perspectives = list(iter_perspectives(ctx, f))
    before = len(ctx.vacuous)
    for r, m in ctx.system.points():
        for a in perspectives:
            if not ctx.eval(f, r, m, a):
                return ValidityReport(False, Point(r, m, a), len(ctx.vacuous) - before)
    return ValidityReport(True, None, len(ctx.vacuous) - before)
