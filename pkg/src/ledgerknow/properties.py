"""Per-run checkers for ledger properties; each failure carries a witness.

Quantifiers over "all later times" stop at the run's horizon, which is exact
because the horizon state repeats forever.  Only the maximal ``T``-prefix of a
ledger is checked: every shorter ``T``-prefix is a prefix of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .model import Ledger, Run, is_prefix, is_t_prefix


class Witness(NamedTuple):
    i: str
    j: str
    m: int
    m2: int
    X: tuple[str, ...]


@dataclass(frozen=True)
class PropertyReport:
    name: str
    holds: bool
    witness: Witness | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.holds != (self.witness is None):
            raise ValueError("a witness is present exactly when the property fails")

    def __bool__(self):
        return self.holds


def _honest(run: Run, m: int):
    return sorted(run.at(m).honest)


def check_t_consistency(run: Run, T: int) -> PropertyReport:
    M = run.horizon
    for m in range(M + 1):
        for i in _honest(run, m):
            X = run.ledger(i, m).max_t_prefix(T)
            for m2 in range(m, M + 1):
                for j in _honest(run, m2):
                    if not is_prefix(X, run.ledger(j, m2)):
                        return PropertyReport("t-consistency", False, Witness(i, j, m, m2, X.ids()), {"T": T})
    return PropertyReport("t-consistency", True, params={"T": T})


def check_weak_growth(run: Run, delta: int) -> PropertyReport:
    M = run.horizon
    for m in range(M + 1):
        for i in _honest(run, m):
            n = len(run.ledger(i, m))
            for m2 in range(min(m + delta, M), M + 1):
                for j in _honest(run, m2):
                    if len(run.ledger(j, m2)) < n:
                        X = run.ledger(i, m).ids()
                        return PropertyReport("weak-growth", False, Witness(i, j, m, m2, X), {"delta": delta})
    return PropertyReport("weak-growth", True, params={"delta": delta})


def check_acceptability(run: Run, T: int, delta: int) -> PropertyReport:
    M = run.horizon
    params = {"T": T, "delta": delta}
    for m in range(M + 1):
        for i in _honest(run, m):
            X = run.ledger(i, m).max_t_prefix(T)
            for t in sorted({min(m2 + delta, M) for m2 in range(m, M + 1)}):
                for j in _honest(run, t):
                    if not is_t_prefix(X, run.ledger(j, t), T):
                        return PropertyReport("acceptability", False, Witness(i, j, m, t, X.ids()), params)
    return PropertyReport("acceptability", True, params=params)


def _submissions(run: Run):
    """(agent, time, tx) for every submit event, at the time it first shows up."""
    seen = set()
    out = []
    for m, state in enumerate(run.states):
        for s in state.local_states:
            for k, ev in enumerate(s.history):
                if ev.kind == "submit" and (s.agent, k) not in seen:
                    seen.add((s.agent, k))
                    out.extend((s.agent, m, tx) for tx in ev.txs)
    return out


def _honest_throughout(run: Run, agent: str, lo: int, hi: int) -> bool:
    return all(run.honest(agent, t) for t in range(lo, hi + 1))


def check_liveness(run: Run, delta_live: int) -> PropertyReport:
    M = run.horizon
    params = {"delta_live": delta_live}
    for agent, m, tx in _submissions(run):
        end = min(m + delta_live, M)
        if not _honest_throughout(run, agent, m, end):
            continue
        if tx not in run.ledger(agent, end):
            return PropertyReport("liveness", False, Witness(agent, agent, m, m + delta_live, (tx.id,)), params)
    return PropertyReport("liveness", True, params=params)


def check_chain_growth_upper(run: Run, g_max: Fraction) -> PropertyReport:
    """Windowed bound: honest ledgers grow by at most ``ceil(g_max * w)`` over
    any window of ``w`` steps."""
    g_max = Fraction(g_max)
    if g_max <= 0:
        raise ValueError("g_max must be positive")
    M = run.horizon
    params = {"g_max": str(g_max)}
    for m in range(M + 1):
        for i in _honest(run, m):
            base = len(run.ledger(i, m))
            for end in range(m + 1, M + 1):
                if not run.honest(i, end):
                    break
                if len(run.ledger(i, end)) - base > math.ceil(g_max * (end - m)):
                    return PropertyReport("chain-growth-upper", False, Witness(i, i, m, end, run.ledger(i, end).ids()), params)
    return PropertyReport("chain-growth-upper", True, params=params)


def witness_violates(run: Run, report: PropertyReport) -> bool:
    """Re-evaluate the violated clause at the report's witness."""
    w = report.witness
    if w is None:
        return False
    p = report.params
    X = Ledger.of(*w.X)
    if report.name == "t-consistency":
        return run.honest(w.i, w.m) and run.honest(w.j, w.m2) and w.m2 >= w.m and not is_prefix(X, run.ledger(w.j, w.m2))
    if report.name == "weak-growth":
        return (
            run.honest(w.i, w.m)
            and run.honest(w.j, w.m2)
            and w.m2 >= min(w.m + p["delta"], run.horizon)
            and len(run.ledger(w.j, w.m2)) < len(run.ledger(w.i, w.m))
        )
    if report.name == "acceptability":
        return (
            run.honest(w.i, w.m)
            and run.honest(w.j, w.m2)
            and X == run.ledger(w.i, w.m).max_t_prefix(p["T"])
            and not is_t_prefix(X, run.ledger(w.j, w.m2), p["T"])
        )
    if report.name == "liveness":
        end = min(w.m2, run.horizon)
        return _honest_throughout(run, w.i, w.m, end) and w.X[0] not in run.ledger(w.i, end).ids()
    if report.name == "chain-growth-upper":
        grown = len(run.ledger(w.i, w.m2)) - len(run.ledger(w.i, w.m))
        return _honest_throughout(run, w.i, w.m, w.m2) and grown > math.ceil(Fraction(p["g_max"]) * (w.m2 - w.m))
    raise ValueError(f"unknown property {report.name!r}")


CHECKERS = {
    "t-consistency": lambda run, a: check_t_consistency(run, a["T"]),
    "weak-growth": lambda run, a: check_weak_growth(run, a["delta"]),
    "acceptability": lambda run, a: check_acceptability(run, a["T"], a["delta"]),
    "liveness": lambda run, a: check_liveness(run, a["delta_live"]),
    "chain-growth-upper": lambda run, a: check_chain_growth_upper(run, a["g_max"]),
}
