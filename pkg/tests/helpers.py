"""Hand-built runs and systems for tests."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from ledgerknow.model import Event, GlobalState, Interpretation, InterpretedSystem, LocalState, Run, Transaction

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _ids(led) -> tuple[str, ...]:
    if isinstance(led, str):
        return tuple(x for x in led.split(",") if x)
    return tuple(led)


def make_run(steps, run_id="r0", honest=None, coins=None, submits=None, close=True) -> Run:
    """``steps[m]`` maps agent -> ledger (``"a,b"`` or a tuple of ids).

    Each change of ledger is recorded as a received chain; ledgers must only
    grow per agent.  ``honest[m]`` is the honest set at ``m`` (default: all
    present).  ``coins[m]`` maps agent -> tag appended as a coin event, which
    makes otherwise equal local states differ; ``submits[m]`` maps agent -> tx
    id recorded as a submission.  With ``close`` the last state
    is repeated once so the run ends quiescent.
    """
    states = []
    cur: dict[str, LocalState] = {}
    for m, step in enumerate(steps):
        nxt = {}
        for a, led in step.items():
            ids = _ids(led)
            s = cur.get(a) or LocalState(a)
            if s.ledger.ids() != ids:
                if len(ids) <= len(s.ledger):
                    raise ValueError(f"{a} at {m}: ledgers must grow ({s.ledger.ids()} -> {ids})")
                s = s.extend(Event("recv", "net", tuple(Transaction(t) for t in ids)))
            sub = (submits or {}).get(m, {}).get(a)
            if sub is not None:
                s = s.extend(Event("submit", "", (Transaction(sub),)))
            tag = (coins or {}).get(m, {}).get(a)
            if tag is not None:
                s = s.extend(Event("coin", str(tag)))
            nxt[a] = s
        cur = nxt
        h = frozenset(step) if honest is None or honest[m] is None else frozenset(honest[m])
        states.append(GlobalState(m, frozenset(step), h, tuple(cur.values())))
    if close:
        last = states[-1]
        states.append(GlobalState(len(states), last.agents, last.honest, last.local_states))
    return Run(tuple(states), run_id=run_id, stutter_flag=close)


def make_system(runs, T=0, props=None, acc=None, cells=None, weights=None) -> InterpretedSystem:
    return InterpretedSystem(
        runs,
        Interpretation(T, props or {}, None if acc is None else tuple(acc)),
        cells=cells,
        weights=None if weights is None else [Fraction(w) for w in weights],
    )


def tx_on(agent: str, tx: str):
    """State proposition: ``tx`` is on ``agent``'s ledger."""

    def pred(state):
        led = state.ledger(agent)
        return led is not None and tx in led.ids()

    return pred
