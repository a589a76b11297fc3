"""Line-delimited trace files for interpreted systems.

Line 1 is a header object; every following line is one ``(run, time)`` record
with keys in this order: ``run, time, agents, honest, ledgers, queue, inflight,
init, events``.  ``ledgers`` maps agent -> comma-separated transaction ids;
``queue`` is a short digest of the in-flight message list; ``init`` carries the
bootstrap ledger of agents first seen at this record and ``events`` the history
entries appended since the previous record.  See ``docs/trace.md``.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any

from .model import Event, GlobalState, Interpretation, InterpretedSystem, Ledger, LocalState, Run, Transaction
from .scenario import PropRule

FORMAT = "ledgerknow-trace"
VERSION = 1


class TraceError(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def _tx(t: Transaction) -> list[str]:
    return [t.id, t.payload] if t.payload else [t.id]


def _untx(x) -> Transaction:
    return Transaction(*x)


def _event(ev: Event) -> list:
    return [ev.kind, ev.peer, [_tx(t) for t in ev.txs]]


def queue_digest(inflight) -> str:
    return hashlib.sha256("\n".join(inflight).encode()).hexdigest()[:16]


def export_system(sys: InterpretedSystem, digest: str = "") -> str:
    props: dict[str, Any] = {}
    for name, p in sorted(sys.interpretation.props.items()):
        if not isinstance(p, PropRule):
            raise TraceError(f"proposition {name!r} is not a serializable rule")
        props[name] = {"tx": p.tx, "agent": p.agent}
    header = {
        "format": FORMAT,
        "version": VERSION,
        "digest": digest,
        "horizon": sys.horizon,
        "T": sys.T,
        "runs": [r.run_id for r in sys.runs],
        "cells": [list(c) for c in sys.cells],
        "cell_names": list(sys.cell_names),
        "weights": [str(w) for w in sys.weights],
        "props": props,
        "acc": None if sys.interpretation.acc is None else list(sys.interpretation.acc),
    }
    lines = [_dumps(header)]
    for k, run in enumerate(sys.runs):
        prev: dict[str, LocalState] = {}
        for m, st in enumerate(run.states):
            init, events = {}, {}
            for s in st.local_states:
                old = prev.get(s.agent)
                if old is None:
                    init[s.agent] = [_tx(t) for t in s.initial]
                    new = s.history
                else:
                    new = s.history[len(old.history):]
                if new:
                    events[s.agent] = [_event(e) for e in new]
            rec = {
                "run": k,
                "time": m,
                "agents": sorted(st.agents),
                "honest": sorted(st.honest),
                "ledgers": {s.agent: ",".join(s.ledger.ids()) for s in st.local_states},
                "queue": queue_digest(st.inflight),
                "inflight": list(st.inflight),
                "init": init,
                "events": events,
            }
            lines.append(_dumps(rec))
            prev = {s.agent: s for s in st.local_states}
    return "\n".join(lines) + "\n"


def import_system(text: str) -> tuple[InterpretedSystem, dict]:
    try:
        return _import(text)
    except TraceError:
        raise
    except (KeyError, IndexError, TypeError, ValueError, AttributeError) as e:
        raise TraceError(f"malformed trace: {type(e).__name__}: {e}") from e


def _import(text: str) -> tuple[InterpretedSystem, dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise TraceError("empty trace")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise TraceError(f"bad header: {e}") from e
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise TraceError(f"not a {FORMAT} v{VERSION} file")
    n_runs = len(header["runs"])
    states: list[list[GlobalState]] = [[] for _ in range(n_runs)]
    current: list[dict[str, LocalState]] = [{} for _ in range(n_runs)]
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(ln)
            k, m = rec["run"], rec["time"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise TraceError(f"line {lineno}: {e}") from e
        if m != len(states[k]):
            raise TraceError(f"line {lineno}: run {k} time {m} out of order")
        locs = {}
        for a in rec["agents"]:
            if a in rec["init"]:
                base = LocalState(a, Ledger(tuple(_untx(t) for t in rec["init"][a])))
            elif a in current[k]:
                base = current[k][a]
            else:
                raise TraceError(f"line {lineno}: agent {a} appears without an initial state")
            new = tuple(Event(kind, peer, tuple(_untx(t) for t in txs)) for kind, peer, txs in rec["events"].get(a, []))
            s = base.extend(*new) if new else base
            if ",".join(s.ledger.ids()) != rec["ledgers"].get(a):
                raise TraceError(f"line {lineno}: ledger of {a} does not match its history")
            locs[a] = s
        if queue_digest(rec["inflight"]) != rec["queue"]:
            raise TraceError(f"line {lineno}: queue digest mismatch")
        states[k].append(GlobalState(m, frozenset(rec["agents"]), frozenset(rec["honest"]), tuple(locs.values()), tuple(rec["inflight"])))
        current[k] = locs
    runs = [Run(tuple(st), run_id=rid) for st, rid in zip(states, header["runs"])]
    props = {name: PropRule(**p) for name, p in header["props"].items()}
    acc = None if header["acc"] is None else tuple(header["acc"])
    sys = InterpretedSystem(
        runs,
        Interpretation(header["T"], props, acc),
        cells=header["cells"],
        weights=[Fraction(w) for w in header["weights"]],
        cell_names=header["cell_names"],
    )
    if sys.horizon != header["horizon"]:
        raise TraceError("horizon in header does not match the records")
    return sys, header


def read_trace(path) -> tuple[InterpretedSystem, dict]:
    with open(path) as fh:
        return import_system(fh.read())


def write_trace(sys: InterpretedSystem, path, digest: str = "") -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(export_system(sys, digest))
