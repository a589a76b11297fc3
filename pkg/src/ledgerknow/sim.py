"""Abstract longest-chain ledger protocol run under a scripted adversary.

Each step ``m = 1..M`` goes: churn, corruption, deliveries, block creation,
submissions, trigger detection; zero-delay messages are delivered within the
step that sent them.  Honest agents only ever mine, submit and adopt the
longest chain they have seen; the adversary picks delays, corruption and churn.
"""

from __future__ import annotations

import logging
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Event, GlobalState, Interpretation, InterpretedSystem, Ledger, LocalState, Run, Transaction
from .scenario import (
    AdversaryProtocol,
    ConfigError,
    HorizonTooShort,
    InvalidSchedule,
    ScenarioConfig,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "LEDGERKNOW_WORKERS"


@dataclass(order=True)
class _Msg:
    deliver_at: int
    seq: int
    sender: str = field(compare=False)
    recipient: str = field(compare=False)
    kind: str = field(compare=False)
    txs: tuple[Transaction, ...] = field(compare=False)

    def digest(self) -> str:
        return f"{self.sender}>{self.recipient}@{self.deliver_at}:{self.kind}:{','.join(t.id for t in self.txs)}"


class _Simulation:
    def __init__(self, cfg: ScenarioConfig, adv: AdversaryProtocol, seed: int):
        self.cfg = cfg
        self.adv = adv
        self.seed = seed
        self.sched_rng = random.Random(f"{seed}:{adv.id}:schedule")
        self.delay_rng = random.Random(f"{seed}:{adv.id}:delay")
        self.fork_rng = random.Random(f"{seed}:{adv.id}:fork")
        self.initial: dict[str, Ledger] = {}
        self.history: dict[str, list[Event]] = {}
        self.present: set[str] = set()
        self.honest: set[str] = set()
        self.known: set[str] = set()
        self.pending: dict[str, list[Transaction]] = {}
        self.queue: list[_Msg] = []
        self.seq = 0
        self.n_blocks = 0
        self.n_agents = 0
        self.fired: set[int] = set()
        self.scheduled_subs: list[tuple[int, str, Transaction]] = []

    # -- agents ------------------------------------------------------------

    def _ledger(self, a: str) -> Ledger:
        return LocalState(a, self.initial[a], tuple(self.history[a])).ledger

    def _add_agent(self, name: str, initial: Ledger, honest: bool = True):
        self.initial[name] = initial
        self.history[name] = []
        self.present.add(name)
        self.known.add(name)
        self.pending[name] = []
        if honest:
            self.honest.add(name)

    def _require_present(self, agent: str, m: int, what: str):
        if agent not in self.present:
            where = "unknown agent" if agent not in self.known else "agent not present"
            raise InvalidSchedule(f"{what} at time {m}: {where} {agent!r}")

    # -- network -----------------------------------------------------------

    def _delay(self, recipient: str) -> int:
        d = self.adv.delay
        if d.kind == "fixed":
            return d.value
        if d.kind == "targeted":
            return self.cfg.max_message_delay if recipient == d.target else d.value
        return self.delay_rng.randint(d.low, self.cfg.max_message_delay)

    def _send(self, m: int, sender: str, recipient: str, kind: str, txs):
        self.seq += 1
        self.queue.append(_Msg(m + self._delay(recipient), self.seq, sender, recipient, kind, tuple(txs)))

    def _deliver(self, m: int):
        while True:
            due = sorted(msg for msg in self.queue if msg.deliver_at <= m)
            if not due:
                return
            self.queue = [msg for msg in self.queue if msg.deliver_at > m]
            for msg in due:
                if msg.recipient not in self.present:
                    continue
                if msg.kind == "chain":
                    self.history[msg.recipient].append(Event("recv", msg.sender, msg.txs))
                else:
                    self.history[msg.recipient].append(Event("recv-tx", msg.sender, msg.txs))
                    self.pending[msg.recipient].extend(msg.txs)

    # -- protocol ----------------------------------------------------------

    def _broadcast_targets(self, creator: str) -> list[str]:
        return sorted(self.present - {creator})

    def _create_block(self, m: int, burst: int):
        cfg = self.cfg
        candidates = sorted(self.honest)
        if cfg.protocol_variant == "stale-broadcast":
            candidates = [a for a in candidates if a != cfg.stale_agent] or candidates
        if not candidates:
            return
        creator = self.sched_rng.choice(candidates)
        ledger = self._ledger(creator)
        on_chain = set(ledger.ids())
        txs: list[Transaction] = []
        if burst:
            for _ in range(burst):
                self.n_blocks += 1
                txs.append(Transaction(f"b{self.n_blocks}"))
        else:
            waiting = [t for t in self.pending[creator] if t.id not in on_chain]
            if waiting:
                txs.append(waiting[0])
            else:
                self.n_blocks += 1
                txs.append(Transaction(f"b{self.n_blocks}"))
        self.history[creator].append(Event("mine", "", tuple(txs)))
        chain = self._ledger(creator).entries
        targets = self._broadcast_targets(creator)
        alt = None
        if cfg.protocol_variant == "fork-prone" and targets and self.fork_rng.random() < cfg.fork_probability:
            alt = ledger.entries + (Transaction(f"f{self.n_blocks}"),)
        for k, target in enumerate(targets):
            sent = alt if alt is not None and k % 2 == 0 else chain
            if cfg.protocol_variant == "stale-broadcast" and target == cfg.stale_agent:
                # the stale agent only ever sees the chain minus its newest entries
                if len(sent) <= cfg.stale_lag:
                    continue
                sent = sent[: len(sent) - cfg.stale_lag]
            self._send(m, creator, target, "chain", sent)

    def _submit(self, m: int, agent: str, tx: Transaction):
        self.history[agent].append(Event("submit", "", (tx,)))
        self.pending[agent].append(tx)
        for target in sorted(self.present - {agent}):
            self._send(m, agent, target, "tx", (tx,))

    def _snapshot(self, m: int) -> GlobalState:
        locs = tuple(LocalState(a, self.initial[a], tuple(self.history[a])) for a in sorted(self.present))
        return GlobalState(
            time=m,
            agents=frozenset(self.present),
            honest=frozenset(self.honest & self.present),
            local_states=locs,
            inflight=tuple(msg.digest() for msg in sorted(self.queue)),
        )

    def block_plan(self) -> dict[int, int]:
        """time -> burst size (0 for an ordinary single-transaction block)."""
        b = self.cfg.blocks
        plan: dict[int, int] = {}
        if b.times is not None:
            for t in b.times:
                plan[t] = 0
        else:
            t = b.start
            while t <= self.cfg.block_stop():
                plan[t] = 0
                t += self.sched_rng.randint(b.interval_min, b.interval_max)
        for t, size in b.bursts:
            plan[t] = size
        return plan

    def run(self) -> Run:
        cfg = self.cfg
        for a in cfg.initial_agents():
            self._add_agent(a, Ledger())
        self.n_agents = cfg.n_initial_agents
        churn = sorted(cfg.churn + self.adv.churn, key=lambda c: c.time)
        corruption = sorted(cfg.corruption + self.adv.corruption, key=lambda c: (c.time, c.agent))
        plan = self.block_plan()
        states = [self._snapshot(0)]
        for m in range(1, cfg.horizon + 1):
            for ev in (c for c in churn if c.time == m):
                for a in ev.leave:
                    self._require_present(a, m, "leave")
                    self.present.discard(a)
                    self.honest.discard(a)
                for _ in range(ev.join):
                    self.n_agents += 1
                    name = f"a{self.n_agents}"
                    donors = sorted(self.honest & self.present)
                    boot = max((self._ledger(a) for a in donors), key=len, default=Ledger())
                    self._add_agent(name, boot, ev.join_honest)
            for c in (c for c in corruption if c.time == m):
                self._require_present(c.agent, m, "corruption")
                self.honest.discard(c.agent)
            self._deliver(m)
            if m in plan:
                self._create_block(m, plan[m])
                self._deliver(m)
            for s in cfg.submissions:
                if s.time == m:
                    self._require_present(s.agent, m, "submission")
                    self._submit(m, s.agent, Transaction(s.tx, s.payload))
            for t, agent, tx in self.scheduled_subs:
                if t == m and agent in self.present:
                    self._submit(m, agent, tx)
            self._deliver(m)
            self._fire_triggers(m)
            states.append(self._snapshot(m))
        pending_subs = [t for t, _, _ in self.scheduled_subs if t > cfg.horizon]
        if self.queue or pending_subs or states[-1].content() != states[-2].content():
            raise HorizonTooShort(
                f"run {cfg.name}/{self.adv.id}/{self.seed} not quiescent by horizon {cfg.horizon}"
            )
        return Run(tuple(states), run_id=f"{self.adv.id}/{self.seed}")

    def _fire_triggers(self, m: int):
        for k, trig in enumerate(self.cfg.triggered_submissions):
            if k in self.fired or trig.agent not in self.present:
                continue
            if trig.trigger_tx in self._ledger(trig.agent).max_t_prefix(trig.T).ids():
                self.fired.add(k)
                tx = Transaction(trig.tx, trig.payload)
                if trig.lag == 0:
                    self._submit(m, trig.agent, tx)
                    self._deliver(m)
                else:
                    self.scheduled_subs.append((m + trig.lag, trig.agent, tx))


def generate_run(config: ScenarioConfig, adversary: AdversaryProtocol, seed: int) -> Run:
    """One run of the protocol in the context ``(config, adversary)``.

    Deterministic in ``(config, adversary, seed)``.
    """
    return _Simulation(config, adversary, seed).run()


def _run_job(args):
    return generate_run(*args)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer")


def interpretation_for(config: ScenarioConfig, acc=None) -> Interpretation:
    return Interpretation(T=config.T, props=dict(config.props), acc=acc)


def generate_system(config: ScenarioConfig, seed_offset: int = 0, workers: int | None = None) -> InterpretedSystem:
    """One cell per adversary protocol, ``n_runs`` seeded runs per cell."""
    jobs = []
    cells = []
    weights: list[Fraction] = []
    for adv in config.adversaries:
        cell = []
        ws = adv.weights or tuple(Fraction(1, config.n_runs) for _ in range(config.n_runs))
        for k in range(config.n_runs):
            cell.append(len(jobs))
            jobs.append((config, adv, config.seed + seed_offset + k))
            weights.append(ws[k])
        cells.append(cell)
    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_job, jobs))
    else:
        runs = [generate_run(*job) for job in jobs]
    log.debug("generated %d runs in %d cells", len(runs), len(cells))
    return InterpretedSystem(
        runs,
        interpretation_for(config),
        cells=cells,
        weights=weights,
        cell_names=[a.id for a in config.adversaries],
    )
