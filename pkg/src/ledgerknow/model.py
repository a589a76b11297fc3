"""Runs-and-systems ontology: ledgers, local and global states, runs, systems.

Time is discrete and every run carries a quiescent horizon ``M``; the state at
``M`` is treated as repeating forever, so any time past the horizon is clamped
back to ``M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

ENV_TAG = "e"


@dataclass(frozen=True)
class Transaction:
    id: str
    payload: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("transaction id must be nonempty")

    def __str__(self):
        return self.id if not self.payload else f"{self.id}={self.payload}"


@dataclass(frozen=True)
class Ledger(Sequence[Transaction]):
    entries: tuple[Transaction, ...] = ()

    @classmethod
    def of(cls, *ids: str) -> "Ledger":
        return cls(tuple(Transaction(i) for i in ids))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Ledger(self.entries[idx])
        return self.entries[idx]

    def __iter__(self) -> Iterator[Transaction]:
        return iter(self.entries)

    def __add__(self, other: Iterable[Transaction]) -> "Ledger":
        return Ledger(self.entries + tuple(other))

    def ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.entries)

    def max_t_prefix(self, T: int) -> "Ledger":
        return Ledger(self.entries[: max(len(self.entries) - T, 0)])

    def __repr__(self):
        return "Ledger(" + ",".join(self.ids()) + ")"


def is_prefix(X: Sequence, L: Sequence) -> bool:
    if len(X) > len(L):
        return False
    return all(a == b for a, b in zip(X, L))


def is_t_prefix(X: Sequence, L: Sequence, T: int) -> bool:
    """``X`` is a prefix of ``L`` that omits at least the last ``T`` entries."""
    return len(X) <= max(len(L) - T, 0) and is_prefix(X, L)


@dataclass(frozen=True)
class Event:
    """One entry of an agent's history.

    kinds: ``recv`` (a chain from ``peer``), ``mine`` (transactions appended
    locally), ``submit`` (own submission), ``recv-tx`` (a submission relayed by
    ``peer``), ``coin`` (randomization outcome in ``peer``).
    """

    kind: str
    peer: str = ""
    txs: tuple[Transaction, ...] = ()


def derive_ledger(initial: Ledger, history: Iterable[Event]) -> Ledger:
    """Longest-chain adoption over the agent's own history."""
    chain = initial.entries
    for ev in history:
        if ev.kind == "recv" and len(ev.txs) > len(chain):
            chain = ev.txs
        elif ev.kind == "mine":
            chain = chain + ev.txs
    return Ledger(chain)


@dataclass(frozen=True)
class LocalState:
    agent: str
    initial: Ledger = Ledger()
    history: tuple[Event, ...] = ()
    ledger: Ledger = field(default=None, compare=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.ledger is None:
            object.__setattr__(self, "ledger", derive_ledger(self.initial, self.history))

    def extend(self, *events: Event) -> "LocalState":
        return LocalState(self.agent, self.initial, self.history + events)

    def submissions(self) -> list[Transaction]:
        return [t for ev in self.history if ev.kind == "submit" for t in ev.txs]


@dataclass(frozen=True)
class GlobalState:
    time: int
    agents: frozenset[str]
    honest: frozenset[str]
    local_states: tuple[LocalState, ...] = ()
    inflight: tuple[str, ...] = ()
    _by_agent: dict = field(default=None, init=False, compare=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if ENV_TAG in self.agents:
            raise ValueError(f"agent name {ENV_TAG!r} is reserved for the environment")
        if not self.honest <= self.agents:
            raise ValueError(f"honest set {sorted(self.honest)} not within agent set")
        by_agent = {s.agent: s for s in self.local_states}
        if set(by_agent) != set(self.agents):
            raise ValueError("local states must cover exactly the present agents")
        object.__setattr__(self, "local_states", tuple(by_agent[a] for a in sorted(by_agent)))
        object.__setattr__(self, "_by_agent", by_agent)

    def local(self, agent: str) -> LocalState | None:
        return self._by_agent.get(agent)

    def ledger(self, agent: str) -> Ledger | None:
        s = self._by_agent.get(agent)
        return None if s is None else s.ledger

    def content(self) -> tuple:
        """Everything but the clock, for stutter comparisons."""
        return (self.agents, self.honest, self.local_states, self.inflight)


@dataclass(frozen=True)
class Run:
    states: tuple[GlobalState, ...]
    run_id: str = "r0"
    stutter_flag: bool = True

    def __post_init__(self):
        if not self.states:
            raise ValueError("a run needs at least one state")
        if self.stutter_flag and len(self.states) > 1:
            if self.states[-1].content() != self.states[-2].content() or self.states[-1].inflight:
                raise ValueError(f"run {self.run_id}: horizon state is not quiescent")

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def at(self, m: int) -> GlobalState:
        return self.states[min(m, self.horizon)]

    def present(self, agent: str, m: int) -> bool:
        return agent in self.at(m).agents

    def honest(self, agent: str, m: int) -> bool:
        return agent in self.at(m).honest

    def ledger(self, agent: str, m: int) -> Ledger | None:
        return self.at(m).ledger(agent)

    def local(self, agent: str, m: int) -> LocalState | None:
        return self.at(m).local(agent)

    def agents_ever(self) -> frozenset[str]:
        return frozenset().union(*(s.agents for s in self.states))


class Point(NamedTuple):
    run: int
    time: int
    agent: str | None = None


class IndexicalSet:
    """Run- and time-dependent agent set, e.g. the honest agents ``H``."""

    def __init__(self, name: str, membership: Callable[[Run, int], frozenset[str]]):
        self.name = name
        self.membership = membership

    def __call__(self, run: Run, m: int) -> frozenset[str]:
        return self.membership(run, m)

    def __repr__(self):
        return f"IndexicalSet({self.name})"


INDEXICAL_SETS = {
    "H": IndexicalSet("H", lambda run, m: run.at(m).honest),
    "A": IndexicalSet("A", lambda run, m: run.at(m).agents),
}

StateProp = Callable[[GlobalState], bool]


@dataclass(frozen=True)
class Interpretation:
    """pi: ledger/honesty primitives fixed by ``T``; extra propositions by name;
    ``acc`` is a per-run flag (acceptable interpretations keep it run-constant)."""

    T: int = 0
    props: Mapping[str, StateProp] = field(default_factory=dict)
    acc: tuple[bool, ...] | None = None


class InterpretedSystem:
    def __init__(
        self,
        runs: Sequence[Run],
        interpretation: Interpretation | None = None,
        cells: Sequence[Sequence[int]] | None = None,
        weights: Sequence[Fraction] | None = None,
        cell_names: Sequence[str] | None = None,
    ):
        if not runs:
            raise ValueError("a system needs at least one run")
        self.runs = tuple(runs)
        horizons = {r.horizon for r in self.runs}
        if len(horizons) != 1:
            raise ValueError(f"runs must share one horizon, got {sorted(horizons)}")
        self.horizon = horizons.pop()
        self.interpretation = interpretation or Interpretation()
        n = len(self.runs)
        self.cells = tuple(tuple(c) for c in (cells or [range(n)]))
        self.cell_names = tuple(cell_names or (f"cell{k}" for k in range(len(self.cells))))
        flat = sorted(r for c in self.cells for r in c)
        if flat != list(range(n)):
            raise ValueError("cells must partition the runs exactly")
        if weights is None:
            weights = [Fraction(0)] * n
            for c in self.cells:
                for r in c:
                    weights[r] = Fraction(1, len(c))
        self.weights = tuple(Fraction(w) for w in weights)
        if len(self.weights) != n:
            raise ValueError("one weight per run required")
        for c in self.cells:
            if sum(self.weights[r] for r in c) != 1:
                raise ValueError(f"cell weights must sum to 1, got {sum(self.weights[r] for r in c)}")
        acc = self.interpretation.acc
        if acc is not None and len(acc) != n:
            raise ValueError("acc needs one flag per run")
        self._cell_of = {r: k for k, c in enumerate(self.cells) for r in c}
        self._classes: dict[tuple[str, LocalState], list[tuple[int, int]]] | None = None
        self._agents: tuple[str, ...] | None = None

    def with_interpretation(self, interpretation: Interpretation) -> "InterpretedSystem":
        return InterpretedSystem(self.runs, interpretation, self.cells, self.weights, self.cell_names)

    def with_T(self, T: int) -> "InterpretedSystem":
        i = self.interpretation
        return self.with_interpretation(Interpretation(T, i.props, i.acc))

    @property
    def T(self) -> int:
        return self.interpretation.T

    def points(self) -> Iterator[tuple[int, int]]:
        for r in range(len(self.runs)):
            for m in range(self.horizon + 1):
                yield (r, m)

    def clamp(self, m: int) -> int:
        return min(m, self.horizon)

    @property
    def agents(self) -> tuple[str, ...]:
        """Every agent name that ever appears (AG)."""
        if self._agents is None:
            self._agents = tuple(sorted(frozenset().union(*(r.agents_ever() for r in self.runs))))
        return self._agents

    def cell_of(self, r: int) -> int:
        return self._cell_of[r]

    def members(self, set_name: str, r: int, m: int) -> frozenset[str]:
        return INDEXICAL_SETS[set_name](self.runs[r], m)

    def acc(self, r: int) -> bool:
        acc = self.interpretation.acc
        if acc is None:
            raise MissingAcc("the interpretation does not interpret acc")
        return acc[r]

    def _class_index(self):
        if self._classes is None:
            idx: dict[tuple[str, LocalState], list[tuple[int, int]]] = {}
            for r, m in self.points():
                for s in self.runs[r].states[m].local_states:
                    idx.setdefault((s.agent, s), []).append((r, m))
            self._classes = idx
        return self._classes

    def knowledge_set(self, r: int, m: int, agent: str) -> list[tuple[int, int]]:
        s = self.runs[r].local(agent, m)
        if s is None:
            return []
        return self._class_index()[(agent, s)]

    def indistinguishable(self, r: int, m: int, r2: int, m2: int, agent: str) -> bool:
        a = self.runs[r].local(agent, m)
        b = self.runs[r2].local(agent, m2)
        return a is not None and b is not None and a == b


class MissingAcc(LookupError):
    pass


def indistinguishable(sys: InterpretedSystem, r: int, m: int, r2: int, m2: int, agent: str) -> bool:
    return sys.indistinguishable(r, m, r2, m2, agent)


def knowledge_set(sys: InterpretedSystem, r: int, m: int, agent: str) -> set[Point]:
    """All points of ``sys`` that ``agent`` cannot tell apart from ``(r, m)``."""
    return {Point(r2, m2) for r2, m2 in sys.knowledge_set(r, m, agent)}
