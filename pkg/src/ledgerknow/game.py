"""Two-player contract signing judged on a ledger.

The event ``E`` is a set of ledger prefixes (by default: prefixes containing a
given transaction id).  Players see their own ledger and the global clock and
either sign or wait; the judge's ledger decides payoffs.  A signature that does
not end up in a jointly valid contract is exposed and pays ``NEG_INF``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence, Union

from .model import InterpretedSystem, Run


@functools.total_ordering
class _NegInf:
    """Utility minus infinity; strictly below every number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("-inf")

    def __repr__(self):
        return "-inf"

    __str__ = __repr__


NEG_INF = _NegInf()
Utility = Union[Fraction, _NegInf]


def _less(a: Utility, b: Utility) -> bool:
    # numbers don't know about the sentinel, so always compare from its side
    if a is NEG_INF:
        return b is not NEG_INF
    if b is NEG_INF:
        return False
    return a < b


class SpecViolation(ValueError):
    pass


@dataclass(frozen=True)
class GameSpec:
    players: tuple[str, str] = ("a1", "a2")
    judge: str = "a3"
    event_tx: str = "e"
    T: int = 0
    delta: int = 0
    delta_tilde: int = 0
    u_high: Fraction = Fraction(1)
    mode: str = "external"  # external | on-ledger
    ledger_window: int | None = None  # time budget after E for on-ledger signing
    block_budget: int | None = None  # block budget after E for on-ledger signing
    event: Callable[[tuple[str, ...]], bool] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.delta_tilde < 2 * self.delta:
            raise ValueError(f"delta_tilde={self.delta_tilde} must be >= 2*delta={2 * self.delta}")
        if self.u_high <= 0:
            raise ValueError("u_high must be positive")
        if self.mode not in ("external", "on-ledger"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(set(self.players)) != 2 or self.judge in self.players:
            raise ValueError("need two distinct players and a separate judge")

    def event_holds(self, prefix: tuple[str, ...]) -> bool:
        if self.event is not None:
            return self.event(prefix)
        return self.event_tx in prefix

    def sig_tx(self, player: str) -> str:
        return f"sig.{player}"


def event_on_t_prefix(run: Run, spec: GameSpec, agent: str, m: int) -> bool:
    led = run.ledger(agent, m)
    return led is not None and spec.event_holds(led.max_t_prefix(spec.T).ids())


def first_event_time(run: Run, spec: GameSpec, agent: str) -> int | None:
    for m in range(run.horizon + 1):
        if event_on_t_prefix(run, spec, agent, m):
            return m
    return None


# -- strategies --------------------------------------------------------------


class Strategy:
    def sign_time(self, run: Run, spec: GameSpec, player: str) -> int | None:
        raise NotImplementedError


@dataclass(frozen=True)
class Threshold(Strategy):
    """Sign ``k`` steps after E first shows on the player's own T-prefix."""

    k: int = 0

    def sign_time(self, run, spec, player):
        t = first_event_time(run, spec, player)
        return None if t is None else t + self.k

    def __str__(self):
        return f"threshold({self.k})"


@dataclass(frozen=True)
class FixedTime(Strategy):
    t: int

    def sign_time(self, run, spec, player):
        return self.t

    def __str__(self):
        return f"fixed({self.t})"


@dataclass(frozen=True)
class Never(Strategy):
    def sign_time(self, run, spec, player):
        return None

    def __str__(self):
        return "never"


SIGN_ON_E = Threshold(0)


@dataclass(frozen=True)
class DeviationClass:
    max_threshold: int
    max_fixed_time: int
    include_never: bool = True

    def strategies(self) -> Iterator[Strategy]:
        for k in range(self.max_threshold + 1):
            yield Threshold(k)
        for t in range(self.max_fixed_time + 1):
            yield FixedTime(t)
        if self.include_never:
            yield Never()

    def describe(self) -> str:
        never = ", never" if self.include_never else ""
        return f"threshold(0..{self.max_threshold}), fixed(0..{self.max_fixed_time}){never}"

    @classmethod
    def for_horizon(cls, horizon: int) -> "DeviationClass":
        return cls(horizon, horizon, True)


# -- play ----------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    utilities: dict[str, Utility]
    sign_times: dict[str, int | None]
    m_event: int | None
    reasons: dict[str, str] = field(default_factory=dict)
    success: bool = False


def _require_participants(run: Run, spec: GameSpec):
    for a in (*spec.players, spec.judge):
        for m in range(run.horizon + 1):
            if not run.honest(a, m):
                raise SpecViolation(f"{a} is not present and honest at time {m} of run {run.run_id}")


def _event_near(run: Run, spec: GameSpec, s: int, window: int) -> bool:
    return any(event_on_t_prefix(run, spec, spec.judge, t) for t in range(max(s - window, 0), s + window + 1))


def play(run: Run, spec: GameSpec, strategies: dict[str, Strategy] | Sequence[Strategy]) -> Outcome:
    """Payoffs of one play on ``run``.

    Non-signers get 0.  A signer gets ``u_high`` when E happened on the judge's
    T-prefix and both players signed within ``delta_tilde`` of its first
    appearance; otherwise the signature is exposed and pays ``NEG_INF``.
    """
    _require_participants(run, spec)
    if not isinstance(strategies, dict):
        strategies = dict(zip(spec.players, strategies))
    m_e = first_event_time(run, spec, spec.judge)
    times = {p: strategies[p].sign_time(run, spec, p) for p in spec.players}
    joint = m_e is not None and all(t is not None and abs(t - m_e) <= spec.delta_tilde for t in times.values())
    utils: dict[str, Utility] = {}
    reasons: dict[str, str] = {}
    for p in spec.players:
        s = times[p]
        if s is None:
            utils[p], reasons[p] = Fraction(0), "did not sign"
        elif joint:
            utils[p], reasons[p] = Fraction(spec.u_high), "contract in force"
        else:
            other = times[spec.players[1] if p == spec.players[0] else spec.players[0]]
            if not _event_near(run, spec, s, spec.delta_tilde):
                reasons[p] = "signed without E on the judge's T-prefix"
            elif other is None:
                reasons[p] = "signed alone"
            else:
                reasons[p] = "signatures not within the window"
            utils[p] = NEG_INF
    return Outcome(utils, times, m_e, reasons, joint)


def timeline(run: Run, spec: GameSpec) -> tuple[int | None, int | None, int | None]:
    """Sign times under the sign-on-E profile, and the judge's first E time."""
    s1 = SIGN_ON_E.sign_time(run, spec, spec.players[0])
    s2 = SIGN_ON_E.sign_time(run, spec, spec.players[1])
    return s1, s2, first_event_time(run, spec, spec.judge)


def timeline_holds(run: Run, spec: GameSpec) -> bool:
    s1, s2, m_e = timeline(run, spec)
    if m_e is None:
        return s1 is None and s2 is None
    if s1 is None or s2 is None:
        return False
    return abs(s1 - s2) <= spec.delta and max(s1, s2) <= m_e + 2 * spec.delta


# -- equilibrium ---------------------------------------------------------------


@dataclass
class EquilibriumReport:
    equilibrium: bool
    mode: str
    deviation_class: str
    profile: dict[str, str]
    runs_checked: int
    deviations_checked: int
    best_deviation: dict | None = None
    exposures: list[dict] = field(default_factory=list)  # profile plays that pay NEG_INF

    def as_dict(self) -> dict:
        return {
            "equilibrium": self.equilibrium,
            "mode": self.mode,
            "deviation_class": self.deviation_class,
            "profile": self.profile,
            "runs_checked": self.runs_checked,
            "deviations_checked": self.deviations_checked,
            "best_deviation": self.best_deviation,
            "exposures": self.exposures,
        }


def expected_utility(values: Iterable[tuple[Fraction, Utility]]) -> Utility:
    """``NEG_INF`` if any positive-weight outcome is ``NEG_INF``."""
    total = Fraction(0)
    for w, u in values:
        if w == 0:
            continue
        if u is NEG_INF:
            return NEG_INF
        total += w * u
    return total


def check_equilibrium(
    sys: InterpretedSystem,
    spec: GameSpec,
    profile: dict[str, Strategy] | Sequence[Strategy] = (SIGN_ON_E, SIGN_ON_E),
    deviation_class: DeviationClass | None = None,
    mode: str = "worst-case",
) -> EquilibriumReport:
    """Sweep every unilateral deviation in a finite strategy class.

    worst-case: a deviation is profitable if it pays strictly more on some run.
    expectation: ... if it pays strictly more in expectation within some cell.
    """
    if mode not in ("worst-case", "expectation"):
        raise ValueError(f"unknown mode {mode!r}")
    if not isinstance(profile, dict):
        profile = dict(zip(spec.players, profile))
    dc = deviation_class or DeviationClass.for_horizon(sys.horizon)
    base = [play(run, spec, profile) for run in sys.runs]
    exposures = [
        {"player": p, "run": run.run_id, "reason": out.reasons[p]}
        for run, out in zip(sys.runs, base)
        for p in spec.players
        if out.utilities[p] is NEG_INF
    ]
    best = None
    checked = 0
    for p in spec.players:
        for dev in dc.strategies():
            if dev == profile[p]:
                continue
            checked += 1
            strat = dict(profile)
            strat[p] = dev
            outs = [play(run, spec, strat) for run in sys.runs]
            if mode == "worst-case":
                groups = [(sys.runs[k].run_id, [(Fraction(1), base[k].utilities[p])], [(Fraction(1), outs[k].utilities[p])]) for k in range(len(outs))]
            else:
                groups = [
                    (name, [(sys.weights[k], base[k].utilities[p]) for k in cell], [(sys.weights[k], outs[k].utilities[p]) for k in cell])
                    for name, cell in zip(sys.cell_names, sys.cells)
                ]
            for where, b, d in groups:
                ub, ud = expected_utility(b), expected_utility(d)
                if _less(ub, ud) and (best is None or _less(best["_u"], ud)):
                    best = {"player": p, "deviation": str(dev), "where": where, "profile_utility": str(ub), "deviation_utility": str(ud), "_u": ud}
    if best is not None:
        best.pop("_u")
    return EquilibriumReport(
        equilibrium=best is None,
        mode=mode,
        deviation_class=dc.describe(),
        profile={p: str(s) for p, s in profile.items()},
        runs_checked=len(sys.runs),
        deviations_checked=checked,
        best_deviation=best,
        exposures=exposures,
    )


def play_on_ledger(run: Run, spec: GameSpec) -> Outcome:
    """Signing means getting ``sig.<player>`` onto the judge's ledger.

    Success needs both signatures on the judge's ledger within
    ``ledger_window`` steps of E (time mode) or within ``block_budget`` entries
    past the judge's ledger length when E first appeared (block mode).
    """
    _require_participants(run, spec)
    if spec.ledger_window is None and spec.block_budget is None:
        raise ValueError("on-ledger play needs ledger_window or block_budget")
    m_e = first_event_time(run, spec, spec.judge)
    sigs = {p: spec.sig_tx(p) for p in spec.players}
    submitted: dict[str, int | None] = {}
    for p in spec.players:
        submitted[p] = next(
            (m for m in range(run.horizon + 1) if any(t.id == sigs[p] for t in run.local(p, m).submissions())),
            None,
        )
    if all(t is None for t in submitted.values()):
        zero = {p: Fraction(0) for p in spec.players}
        return Outcome(zero, submitted, m_e, {p: "did not sign" for p in spec.players}, False)
    t_both = None
    for m in range(run.horizon + 1):
        ids = run.ledger(spec.judge, m).ids()
        if all(s in ids for s in sigs.values()):
            t_both = m
            break
    success = False
    if m_e is not None and t_both is not None:
        if spec.ledger_window is not None:
            success = t_both <= m_e + spec.ledger_window
        else:
            ids = run.ledger(spec.judge, t_both).ids()
            limit = len(run.ledger(spec.judge, m_e)) + spec.block_budget
            success = all(ids.index(s) + 1 <= limit for s in sigs.values())
    utils: dict[str, Utility] = {}
    reasons: dict[str, str] = {}
    for p in spec.players:
        if success:
            utils[p], reasons[p] = Fraction(spec.u_high), "contract on the judge's ledger in time"
        elif submitted[p] is None:
            utils[p], reasons[p] = Fraction(0), "did not sign"
        else:
            utils[p], reasons[p] = NEG_INF, "signature exposed without a valid contract"
    return Outcome(utils, submitted, m_e, reasons, success)


def stable_agents(sys: InterpretedSystem) -> list[str]:
    """Agents present and honest at every point of every run."""
    return [a for a in sys.agents if all(run.honest(a, m) for run in sys.runs for m in range(sys.horizon + 1))]
