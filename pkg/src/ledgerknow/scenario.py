"""Scenario configuration: the context a system of runs is generated in.

Scenarios are YAML documents; see ``docs/scenario.md`` for the schema.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

VARIANTS = ("honest-longest-chain", "stale-broadcast", "fork-prone")


class ConfigError(ValueError):
    pass


class InvalidSchedule(ConfigError):
    pass


class HorizonTooShort(ConfigError):
    pass


@dataclass(frozen=True)
class DelayPolicy:
    kind: str = "fixed"  # fixed | random | targeted
    value: int = 0
    low: int = 0
    target: str = ""


@dataclass(frozen=True)
class ChurnEvent:
    time: int
    join: int = 0
    leave: tuple[str, ...] = ()
    join_honest: bool = True


@dataclass(frozen=True)
class Corruption:
    agent: str
    time: int


@dataclass(frozen=True)
class Submission:
    agent: str
    time: int
    tx: str
    payload: str = ""


@dataclass(frozen=True)
class TriggeredSubmission:
    """Submit ``tx`` ``lag`` steps after ``trigger_tx`` first shows up on the
    agent's maximal ``T``-prefix."""

    agent: str
    tx: str
    trigger_tx: str
    T: int = 0
    lag: int = 0
    payload: str = ""


@dataclass(frozen=True)
class PropRule:
    """Event proposition: ``tx`` is on the ledger of ``agent``.

    ``agent`` may also be ``any-honest`` or ``all-honest``.
    """

    tx: str
    agent: str = "any-honest"

    def __call__(self, state) -> bool:
        def has(a):
            led = state.ledger(a)
            return led is not None and self.tx in led.ids()

        if self.agent == "any-honest":
            return any(has(a) for a in state.honest)
        if self.agent == "all-honest":
            return all(has(a) for a in state.honest)
        return has(self.agent)


@dataclass(frozen=True)
class BlockSchedule:
    start: int = 1
    stop: int | None = None
    interval_min: int = 1
    interval_max: int = 1
    times: tuple[int, ...] | None = None
    bursts: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class AdversaryProtocol:
    id: str = "adv0"
    delay: DelayPolicy = DelayPolicy()
    corruption: tuple[Corruption, ...] = ()
    churn: tuple[ChurnEvent, ...] = ()
    weights: tuple[Fraction, ...] | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    n_initial_agents: int = 3
    horizon: int = 10
    max_message_delay: int = 0
    protocol_variant: str = "honest-longest-chain"
    blocks: BlockSchedule = BlockSchedule()
    stale_agent: str = "a2"
    stale_lag: int = 1
    fork_probability: Fraction = Fraction(1)
    churn: tuple[ChurnEvent, ...] = ()
    corruption: tuple[Corruption, ...] = ()
    submissions: tuple[Submission, ...] = ()
    triggered_submissions: tuple[TriggeredSubmission, ...] = ()
    props: tuple[tuple[str, PropRule], ...] = ()
    T: int = 1
    delta: int = 0
    delta_live: int = 2
    g_max: Fraction = Fraction(1)
    n_runs: int = 1
    seed: int = 0
    adversaries: tuple[AdversaryProtocol, ...] = (AdversaryProtocol(),)

    def __post_init__(self):
        validate(self)

    def block_stop(self) -> int:
        if self.blocks.stop is not None:
            return self.blocks.stop
        return self.horizon - self.max_message_delay - 2

    def initial_agents(self) -> list[str]:
        return [f"a{k}" for k in range(1, self.n_initial_agents + 1)]

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def digest(self, seed_offset: int = 0) -> str:
        blob = json.dumps({"config": self.to_dict(), "seed_offset": seed_offset}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def _plain(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def validate(cfg: ScenarioConfig) -> None:
    if cfg.protocol_variant not in VARIANTS:
        raise ConfigError(f"unknown protocol_variant {cfg.protocol_variant!r}; expected one of {VARIANTS}")
    if cfg.n_initial_agents < 1:
        raise ConfigError("n_initial_agents must be >= 1")
    if cfg.horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if cfg.max_message_delay < 0:
        raise ConfigError("max_message_delay must be >= 0")
    if cfg.n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if min(cfg.T, cfg.delta, cfg.delta_live) < 0 or cfg.g_max <= 0:
        raise ConfigError("T, delta, delta_live must be >= 0 and g_max > 0")
    if cfg.stale_lag < 0:
        raise ConfigError("stale_lag must be >= 0")
    if not 0 <= cfg.fork_probability <= 1:
        raise ConfigError("fork_probability must lie in [0, 1]")
    b = cfg.blocks
    if b.interval_min < 1 or b.interval_max < b.interval_min:
        raise ConfigError("block intervals need 1 <= interval_min <= interval_max")
    if cfg.protocol_variant == "honest-longest-chain" and b.times is None and b.interval_min <= cfg.max_message_delay:
        # concurrent creators would fork and force reorgs
        raise ConfigError("honest-longest-chain needs blocks.interval_min > max_message_delay")
    if not cfg.adversaries:
        raise ConfigError("at least one adversary protocol is required")
    ids = [a.id for a in cfg.adversaries]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate adversary ids {ids}")
    for adv in cfg.adversaries:
        d = adv.delay
        if d.kind not in ("fixed", "random", "targeted"):
            raise ConfigError(f"adversary {adv.id}: unknown delay kind {d.kind!r}")
        if not (0 <= d.value <= cfg.max_message_delay and 0 <= d.low <= cfg.max_message_delay):
            raise ConfigError(f"adversary {adv.id}: delays must lie in [0, max_message_delay]")
        if adv.weights is not None:
            if len(adv.weights) != cfg.n_runs:
                raise ConfigError(f"adversary {adv.id}: need {cfg.n_runs} run weights")
            if any(w < 0 for w in adv.weights) or sum(adv.weights) != 1:
                raise ConfigError(f"adversary {adv.id}: run weights must be >= 0 and sum to 1")
    times = [c.time for c in cfg.churn] + [c.time for c in cfg.corruption] + [s.time for s in cfg.submissions]
    for adv in cfg.adversaries:
        times += [c.time for c in adv.churn] + [c.time for c in adv.corruption]
    times += list(b.times or ()) + [t for t, _ in b.bursts]
    for t in times:
        if not 1 <= t <= cfg.horizon:
            raise InvalidSchedule(f"scheduled time {t} outside [1, {cfg.horizon}]")


# -- loading ---------------------------------------------------------------

def _frac(x) -> Fraction:
    return Fraction(str(x))


def _build(cls, data: dict | None, **converters):
    data = dict(data or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{cls.__name__}: unknown keys {sorted(unknown)}")
    for key, conv in converters.items():
        if key in data and data[key] is not None:
            data[key] = conv(data[key])
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"{cls.__name__}: {e}") from e


def _churn(items):
    return tuple(_build(ChurnEvent, c, leave=tuple) for c in items)


def _corruption(items):
    return tuple(_build(Corruption, c) for c in items)


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping")
    return _build(
        ScenarioConfig,
        data,
        blocks=lambda b: _build(
            BlockSchedule, b,
            times=lambda ts: tuple(int(t) for t in ts),
            bursts=lambda bs: tuple((int(t), int(s)) for t, s in bs),
        ),
        fork_probability=_frac,
        g_max=_frac,
        churn=_churn,
        corruption=_corruption,
        submissions=lambda items: tuple(_build(Submission, s) for s in items),
        triggered_submissions=lambda items: tuple(_build(TriggeredSubmission, s) for s in items),
        props=lambda d: tuple(sorted((k, _build(PropRule, v)) for k, v in d.items())),
        adversaries=lambda items: tuple(
            _build(
                AdversaryProtocol, a,
                delay=lambda d: _build(DelayPolicy, d),
                corruption=_corruption,
                churn=_churn,
                weights=lambda ws: tuple(_frac(w) for w in ws),
            )
            for a in items
        ),
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}") from e
    return config_from_dict(data)
