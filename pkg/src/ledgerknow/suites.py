"""Mechanized checks over generated systems, shared by the CLI and the tests.

Each suite returns a plain dict report with a boolean ``passed``.
"""

from __future__ import annotations

import dataclasses
import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Iterable, Sequence

import yaml

from .game import (
    DeviationClass,
    GameSpec,
    Never,
    SIGN_ON_E,
    Strategy,
    FixedTime,
    Threshold,
    check_equilibrium,
    timeline,
    timeline_holds,
)
from .logic.evaluator import EvalContext, iterated_common
from .logic.formula import (
    Acc,
    And,
    Box,
    E,
    Formula,
    Honest,
    HonestSelf,
    K,
    Next,
    Not,
    Or,
    Implies,
    Prop,
    TPrefix,
    TPrefixSelf,
    Top,
    YOp,
    Y_NONE,
)
from .logic.theorems import check_theorem4, realized_t_prefixes
from .model import InterpretedSystem
from .prob import build_acceptable_interpretation, check_theorem5
from .properties import check_acceptability, check_t_consistency, check_weak_growth
from .scenario import ConfigError, ScenarioConfig, config_from_dict
from .sim import generate_system, worker_count

VARIANTS = ("honest-longest-chain", "stale-broadcast", "fork-prone")


# -- consistency and growth imply acceptability ---------------------------


def _prop1_job(job) -> tuple[int, int, list[dict]]:
    cfg, k, Ts, deltas = job
    sys = generate_system(cfg, seed_offset=k * cfg.n_runs, workers=1)
    premise = 0
    violations = []
    for run in sys.runs:
        for T in Ts:
            cons = check_t_consistency(run, T).holds
            for d in deltas:
                if cons and check_weak_growth(run, d).holds:
                    premise += 1
                    acc = check_acceptability(run, T, d)
                    if not acc:
                        violations.append({"scenario": cfg.name, "run": run.run_id, "T": T, "delta": d, "witness": list(acc.witness)})
    return len(sys.runs), premise, violations


def prop1_sweep(
    configs: Iterable[ScenarioConfig],
    seeds: int,
    Ts: Sequence[int] = (0, 1, 2, 5),
    deltas: Sequence[int] = (0, 1, 3),
    workers: int | None = None,
) -> dict:
    """Consistency and weak growth imply acceptability, on every generated run
    and every ``(T, delta)`` pair."""
    jobs = [(cfg, k, tuple(Ts), tuple(deltas)) for cfg in configs for k in range(seeds)]
    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_prop1_job, jobs, chunksize=16))
    else:
        results = [_prop1_job(job) for job in jobs]
    return {
        "suite": "prop1",
        "passed": not any(v for _, _, v in results),
        "runs": sum(n for n, _, _ in results),
        "premise_cases": sum(p for _, p, _ in results),
        "violations": [x for _, _, v in results for x in v],
    }


# -- acceptability versus knowledge ---------------------------------------


def thm4_suite(sys: InterpretedSystem, T: int, delta: int) -> dict:
    rep = check_theorem4(sys, T, delta)
    out = rep.as_dict()
    out.update(suite="thm4", T=T, delta=delta, passed=rep.agree, acceptable=rep.conditions["a"])
    return out


def thm5_suite(sys: InterpretedSystem, T: int, delta: int, eps_values: Sequence) -> dict:
    results = []
    for eps in eps_values:
        rep = check_theorem5(sys, T, delta, eps)
        d = rep.as_dict()
        d["eps"] = str(Fraction(eps))
        results.append(d)
    return {"suite": "thm5", "T": T, "delta": delta, "passed": all(r["agree"] for r in results), "results": results}


# -- common knowledge: reachability vs iteration ----------------------------------


def formula_pool(sys: InterpretedSystem, T: int, rng: random.Random | None = None, size: int = 24) -> list[Formula]:
    """Mix of fixed and random formulas over the system's own vocabulary."""
    Xs = realized_t_prefixes(sys, T)
    agents = list(sys.agents)
    props = sorted(sys.interpretation.props)
    base: list[Formula] = [Top(), HonestSelf(), Not(HonestSelf())]
    for X in Xs[:4]:
        base.append(TPrefixSelf(X))
        base.append(Implies(HonestSelf(), TPrefixSelf(X)))
    for a in agents[:3]:
        base.append(Honest(a))
        if Xs:
            base.append(TPrefix(Xs[-1], a))
    base += [Prop(p) for p in props]
    rng = rng or random.Random(0)
    atoms = list(base)

    def rand(depth: int) -> Formula:
        if depth == 0 or rng.random() < 0.3:
            return rng.choice(atoms)
        op = rng.randrange(6)
        if op == 0:
            return Not(rand(depth - 1))
        if op == 1:
            return And(rand(depth - 1), rand(depth - 1))
        if op == 2:
            return Or(rand(depth - 1), rand(depth - 1))
        if op == 3:
            return Next(rng.randrange(3), rand(depth - 1))
        if op == 4:
            return Box(rand(depth - 1))
        return K(rng.choice(agents), rand(depth - 1))

    pool = list(dict.fromkeys(base))
    while len(pool) < size:
        f = rand(3)
        if f not in pool:
            pool.append(f)
    return pool


def y_operators(delta: int) -> list[YOp]:
    return [Y_NONE, YOp(delta, False), YOp(delta, True)]


def common_agreement(
    sys: InterpretedSystem,
    formulas: Sequence[Formula],
    ys: Sequence[YOp],
    use_acc: bool = False,
    set_name: str = "H",
) -> dict:
    """Reachability-based C against the iterated-conjunction oracle at every point."""
    ctx = EvalContext(sys)
    checked = 0
    mismatches = []
    for f in formulas:
        for y in ys:
            oracle = iterated_common(ctx, set_name, y, f, use_acc)
            for (r, m), want in oracle.items():
                checked += 1
                got = ctx.eval_common(set_name, y, f, r, m, use_acc)
                if got != want:
                    mismatches.append({"formula": str(f), "y": str(y), "run": r, "time": m, "reach": got, "oracle": want})
    return {"passed": not mismatches, "checked": checked, "mismatches": mismatches}


# -- game -----------------------------------------------------------------------


def parse_strategy(text: str) -> Strategy:
    text = text.strip()
    if text == "never":
        return Never()
    for prefix, cls in (("threshold(", Threshold), ("fixed(", FixedTime)):
        if text.startswith(prefix) and text.endswith(")"):
            try:
                return cls(int(text[len(prefix):-1]))
            except ValueError:
                break
    raise ConfigError(f"unknown strategy {text!r}; use threshold(k), fixed(t) or never")


@dataclasses.dataclass(frozen=True)
class GameSetup:
    spec: GameSpec
    deviations: DeviationClass | None
    profile: tuple[Strategy, Strategy]
    mode: str


_GAME_KEYS = {
    "event", "T", "delta", "delta_tilde", "u_high", "judge", "players", "mode",
    "ledger_window", "block_budget", "equilibrium", "deviations", "profile",
}


def game_setup_from_dict(data: dict) -> GameSetup:
    if not isinstance(data, dict):
        raise ConfigError("game spec must be a mapping")
    unknown = set(data) - _GAME_KEYS
    if unknown:
        raise ConfigError(f"game spec: unknown keys {sorted(unknown)}")
    try:
        spec = GameSpec(
            players=tuple(data.get("players", ("a1", "a2"))),
            judge=data.get("judge", "a3"),
            event_tx=str(data.get("event", "e")),
            T=int(data.get("T", 0)),
            delta=int(data.get("delta", 0)),
            delta_tilde=int(data.get("delta_tilde", 2 * int(data.get("delta", 0)))),
            u_high=Fraction(str(data.get("u_high", 1))),
            mode=data.get("mode", "external"),
            ledger_window=data.get("ledger_window"),
            block_budget=data.get("block_budget"),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"game spec: {e}") from e
    dev = data.get("deviations")
    deviations = None
    if dev is not None:
        extra = set(dev) - {"max_threshold", "max_fixed_time", "never"}
        if extra:
            raise ConfigError(f"game spec deviations: unknown keys {sorted(extra)}")
        deviations = DeviationClass(int(dev["max_threshold"]), int(dev["max_fixed_time"]), bool(dev.get("never", True)))
    profile = tuple(parse_strategy(s) for s in data.get("profile", ("threshold(0)", "threshold(0)")))
    if len(profile) != 2:
        raise ConfigError("game spec: profile needs one strategy per player")
    mode = data.get("equilibrium", "worst-case")
    if mode not in ("worst-case", "expectation"):
        raise ConfigError(f"game spec: equilibrium must be worst-case or expectation, not {mode!r}")
    return GameSetup(spec, deviations, profile, mode)


def load_game_setup(path) -> GameSetup:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read game spec {path}: {e}") from e
    return game_setup_from_dict(data)


def game_suite(sys: InterpretedSystem, setup: GameSetup) -> dict:
    """Acceptable systems must satisfy the signing-time bounds and keep the profile
    in equilibrium; on other systems the report shows what breaks."""
    spec = setup.spec
    acceptable = all(check_acceptability(run, spec.T, spec.delta) for run in sys.runs)
    timelines = []
    for run in sys.runs:
        if check_acceptability(run, spec.T, spec.delta):
            s1, s2, m_e = timeline(run, spec)
            timelines.append({"run": run.run_id, "sign_times": [s1, s2], "m_event": m_e, "holds": timeline_holds(run, spec)})
    eq = check_equilibrium(sys, spec, setup.profile, setup.deviations, setup.mode)
    timeline_ok = all(t["holds"] for t in timelines)
    return {
        "suite": "game",
        "passed": (not acceptable) or (timeline_ok and eq.equilibrium),
        "acceptable": acceptable,
        "timeline_ok": timeline_ok,
        "timelines": timelines,
        "equilibrium": eq.as_dict(),
    }


# -- test matrix -----------------------------------------------------------------


def _matrix_config(variant: str, k: int) -> ScenarioConfig:
    rng = random.Random(f"matrix:{variant}:{k}")
    n_agents = rng.choice((2, 3, 3, 4))
    delay = rng.choice((0, 1, 1, 2)) if variant != "honest-longest-chain" else rng.choice((0, 1))
    imin = delay + 1 if variant == "honest-longest-chain" else rng.choice((1, 2))
    imax = imin + rng.choice((0, 1))
    horizon = rng.randint(max(7, delay + 6), 12)
    adv = [{"id": "adv0", "delay": {"kind": rng.choice(("fixed", "random")), "value": delay}}]
    n_runs = rng.choice((1, 2, 3))
    if rng.random() < 0.3:
        adv.append({"id": "adv1", "delay": {"kind": "fixed", "value": 0}})
        n_runs = min(n_runs, 3)
    data = {
        "name": f"{variant}-{k}",
        "n_initial_agents": n_agents,
        "horizon": horizon,
        "max_message_delay": delay,
        "protocol_variant": variant,
        "blocks": {"interval_min": imin, "interval_max": imax},
        "submissions": [{"agent": "a1", "time": 1, "tx": "e"}],
        "n_runs": n_runs,
        "seed": 100 * k,
        "adversaries": adv,
        "props": {"e_settled": {"tx": "e", "agent": "all-honest"}},
    }
    if variant == "fork-prone":
        data["fork_probability"] = rng.choice(("1", "1/2"))
    if variant != "stale-broadcast" and n_agents >= 3 and rng.random() < 0.25:
        data["corruption"] = [{"agent": f"a{n_agents}", "time": rng.randint(2, 4)}]
    if n_agents <= 3 and rng.random() < 0.2:
        data["churn"] = [{"time": rng.randint(2, 4), "join": 1}]
    return config_from_dict(data)


def system_matrix(per_variant: int = 18) -> list[tuple[ScenarioConfig, InterpretedSystem]]:
    """Small generated systems across all variants (runs <= 6, horizon <= 12,
    agents <= 4)."""
    out = []
    for variant, k in itertools.product(VARIANTS, range(per_variant)):
        cfg = _matrix_config(variant, k)
        sys = generate_system(cfg, workers=1)
        assert len(sys.runs) <= 6 and sys.horizon <= 12 and len(sys.agents) <= 4
        out.append((cfg, sys))
    return out



def acc_pool(sys: InterpretedSystem, T: int, delta: int, rng: random.Random | None = None, size: int = 24) -> tuple[InterpretedSystem, list[Formula]]:
    """Canonical-acc system plus a pool that also mentions acc."""
    s = build_acceptable_interpretation(sys, T, delta)
    pool = formula_pool(s, T, rng, size - 2)
    return s, pool + [Acc(), Implies(Acc(), HonestSelf())]
