"""Acceptance gate: one test per criterion.

Each test records a short detail string; the conftest hook prints a
``criterion N: PASS/FAIL`` line per criterion at the end of the session.
"""

import random
from fractions import Fraction

import pytest

from helpers import SCENARIOS, make_run, make_system
from ledgerknow.cli import main
from ledgerknow.game import SIGN_ON_E, DeviationClass, GameSpec, stable_agents
from ledgerknow.logic.theorems import check_theorem4
from ledgerknow.prob import check_theorem5
from ledgerknow.properties import check_acceptability, check_t_consistency
from ledgerknow.scenario import load_scenario
from ledgerknow.sim import generate_system
from ledgerknow.suites import (
    GameSetup,
    acc_pool,
    common_agreement,
    formula_pool,
    game_suite,
    load_game_setup,
    prop1_sweep,
    system_matrix,
    y_operators,
)
from ledgerknow.trace import export_system
from test_semantics import CASES, run_case

EPS = [Fraction(0), Fraction(1, 4), Fraction(1, 10)]


@pytest.fixture(scope="module")
def matrix():
    return system_matrix()


@pytest.fixture(scope="module")
def stale():
    cfg = load_scenario(SCENARIOS / "stale.yaml")
    return cfg, generate_system(cfg, workers=1)


def _detail(record_property, text):
    record_property("detail", text)


@pytest.mark.criterion(1, "consistency and weak growth imply acceptability")
def test_criterion_1(matrix, record_property):
    configs = [cfg for cfg, _ in matrix]
    assert {cfg.protocol_variant for cfg in configs} == {"honest-longest-chain", "stale-broadcast", "fork-prone"}
    rep = prop1_sweep(configs, seeds=10, Ts=(0, 1, 2, 5), deltas=(0, 1, 3))
    _detail(record_property, f"{rep['runs']} runs, {rep['premise_cases']} premise cases, {len(rep['violations'])} violations")
    assert rep["runs"] >= 1000 and rep["premise_cases"] > 0
    assert rep["violations"] == []


@pytest.mark.criterion(2, "four-way agreement on the deterministic matrix")
def test_criterion_2(matrix, record_property):
    assert len(matrix) >= 50
    checked, disagreements, seen = 0, [], set()
    for cfg, sys in matrix:
        for T in (0, 1, 2):
            for delta in (0, 1, 3):
                rep = check_theorem4(sys, T, delta)
                checked += 1
                seen.add(rep.conditions["a"])
                if not rep.agree:
                    disagreements.append((cfg.name, T, delta))
    _detail(record_property, f"{len(matrix)} systems, {checked} (T, delta) checks, {len(disagreements)} disagreements")
    assert seen == {True, False}
    assert disagreements == []


@pytest.mark.criterion(3, "consistency without common knowledge on the stale system")
def test_criterion_3(stale, record_property):
    cfg, sys = stale
    consistent = [check_t_consistency(run, cfg.T).holds for run in sys.runs]
    rep = check_theorem4(sys, cfg.T, cfg.delta)
    _detail(record_property, f"consistency {sum(consistent)}/{len(consistent)} runs, C-validity {rep.conditions['d']}")
    assert all(consistent)
    assert rep.conditions["d"] is False
    assert "d" in rep.counterexamples


@pytest.mark.criterion(4, "reachability common knowledge equals the iterated oracle")
def test_criterion_4(matrix, record_property):
    checked = plain = with_acc = 0
    mismatches = []
    for i, (_, sys) in enumerate(matrix):
        for T, delta in ((0, 0), (1, 1)):
            s = sys.with_T(T)
            pool = formula_pool(s, T, random.Random(f"pool:{i}:{T}"), size=24)
            assert len(pool) >= 20
            rep = common_agreement(s, pool, y_operators(delta))
            plain += rep["checked"]
            mismatches += rep["mismatches"]
            sa, pool_acc = acc_pool(sys, T, delta, random.Random(f"acc:{i}:{T}"), size=24)
            rep = common_agreement(sa, pool_acc, y_operators(delta), use_acc=True)
            with_acc += rep["checked"]
            mismatches += rep["mismatches"]
    checked = plain + with_acc
    _detail(record_property, f"{plain} plain + {with_acc} acc-guarded point checks, {len(mismatches)} mismatches")
    assert checked > 0 and mismatches == []


def _good(tx, run_id):
    return make_run([{"a1": "", "a2": ""}, {"a1": tx, "a2": ""}, {"a1": tx, "a2": tx}], run_id)


def _forked(run_id):
    return make_run([{"a1": "", "a2": ""}, {"a1": "x", "a2": "y"}, {"a1": "x", "a2": "y"}], run_id)


def _constructed():
    three_of_four = make_system([_good("a", "g1"), _good("b", "g2"), _good("c", "g3"), _forked("bad")])
    three_cells = make_system(
        [_good("a", "g1"), _good("b", "g2"), _forked("f1"), _good("c", "g3"), _forked("f2")],
        cells=[[0, 1], [2, 3], [4]],
        weights=["1", "0", "1/2", "1/2", "1"],
    )
    return three_of_four, three_cells


@pytest.mark.criterion(5, "probabilistic four-way agreement and the epsilon flip")
def test_criterion_5(matrix, record_property):
    three_of_four, three_cells = _constructed()
    cells_cfg = load_scenario(SCENARIOS / "cells.yaml")
    systems = [s for _, s in matrix] + [three_of_four, three_cells, generate_system(cells_cfg, workers=1)]
    assert all(len(s.cells) <= 3 for s in systems)
    checked, disagreements = 0, []
    for k, sys in enumerate(systems):
        for T, delta in ((0, 1), (1, 1)):
            for eps in EPS:
                checked += 1
                if not check_theorem5(sys, T, delta, eps).agree:
                    disagreements.append((k, T, delta, str(eps)))
    at_quarter = check_theorem5(three_of_four, 0, 1, Fraction(1, 4)).conditions
    at_tenth = check_theorem5(three_of_four, 0, 1, Fraction(1, 10)).conditions
    _detail(record_property, f"{checked} checks, {len(disagreements)} disagreements, 3-of-4 cell: eps=1/4 {at_quarter['a']}, eps=1/10 {at_tenth['a']}")
    assert disagreements == []
    assert all(at_quarter.values()) and not any(at_tenth.values())


@pytest.mark.criterion(6, "sign-on-E equilibrium and the stale exposure")
def test_criterion_6(matrix, stale, record_property):
    games = failures = 0
    for cfg, sys in matrix:
        agents = stable_agents(sys)
        if len(agents) < 3:
            continue
        for T in (0, 1):
            for delta in (0, 1, 2):
                if not all(check_acceptability(run, T, delta) for run in sys.runs):
                    continue
                spec = GameSpec(players=tuple(agents[:2]), judge=agents[2], T=T, delta=delta, delta_tilde=2 * delta)
                setup = GameSetup(spec, DeviationClass.for_horizon(sys.horizon), (SIGN_ON_E, SIGN_ON_E), "worst-case")
                res = game_suite(sys, setup)
                games += 1
                if not (res["acceptable"] and res["timeline_ok"] and res["equilibrium"]["equilibrium"]):
                    failures += 1
    res = game_suite(stale[1], load_game_setup(SCENARIOS / "game.yaml"))
    exposures = res["equilibrium"]["exposures"]
    _detail(record_property, f"{games} acceptable games, {failures} failures, stale exposures {len(exposures)}")
    assert games > 0 and failures == 0
    assert not res["acceptable"] and not res["equilibrium"]["equilibrium"]
    assert exposures and all(e["reason"] for e in exposures)
    assert res["equilibrium"]["best_deviation"] is not None


def _cli(capsys, *argv):
    assert main(list(argv)) in (0, 1)
    return capsys.readouterr().out


@pytest.mark.criterion(7, "byte-identical traces and worker-stable reports")
def test_criterion_7(tmp_path, capsys, monkeypatch, record_property):
    same_traces = 0
    for name in ("honest", "stale", "fork", "cells"):
        a, b = tmp_path / f"{name}.1", tmp_path / f"{name}.2"
        main(["generate", "--scenario", str(SCENARIOS / f"{name}.yaml"), "--out", str(a)])
        main(["generate", "--scenario", str(SCENARIOS / f"{name}.yaml"), "--out", str(b)])
        same_traces += a.read_bytes() == b.read_bytes()
    capsys.readouterr()
    cfg = load_scenario(SCENARIOS / "fork.yaml")
    parallel_trace = export_system(generate_system(cfg, workers=3)) == export_system(generate_system(cfg, workers=1))
    suites = [
        ("suite", "prop1", "--scenario", str(SCENARIOS / "fork.yaml"), "--seeds", "8"),
        ("suite", "thm4", "--scenario", str(SCENARIOS / "stale.yaml")),
        ("suite", "thm5", "--scenario", str(SCENARIOS / "cells.yaml")),
        ("suite", "game", "--scenario", str(SCENARIOS / "honest.yaml"), "--game", str(SCENARIOS / "game.yaml")),
    ]
    stable = 0
    for argv in suites:
        outs = []
        for workers in ("1", "3"):
            monkeypatch.setenv("LEDGERKNOW_WORKERS", workers)
            outs.append(_cli(capsys, *argv, "--format", "structured"))
        stable += outs[0] == outs[1]
    _detail(record_property, f"{same_traces}/4 traces identical, {stable}/{len(suites)} suite reports worker-stable")
    assert same_traces == 4 and parallel_trace and stable == len(suites)


@pytest.mark.criterion(8, "every semantic clause has positive and negative cases")
def test_criterion_8(record_property):
    outcomes = {}
    wrong = []
    for case in CASES:
        outcomes.setdefault(case[0], set()).add(case[6])
        if run_case(case) is not case[6]:
            wrong.append(case[:3])
    incomplete = [c for c, seen in outcomes.items() if seen != {True, False}]
    _detail(record_property, f"{len(outcomes)} clauses, {len(CASES)} cases, {len(wrong)} wrong, {len(incomplete)} one-sided")
    assert {"knows-perspective", "knows-absent", "common", "believes-acc", "init"} <= set(outcomes)
    assert wrong == [] and incomplete == []
