import dataclasses
from fractions import Fraction

import pytest

from ledgerknow.model import is_prefix
from ledgerknow.properties import (
    check_acceptability,
    check_liveness,
    check_t_consistency,
    check_weak_growth,
)
from ledgerknow.scenario import ConfigError, HorizonTooShort, InvalidSchedule, config_from_dict
from ledgerknow.sim import generate_run, generate_system
from ledgerknow.trace import export_system


def cfg(**kw):
    base = {"n_initial_agents": 3, "horizon": 5, "max_message_delay": 0, "protocol_variant": "honest-longest-chain"}
    base.update(kw)
    return config_from_dict(base)


def test_honest_zero_delay_ledgers_identical_at_every_step():
    c = cfg(submissions=[{"agent": "a1", "time": 1, "tx": "e"}])
    run = generate_run(c, c.adversaries[0], seed=0)
    for m in range(run.horizon + 1):
        ledgers = {run.ledger(a, m).ids() for a in ("a1", "a2", "a3")}
        assert len(ledgers) == 1
    # blocks at 1, 2, 3: an empty block, then e (pending since 1), then another
    assert run.ledger("a2", 5).ids() == ("b1", "e", "b2")


def test_generation_is_deterministic():
    c = cfg(max_message_delay=1, blocks={"interval_min": 2, "interval_max": 3}, horizon=10,
            adversaries=[{"id": "x", "delay": {"kind": "random", "value": 1}}], n_runs=3)
    assert generate_run(c, c.adversaries[0], 4) == generate_run(c, c.adversaries[0], 4)
    assert export_system(generate_system(c)) == export_system(generate_system(c))


def test_workers_do_not_change_the_system(monkeypatch):
    c = cfg(max_message_delay=1, blocks={"interval_min": 2, "interval_max": 3}, horizon=10, n_runs=3,
            adversaries=[{"id": "x", "delay": {"kind": "random", "value": 1}}])
    one = export_system(generate_system(c, workers=1))
    monkeypatch.setenv("LEDGERKNOW_WORKERS", "2")
    assert export_system(generate_system(c)) == one


def test_seed_offset_shifts_seeds():
    c = cfg(max_message_delay=1, blocks={"interval_min": 2, "interval_max": 4}, horizon=12, n_runs=2,
            adversaries=[{"id": "x", "delay": {"kind": "random", "value": 1}}])
    a = generate_system(c, seed_offset=1)
    b = generate_system(c)
    assert a.runs[0] == b.runs[1]
    assert [r.run_id for r in a.runs] == ["x/1", "x/2"]


def test_fork_prone_breaks_consistency_at_T0():
    c = cfg(n_initial_agents=2, protocol_variant="fork-prone", horizon=6)
    run = generate_run(c, c.adversaries[0], 0)
    rep = check_t_consistency(run, 0)
    assert not rep.holds
    i, j, m, m2, X = rep.witness
    Y = run.ledger(j, m2).ids()
    # a real fork: neither ledger extends the other
    assert i != j and not is_prefix(X, Y) and not is_prefix(Y, X)


def test_stale_agent_lags_but_stays_consistent():
    c = cfg(protocol_variant="stale-broadcast", horizon=8, stale_lag=1,
            blocks={"times": [1, 2, 3]})
    run = generate_run(c, c.adversaries[0], 0)
    assert len(run.ledger("a2", 8)) == len(run.ledger("a1", 8)) - 1
    assert check_t_consistency(run, 1).holds
    assert not check_t_consistency(run, 0).holds
    assert not check_weak_growth(run, 3).holds
    assert not check_acceptability(run, 1, 3).holds


def test_system_shape_and_weights():
    c = cfg(n_runs=3, adversaries=[{"id": "p"}, {"id": "q", "weights": ["1/2", "1/4", "1/4"]}])
    s = generate_system(c)
    assert len(s.runs) == 6 and s.cells == ((0, 1, 2), (3, 4, 5))
    assert s.cell_names == ("p", "q")
    for cell in s.cells:
        assert sum(s.weights[r] for r in cell) == 1
    assert s.weights[:3] == (Fraction(1, 3),) * 3


def test_honest_variant_runs_are_acceptable():
    c = cfg(horizon=12, max_message_delay=2, blocks={"interval_min": 3, "interval_max": 4}, n_runs=4,
            adversaries=[{"id": "x", "delay": {"kind": "random", "value": 2}}])
    s = generate_system(c)
    for run in s.runs:
        assert check_t_consistency(run, 1).holds
        assert check_weak_growth(run, 2).holds
        assert check_acceptability(run, 1, 2).holds


def test_honest_ledgers_only_grow_and_corruption_sticks():
    c = cfg(horizon=12, n_initial_agents=4, max_message_delay=1, blocks={"interval_min": 2, "interval_max": 3},
            corruption=[{"agent": "a4", "time": 3}], churn=[{"time": 4, "leave": ["a3"]}], n_runs=3,
            adversaries=[{"id": "x", "delay": {"kind": "random", "value": 1}}])
    for run in generate_system(c).runs:
        assert run.states[-1].content() == run.states[-2].content()
        assert run.stutter_flag
        for m in range(run.horizon):
            for a in run.at(m).honest & run.at(m + 1).honest:
                assert run.ledger(a, m + 1).ids()[: len(run.ledger(a, m))] == run.ledger(a, m).ids()
            for a in run.at(m).agents - run.at(m).honest:
                assert not run.honest(a, m + 1)
        assert "a3" not in run.at(4).agents


def test_joiner_bootstraps_from_longest_honest_ledger():
    c = cfg(horizon=8, churn=[{"time": 3, "join": 1}], blocks={"times": [1, 2, 5]})
    run = generate_run(c, c.adversaries[0], 0)
    assert run.local("a4", 3).initial.ids() == run.ledger("a1", 2).ids()
    assert run.ledger("a4", 8).ids() == run.ledger("a1", 8).ids()


def test_triggered_submission_and_liveness():
    c = cfg(horizon=10, blocks={"interval_min": 1, "interval_max": 1},
            submissions=[{"agent": "a1", "time": 1, "tx": "e"}],
            triggered_submissions=[{"agent": "a2", "tx": "sig.a2", "trigger_tx": "e", "T": 1}])
    run = generate_run(c, c.adversaries[0], 0)
    assert any(t.id == "sig.a2" for m in range(11) for t in run.local("a2", m).submissions())
    assert "sig.a2" in run.ledger("a3", 10).ids()
    assert check_liveness(run, 2).holds


def test_horizon_too_short():
    c = cfg(horizon=4, max_message_delay=2, protocol_variant="fork-prone", blocks={"times": [4]},
            adversaries=[{"id": "x", "delay": {"kind": "fixed", "value": 2}}])
    with pytest.raises(HorizonTooShort):
        generate_run(c, c.adversaries[0], 0)


def test_invalid_schedules():
    with pytest.raises(InvalidSchedule):
        cfg(corruption=[{"agent": "a1", "time": 9}])
    c = cfg(corruption=[{"agent": "a9", "time": 2}])
    with pytest.raises(InvalidSchedule):
        generate_run(c, c.adversaries[0], 0)
    c = cfg(churn=[{"time": 1, "leave": ["a2"]}], submissions=[{"agent": "a2", "time": 2, "tx": "x"}])
    with pytest.raises(InvalidSchedule):
        generate_run(c, c.adversaries[0], 0)


def test_config_errors():
    with pytest.raises(ConfigError):
        cfg(protocol_variant="nope")
    with pytest.raises(ConfigError):
        cfg(bogus=1)
    with pytest.raises(ConfigError):
        cfg(max_message_delay=1)  # honest blocks need spacing beyond the delay
    with pytest.raises(ConfigError):
        cfg(adversaries=[{"id": "x", "delay": {"kind": "fixed", "value": 3}}])
    with pytest.raises(ConfigError):
        cfg(n_runs=2, adversaries=[{"id": "x", "weights": ["1/2", "1/3"]}])


def test_digest_tracks_config_and_offset():
    c = cfg()
    assert c.digest() == cfg().digest()
    assert c.digest(1) != c.digest()
    assert dataclasses.replace(c, horizon=6).digest() != c.digest()
