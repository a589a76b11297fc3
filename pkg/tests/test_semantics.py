"""Satisfaction clauses on small hand-built systems.

``CASES`` is a table of ``(clause, system, formula, run, time, agent, expected)``;
every clause appears with at least one true and one false case.
"""

import random

import pytest

from helpers import make_run, make_system, tx_on
from ledgerknow.logic.evaluator import EvalContext, PerspectiveRequired, UnknownProposition, check_valid
from ledgerknow.logic.formula import And, B, E, Honest, HonestSelf, Implies, K, Not, Prop, Top
from ledgerknow.logic.parser import parse_formula
from ledgerknow.model import MissingAcc, Point
from ledgerknow.suites import formula_pool, system_matrix


def _two_runs():
    # a1 cannot tell the runs apart at time 0; a2 always can.
    # a2 is dishonest throughout r1; a3 appears in r0 at time 1.
    r0 = make_run([{"a1": "", "a2": "x"}, {"a1": "x", "a2": "x", "a3": "x"}], "r0")
    r1 = make_run([{"a1": "", "a2": "y"}, {"a1": "y", "a2": "y"}], "r1", honest=[{"a1"}, {"a1"}])
    props = {"p": tx_on("a2", "x"), "q": tx_on("a1", "x"), "r": tx_on("a1", "y")}
    return make_system([r0, r1], T=0, props=props, acc=[True, False])


def _all_dishonest():
    return make_system([make_run([{"a1": ""}], honest=[set()])])


SYSTEMS = {"two": _two_runs(), "dishonest": _all_dishonest()}

CASES = [
    ("constant", "two", "true", 0, 0, None, True),
    ("constant", "two", "false", 0, 0, None, False),
    ("honest", "two", "honest(a2)", 0, 1, None, True),
    ("honest", "two", "honest(a2)", 1, 1, None, False),
    ("honest-self", "two", "Honest", 1, 1, "a1", True),
    ("honest-self", "two", "Honest", 1, 1, "a2", False),
    ("tprefix", "two", "tprefix([x], L_a1)", 0, 1, None, True),
    ("tprefix", "two", "tprefix([x], L_a1)", 0, 0, None, False),
    ("tprefix-self", "two", "tprefix([x], L)", 0, 0, "a2", True),
    ("tprefix-self", "two", "tprefix([x], L)", 0, 0, "a1", False),
    ("acc", "two", "acc", 0, 0, None, True),
    ("acc", "two", "acc", 1, 0, None, False),
    ("prop", "two", "prop(p)", 0, 0, None, True),
    ("prop", "two", "prop(p)", 1, 0, None, False),
    ("not", "two", "!prop(p)", 1, 0, None, True),
    ("not", "two", "!prop(p)", 0, 0, None, False),
    ("and", "two", "prop(p) & prop(q)", 0, 1, None, True),
    ("and", "two", "prop(p) & prop(q)", 0, 0, None, False),
    ("or", "two", "prop(p) | prop(q)", 0, 0, None, True),
    ("or", "two", "prop(p) | prop(q)", 1, 0, None, False),
    ("implies", "two", "prop(r) -> prop(p)", 0, 0, None, True),
    ("implies", "two", "prop(r) -> prop(p)", 1, 1, None, False),
    ("always", "two", "G prop(q)", 0, 1, None, True),
    ("always", "two", "G prop(q)", 0, 0, None, False),
    ("next", "two", "X^1 prop(q)", 0, 0, None, True),
    ("next", "two", "X^1 prop(q)", 1, 0, None, False),
    ("next-clamped", "two", "X^9 prop(q)", 0, 2, None, True),
    ("next-clamped", "two", "X^9 prop(r)", 0, 0, None, False),
    ("knows", "two", "K_a1 prop(p)", 0, 1, None, True),
    ("knows", "two", "K_a1 prop(p)", 0, 0, None, False),
    # the argument of K_j is read from j's point of view, whoever asks
    ("knows-perspective", "two", "K_a2 tprefix([x], L)", 0, 0, "a1", True),
    ("knows-perspective", "two", "K_a1 tprefix([x], L)", 0, 0, "a2", False),
    ("knows-absent", "two", "K_a3 false", 0, 0, None, True),
    ("knows-absent", "two", "K_a3 false", 0, 1, None, False),
    ("believes", "two", "B[H]_a2 false", 1, 1, None, True),
    ("believes", "two", "B[H]_a2 false", 0, 1, None, False),
    ("believes-acc", "two", "B[H; acc]_a1 prop(p)", 0, 0, None, True),
    ("believes-acc", "two", "B[H]_a1 prop(p)", 0, 0, None, False),
    ("everyone", "two", "E[H] prop(p)", 0, 1, None, True),
    ("everyone", "two", "E[H] prop(p)", 0, 0, None, False),
    ("everyone-empty", "dishonest", "E[H] false", 0, 0, None, True),
    ("everyone-empty", "dishonest", "E[A] false", 0, 0, None, False),
    ("common", "two", "C[H; acc] prop(p)", 0, 1, None, True),
    ("common", "two", "C[H] prop(p)", 0, 1, None, False),
    ("common-y", "two", "C[H; X^1 G] prop(p)", 0, 0, None, True),
    ("common-y", "two", "C[H; X^1 G] prop(p)", 1, 0, None, False),
    ("init", "two", "init>=1/2 prop(p)", 1, 2, None, True),
    ("init", "two", "init>=3/4 prop(p)", 0, 0, None, False),
]


def run_case(case) -> bool:
    _, sys_key, text, r, m, agent, _ = case
    ctx = EvalContext(SYSTEMS[sys_key])
    return ctx.eval(parse_formula(text), r, m, agent)


@pytest.mark.parametrize("case", CASES, ids=[f"{c[0]}-{c[6]}" for c in CASES])
def test_clause(case):
    assert run_case(case) is case[6]


def test_every_clause_has_both_outcomes():
    seen = {}
    for c in CASES:
        seen.setdefault(c[0], set()).add(c[6])
    assert all(v == {True, False} for v in seen.values())


# -- errors ------------------------------------------------------------------------


def test_agent_relative_formula_needs_perspective():
    ctx = EvalContext(SYSTEMS["two"])
    with pytest.raises(PerspectiveRequired):
        ctx.eval(HonestSelf(), 0, 0)
    with pytest.raises(PerspectiveRequired):
        ctx.eval(parse_formula("tprefix([x], L)"), 0, 0)
    # inside K the perspective is supplied
    assert ctx.eval(K("a1", HonestSelf()), 0, 0)


def test_acc_without_interpretation():
    sys = make_system([make_run([{"a1": ""}])])
    ctx = EvalContext(sys)
    with pytest.raises(MissingAcc):
        ctx.eval(parse_formula("acc"), 0, 0)
    with pytest.raises(MissingAcc):
        check_valid(ctx, parse_formula("C[H; acc] true"))


def test_unknown_proposition():
    with pytest.raises(UnknownProposition):
        EvalContext(SYSTEMS["two"]).eval(Prop("nope"), 0, 0)


def test_bad_common_perspective_mode():
    with pytest.raises(ValueError):
        EvalContext(SYSTEMS["two"], common_perspective="first")


# -- validity ------------------------------------------------------------------------


def test_validity_ranges_over_every_agent():
    ctx = EvalContext(SYSTEMS["two"])
    rep = check_valid(ctx, HonestSelf())
    assert not rep and rep.counterexample == Point(0, 0, "a3")
    assert check_valid(ctx, Implies(HonestSelf(), HonestSelf()))


def test_validity_reports_vacuous_points():
    rep = check_valid(EvalContext(SYSTEMS["two"]), K("a3", Top()))
    assert rep.valid and rep.vacuous_points == 4


def test_witness_perspective_makes_honesty_common():
    # every reached point is witnessed by an agent honest there
    ctx = EvalContext(SYSTEMS["two"])
    assert check_valid(ctx, parse_formula("C[H] Honest"))
    assert not check_valid(ctx, parse_formula("C[A] Honest"))
    with pytest.raises(PerspectiveRequired):
        EvalContext(SYSTEMS["two"], common_perspective="none").eval(parse_formula("C[H] Honest"), 0, 0)


def test_perspective_free_common_ignores_mode():
    f = parse_formula("C[H; X^1 G] prop(q)")
    a = EvalContext(SYSTEMS["two"])
    b = EvalContext(SYSTEMS["two"], common_perspective="none")
    assert all(a.eval(f, r, m) == b.eval(f, r, m) for r, m in SYSTEMS["two"].points())


# -- laws over generated systems ---------------------------------------------------------


@pytest.fixture(scope="module")
def generated():
    return [s for _, s in system_matrix(per_variant=2)]


def test_knowledge_implies_belief(generated):
    rng = random.Random(1)
    for sys in generated:
        ctx = EvalContext(sys)
        for f in formula_pool(sys, 1, rng, size=12):
            for a in sys.agents:
                assert check_valid(ctx, Implies(K(a, f), B(a, f, "H"))), (a, f)


def test_everyone_is_conjunction_of_knowledge_when_honesty_is_known(generated):
    rng = random.Random(2)
    checked = 0
    for sys in generated:
        ctx = EvalContext(sys)
        knows_own_honesty = all(
            ctx.eval(K(a, HonestSelf()), r, m) or ctx.eval(K(a, Not(HonestSelf())), r, m)
            for r, m in sys.points() for a in sys.runs[r].at(m).agents
        )
        if not knows_own_honesty:
            continue
        for f in formula_pool(sys, 1, rng, size=10):
            for r, m in sys.points():
                want = all(ctx.eval(K(a, f), r, m) for a in sys.members("H", r, m))
                assert ctx.eval(E(f, "H"), r, m) == want
        checked += 1
    assert checked


def test_memo_is_transparent(generated):
    rng = random.Random(3)
    for sys in generated[:3]:
        fast, slow = EvalContext(sys), EvalContext(sys, memo=False)
        for f in formula_pool(sys, 1, rng, size=12):
            f = And(f, Honest(sys.agents[0]))
            for r, m in sys.points():
                for a in sys.agents:
                    assert fast.eval(f, r, m, a) == slow.eval(f, r, m, a)
