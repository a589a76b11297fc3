"""Command-line entry point.

Exit codes: 0 pass, 1 assertion failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import report as reports
from .game import SpecViolation, check_equilibrium, play_on_ledger
from .logic.evaluator import EvalContext, PerspectiveRequired, UnknownProposition, check_valid
from .logic.formula import uses_acc
from .logic.parser import ParseError, parse_formula
from .model import InterpretedSystem, MissingAcc
from .prob import build_acceptable_interpretation, check_eps_acceptability
from .properties import CHECKERS
from .scenario import ConfigError, load_scenario
from .sim import generate_system
from .suites import game_suite, load_game_setup, prop1_sweep, thm4_suite, thm5_suite
from .trace import TraceError, read_trace, export_system

log = logging.getLogger("ledgerknow")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _fracs(text: str) -> list[Fraction]:
    try:
        return [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated fractions, got {text!r}")


def _frac(text: str) -> Fraction:
    return _fracs(text)[0]


# -- system loading -------------------------------------------------------------


def _load_system(args) -> tuple[InterpretedSystem, str]:
    trace = getattr(args, "trace", None)
    if trace:
        sys_, header = read_trace(trace)
        return sys_, header.get("digest", "")
    if not args.scenario:
        raise UsageError("need a trace file or --scenario")
    cfg = load_scenario(args.scenario)
    return generate_system(cfg, seed_offset=args.seed_offset), cfg.digest(args.seed_offset)


def _with_acc(system: InterpretedSystem, args) -> InterpretedSystem:
    if args.acc is None:
        return system
    T, delta = args.acc
    return build_acceptable_interpretation(system, T, delta)


def _emit(args, rep: dict) -> None:
    text = reports.render(rep, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# -- commands -------------------------------------------------------------------


def cmd_generate(args) -> int:
    if not args.scenario:
        raise UsageError("generate needs --scenario")
    cfg = load_scenario(args.scenario)
    digest = cfg.digest(args.seed_offset)
    system = generate_system(cfg, seed_offset=args.seed_offset)
    text = export_system(system, digest)
    if args.out:
        Path(args.out).write_text(text)
        print(f"{digest}  {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_check_run(args) -> int:
    system, digest = _load_system(args)
    check = CHECKERS[args.property]
    params = {"T": args.T, "delta": args.Delta, "delta_live": args.Delta_live, "g_max": args.g_max}
    results = []
    for run in sorted(system.runs, key=lambda r: r.run_id):
        r = check(run, params)
        results.append({"run": run.run_id, "holds": r.holds, "witness": None if r.witness is None else list(r.witness)})
    ok = all(r["holds"] for r in results)
    _emit(args, {
        "command": "check-run",
        "status": _status(ok),
        "digest": digest,
        "property": args.property,
        "params": {k: str(v) for k, v in params.items()},
        "runs": results,
    })
    return EXIT_PASS if ok else EXIT_FAIL


def _parse(text: str):
    try:
        return parse_formula(text)
    except ParseError as e:
        raise UsageError(str(e)) from e


def cmd_eval(args) -> int:
    system, digest = _with_acc_loaded(args)
    f = _parse(args.formula)
    ctx = EvalContext(system, common_perspective=args.common_perspective)
    if args.run is None:
        raise UsageError("eval needs --run and --time (use validate for the whole system)")
    if not 0 <= args.run < len(system.runs) or not 0 <= args.time <= system.horizon:
        raise UsageError(f"point ({args.run}, {args.time}) outside the system")
    value = ctx.eval(f, args.run, args.time, args.agent)
    _emit(args, {
        "command": "eval",
        "status": _status(value),
        "digest": digest,
        "formula": str(f),
        "point": {"run": args.run, "time": args.time, "agent": args.agent},
        "value": value,
        "vacuous": len(ctx.vacuous),
    })
    return EXIT_PASS if value else EXIT_FAIL


def _with_acc_loaded(args):
    system, digest = _load_system(args)
    return _with_acc(system, args), digest


def cmd_validate(args) -> int:
    system, digest = _with_acc_loaded(args)
    f = _parse(args.formula)
    if uses_acc(f) and system.interpretation.acc is None:
        raise UsageError("formula uses acc; pass --acc T DELTA or a trace with acc")
    ctx = EvalContext(system, common_perspective=args.common_perspective)
    rep = check_valid(ctx, f)
    cx = rep.counterexample
    _emit(args, {
        "command": "validate",
        "status": _status(rep.valid),
        "digest": digest,
        "formula": str(f),
        "valid": rep.valid,
        "counterexample": None if cx is None else {"run": cx.run, "run_id": system.runs[cx.run].run_id, "time": cx.time, "agent": cx.agent},
        "vacuous": rep.vacuous_points,
    })
    return EXIT_PASS if rep.valid else EXIT_FAIL


def cmd_check_prob(args) -> int:
    system, digest = _load_system(args)
    rep = check_eps_acceptability(system, args.T, args.Delta, args.eps)
    _emit(args, {
        "command": "check-prob",
        "status": _status(rep.holds),
        "digest": digest,
        "T": args.T,
        "delta": args.Delta,
        "eps": str(rep.eps),
        "cells": [
            {"cell": c.cell, "acceptable_mass": str(c.acceptable_mass), "runs": c.runs, "acceptable_runs": c.acceptable_runs}
            for c in rep.cells
        ],
    })
    return EXIT_PASS if rep.holds else EXIT_FAIL


def cmd_game(args) -> int:
    system, digest = _load_system(args)
    setup = load_game_setup(args.game)
    spec = setup.spec
    if spec.mode == "on-ledger":
        plays = []
        for run in sorted(system.runs, key=lambda r: r.run_id):
            out = play_on_ledger(run, spec)
            plays.append({"run": run.run_id, "success": out.success, "utilities": {p: str(u) for p, u in out.utilities.items()}, "m_event": out.m_event})
        ok = all(p["success"] for p in plays)
        _emit(args, {"command": "game", "status": _status(ok), "digest": digest, "mode": "on-ledger", "plays": plays})
        return EXIT_PASS if ok else EXIT_FAIL
    eq = check_equilibrium(system, spec, setup.profile, setup.deviations, setup.mode)
    _emit(args, {"command": "game", "status": _status(eq.equilibrium), "digest": digest, **eq.as_dict()})
    return EXIT_PASS if eq.equilibrium else EXIT_FAIL


def cmd_suite(args) -> int:
    if not args.scenario:
        raise UsageError("suite needs --scenario")
    cfg = load_scenario(args.scenario)
    digest = cfg.digest(args.seed_offset)
    if args.suite == "prop1":
        rep = prop1_sweep([cfg], args.seeds, args.T_list, args.Delta_list)
    else:
        system = generate_system(cfg, seed_offset=args.seed_offset)
        T = cfg.T if args.T is None else args.T
        delta = cfg.delta if args.Delta is None else args.Delta
        if args.suite == "thm4":
            rep = thm4_suite(system, T, delta)
            if not rep["acceptable"]:
                rep["notes"].append("conditions are all false: the system is not acceptable")
        elif args.suite == "thm5":
            rep = thm5_suite(system, T, delta, args.eps_list)
        else:
            if not args.game:
                raise UsageError("suite game needs --game <spec file>")
            rep = game_suite(system, load_game_setup(args.game))
    ok = rep.pop("passed")
    _emit(args, {"command": "suite", "status": _status(ok), "digest": digest, **rep})
    return EXIT_PASS if ok else EXIT_FAIL


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (YAML)")
    common.add_argument("--seed-offset", type=int, default=0, help="shift every run seed")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ledgerknow", description="Ledger protocol simulator and epistemic model checker.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="simulate a scenario and write its trace")

    def with_trace(sp):
        sp.add_argument("trace", nargs="?", help="trace file; otherwise --scenario is simulated")

    def with_acc(sp):
        sp.add_argument("--acc", nargs=2, type=int, metavar=("T", "DELTA"), help="interpret acc as (T, DELTA)-acceptability")
        sp.add_argument("--common-perspective", choices=("witness", "none"), default="witness")

    sp = sub.add_parser("check-run", parents=[common], help="check a ledger property on every run")
    with_trace(sp)
    sp.add_argument("--property", required=True, choices=sorted(CHECKERS))
    sp.add_argument("--T", type=int, default=0)
    sp.add_argument("--Delta", type=int, default=0)
    sp.add_argument("--Delta-live", type=int, default=0)
    sp.add_argument("--g-max", type=_frac, default=Fraction(1))

    sp = sub.add_parser("eval", parents=[common], help="evaluate a formula at one point")
    with_trace(sp)
    sp.add_argument("--formula", required=True)
    sp.add_argument("--run", type=int)
    sp.add_argument("--time", type=int, default=0)
    sp.add_argument("--agent", help="perspective agent")
    with_acc(sp)

    sp = sub.add_parser("validate", parents=[common], help="check a formula at every point")
    with_trace(sp)
    sp.add_argument("--formula", required=True)
    with_acc(sp)

    sp = sub.add_parser("check-prob", parents=[common], help="per-cell acceptable mass against 1 - eps")
    with_trace(sp)
    sp.add_argument("--T", type=int, required=True)
    sp.add_argument("--Delta", type=int, required=True)
    sp.add_argument("--eps", type=_frac, required=True)

    sp = sub.add_parser("game", parents=[common], help="equilibrium check for the contract game")
    with_trace(sp)
    sp.add_argument("--game", required=True, help="game spec file (YAML)")

    sp = sub.add_parser("suite", parents=[common], help="run a mechanized check over a scenario")
    sp.add_argument("suite", choices=("prop1", "thm4", "thm5", "game"))
    sp.add_argument("--T", type=int, help="defaults to the scenario's T")
    sp.add_argument("--Delta", type=int, help="defaults to the scenario's delta")
    sp.add_argument("--T-list", type=_ints, default=[0, 1, 2, 5], help="prop1 only")
    sp.add_argument("--Delta-list", type=_ints, default=[0, 1, 3], help="prop1 only")
    sp.add_argument("--seeds", type=int, default=1000, help="prop1 only: systems to generate")
    sp.add_argument("--eps-list", type=_fracs, default=[Fraction(0), Fraction(1, 4), Fraction(1, 10)], help="thm5 only")
    sp.add_argument("--game", help="game spec file (game suite)")
    return p


COMMANDS = {
    "generate": cmd_generate,
    "check-run": cmd_check_run,
    "eval": cmd_eval,
    "validate": cmd_validate,
    "check-prob": cmd_check_prob,
    "game": cmd_game,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, TraceError, UsageError, SpecViolation, MissingAcc, PerspectiveRequired, UnknownProposition, reports.ReportError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # never let a crash read as an assertion failure
        log.debug("unhandled error", exc_info=True)
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
