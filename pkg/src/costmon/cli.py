"""Command-line front end tying the pipeline together.

Subcommands expose each stage (parse, unwind, tableau, group) plus the
simulator (simulate) and the decentralized-versus-centralized comparison
harness (check).  Exit codes: 0 success, 1 formula syntax error, 2 graph
or scenario error, 3 infeasible budget, 4 unobservable atom, 5 verdict
disagreement, 64 usage error.  All output is deterministic for fixed
inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional, Sequence

from .depgraph import GraphError, load_graph_file
from .formulas import (
    And,
    Atom,
    Budget,
    Eventually,
    FalseF,
    Formula,
    FormulaSyntaxError,
    Globally,
    Next,
    Not,
    Or,
    QDep,
    TrueF,
    Until,
    Verdict,
    evaluate_trace_with_position,
    negate,
    parse_formula,
    render_formula,
)
from .grouping import UnobservableAtomError, assign_conjuncts, organize_groups
from .runtime import BudgetWatcher
from .simulator import (
    FaultSpec,
    SimulationResult,
    Scenario,
    example2_scenario,
    latched,
    load_scenario_file,
    plan_monitors,
    random_scenario,
    run_scenario,
    run_simulation,
)
from .sortingline import build_sorting_line_scenario
from .tableau import branches, build_tableau, export_dot
from .unwinding import InfeasibleConstraintError, unwind

EXIT_OK = 0
EXIT_FORMULA = 1
EXIT_GRAPH = 2
EXIT_INFEASIBLE = 3
EXIT_UNOBSERVABLE = 4
EXIT_DISAGREE = 5
EXIT_USAGE = 64

RANDOM_LIMITS = {"max_processes": 6, "max_fanout": 3, "max_cost": 3,
                 "max_rounds": 20}

_VERDICT_NAMES = {Verdict.TRUE: "True", Verdict.FALSE: "False",
                  Verdict.UNKNOWN: "Unknown"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems exit 64, keeping 2 free for graph/scenario errors
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(EXIT_USAGE)


def _fault_arg(text: str):
    head, _, target = text.partition(":")
    kind, sep, rnd = head.partition("@")
    if not kind or not sep or not rnd.isdigit():
        raise argparse.ArgumentTypeError(
            "expected KIND@ROUND[:TARGET], got %r" % text)
    return kind, int(rnd), (target or None)


def _tamper_arg(text: str):
    idx, sep, val = text.partition("=")
    if not sep or not idx.isdigit():
        raise argparse.ArgumentTypeError("expected IDX=VAL, got %r" % text)
    try:
        value = int(val)
    except ValueError:
        raise argparse.ArgumentTypeError("expected IDX=VAL, got %r" % text)
    return int(idx), value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="costmon",
        description="Decentralized monitoring of cumulative-cost "
                    "temporal properties.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p, formula=False, graph=False, scenario=False):
        if formula:
            p.add_argument("--formula", metavar="F",
                           help="formula text or path to a formula file")
        if graph:
            p.add_argument("--graph", metavar="G",
                           help="path to a dependency graph JSON file")
        if scenario:
            p.add_argument("--scenario", metavar="S",
                           help="builtin name (sorting_line, "
                                "sorting_line_blue, example2, random) or "
                                "path to a scenario JSON file")
            p.add_argument("--rounds", type=int, metavar="N",
                           help="rounds to run (default: scenario choice)")
            p.add_argument("--fault", type=_fault_arg, metavar="K@R[:T]",
                           help="inject fault KIND at round R on target T; "
                                "for builtin scenarios R places the "
                                "afflicted activation")
            p.add_argument("--seed", type=int, default=0, metavar="N",
                           help="seed for the random builtin scenario")
        p.add_argument("--format", choices=("text", "json", "dot"),
                       help="output format (default text; tableau: dot)")
        p.add_argument("--out", metavar="PATH",
                       help="write the full result document to PATH")

    p = sub.add_parser("parse", help="parse a formula, echo canonical form")
    common(p, formula=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("unwind",
                       help="rewrite dependency operators into per-process "
                            "conjuncts with local budgets")
    common(p, formula=True, graph=True)
    p.set_defaults(func=cmd_unwind)

    p = sub.add_parser("tableau", help="decompose a formula into branches")
    common(p, formula=True)
    p.set_defaults(func=cmd_tableau)

    p = sub.add_parser("group",
                       help="assign falsification conjuncts to processes")
    common(p, formula=True, graph=True)
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("simulate", help="run a scenario under its monitors")
    common(p, scenario=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check",
                       help="compare decentralized detection against the "
                            "centralized verdict on the same run")
    common(p, formula=True, scenario=True)
    p.add_argument("--tamper-budget", type=_tamper_arg, metavar="IDX=VAL",
                   help="corrupt the IDX-th synthesized budget to VAL "
                        "(disagreement self-test)")
    p.set_defaults(func=cmd_check)
    return parser


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise _UsageError("--%s is required for this command" % name)


def _read_formula(value: str) -> Formula:
    if os.path.isfile(value):
        with open(value) as fh:
            value = fh.read()
    return parse_formula(value)


def _verdict(v: Verdict) -> str:
    return _VERDICT_NAMES[v]


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _formula_ast(f: Formula) -> dict:
    if isinstance(f, TrueF):
        return {"op": "true"}
    if isinstance(f, FalseF):
        return {"op": "false"}
    if isinstance(f, Atom):
        return {"op": "atom", "name": f.name}
    if isinstance(f, (Not, Next, Eventually, Globally)):
        ops = {Not: "not", Next: "next", Eventually: "eventually",
               Globally: "globally"}
        return {"op": ops[type(f)], "sub": _formula_ast(f.sub)}
    if isinstance(f, (And, Or, Until)):
        ops = {And: "and", Or: "or", Until: "until"}
        return {"op": ops[type(f)], "left": _formula_ast(f.left),
                "right": _formula_ast(f.right)}
    if isinstance(f, QDep):
        return {"op": "dep", "left": _formula_ast(f.left),
                "right": _formula_ast(f.right), "bound": f.bound}
    if isinstance(f, Budget):
        return {"op": "budget", "target": _formula_ast(f.target),
                "remaining": f.remaining}
    raise TypeError("unknown formula node: %r" % (f,))


def cmd_parse(args) -> int:
    _require(args, "formula")
    f = _read_formula(args.formula)
    if args.format == "json":
        doc = {"formula": render_formula(f), "ast": _formula_ast(f)}
        _emit(args, json.dumps(doc, indent=2, sort_keys=True))
    else:
        _emit(args, render_formula(f))
    return EXIT_OK


def cmd_unwind(args) -> int:
    _require(args, "formula", "graph")
    f = _read_formula(args.formula)
    g = load_graph_file(args.graph)
    u = unwind(f, g)
    if args.format == "json":
        doc = {
            "formula": render_formula(f),
            "unwound": render_formula(u.formula),
            "constraints": [
                {"pid": pid, "formula": render_formula(dep),
                 "bound": u.constraint_table[dep]}
                for pid, dep in u.entries],
        }
        _emit(args, json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK
    lines = [render_formula(u.formula)]
    if not u.entries:
        lines.append("nothing to unwind: no dependency operator over "
                     "dependent variables")
    else:
        lines.append("constraints:")
        for pid, dep in u.entries:
            lines.append("  %-4s %s" % (pid, render_formula(dep)))
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_tableau(args) -> int:
    _require(args, "formula")
    f = _read_formula(args.formula)
    root = build_tableau(f)
    fmt = args.format or "dot"
    if fmt == "dot":
        _emit(args, export_dot(root))
        return EXIT_OK
    brs = branches(root)
    if fmt == "json":
        doc = {
            "formula": render_formula(f),
            "branches": [
                {"outcome": b.outcome,
                 "label": [render_formula(x) for x in b.leaf.label]}
                for b in brs],
        }
        _emit(args, json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK
    lines = ["branches: %d" % len(brs)]
    for i, b in enumerate(brs):
        label = ", ".join(render_formula(x) for x in b.leaf.label)
        lines.append("  %d: %s  [%s]" % (i, label, b.outcome))
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_group(args) -> int:
    _require(args, "formula", "graph")
    f = _read_formula(args.formula)
    g = load_graph_file(args.graph)
    u = unwind(f, g)
    neg = negate(u.formula)
    root = build_tableau(neg)
    groups = organize_groups(list(g.processes), root, neg, g)
    assignment = assign_conjuncts(groups, u)
    all_pids = tuple(sorted(p.pid for p in g.processes))
    rows = []
    for group in groups:
        if group.members == all_pids and len(all_pids) > 1:
            members = "(all processes)"
        else:
            members = ",".join(group.members)
        shown = group.formula
        if len(group.members) == 1:
            shown = assignment.get(group.members[0], group.formula)
        rows.append((members, shown))
    if args.format == "json":
        doc = {
            "groups": [
                {"members": list(group.members),
                 "formula": render_formula(group.formula)}
                for group in groups],
            "assignment": {pid: render_formula(af)
                           for pid, af in sorted(assignment.items())},
        }
        _emit(args, json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK
    lines = ["%-16s %s" % ("process(es)", "formula")]
    for members, shown in rows:
        lines.append("%-16s %s" % (members, render_formula(shown)))
    _emit(args, "\n".join(lines))
    return EXIT_OK


def _assemble_scenario(args) -> Scenario:
    _require(args, "scenario")
    name = args.scenario
    fault = getattr(args, "fault", None)
    if name in ("sorting_line", "sorting_line_blue"):
        token = "blue" if name == "sorting_line_blue" else "white"
        if fault is not None:
            kind, rnd, _target = fault
            return build_sorting_line_scenario(token, fault=kind,
                                               stimulus_round=rnd)
        return build_sorting_line_scenario(token)
    if name == "example2":
        if fault is not None:
            kind, rnd, target = fault
            extra = 10 if kind == "delay" else 0
            return example2_scenario(
                fault=FaultSpec(target or "p0", kind, 0, extra),
                stimulus_round=rnd)
        return example2_scenario()
    if name == "random":
        sc = random_scenario(args.seed, RANDOM_LIMITS)
    else:
        sc = load_scenario_file(name)
    if fault is not None:
        kind, rnd, target = fault
        if target is None:
            raise _UsageError("--fault on this scenario needs an explicit "
                              "target (KIND@ROUND:TARGET)")
        extra = 10 if kind == "delay" else 0
        sc = dataclasses.replace(
            sc, faults=sc.faults + (FaultSpec(target, kind, rnd, extra),))
    return sc


def _trace_log_lines(result: SimulationResult) -> list:
    lines = []
    for pid in sorted(result.per_process_traces):
        for rnd, event in enumerate(result.per_process_traces[pid]):
            props = ",".join(sorted(event.props)) or "-"
            lines.append("  round %-3d %-4s %s  cost %d"
                         % (rnd, pid, props, event.cost))
    return lines


def _result_document(name: str, rounds: int, result: SimulationResult) -> dict:
    report = result.report
    return {
        "scenario": name,
        "rounds": rounds,
        "verdict": _verdict(report.global_verdict),
        "detecting_pid": report.detecting_pid,
        "detection_round": report.detection_round,
        "detections": [
            {"round": r, "pid": pid, "formula": render_formula(f)}
            for r, pid, f in report.detections],
        "recovery_log": [
            {"round": r, "fault": "%s@%s" % (f.kind, f.target),
             "action": a.kind, "formula": render_formula(trig)}
            for r, f, a, trig in result.recovery_log],
        "outcome": result.outcome,
        "effective_deadline": result.effective_deadline,
        "messages_total": report.message_total,
        "trace_log": {
            pid: [{"round": rnd, "props": sorted(e.props), "cost": e.cost}
                  for rnd, e in enumerate(trace)]
            for pid, trace in sorted(result.per_process_traces.items())},
    }


def _result_text(name: str, rounds: int, result: SimulationResult) -> str:
    report = result.report
    lines = ["scenario: %s" % name, "rounds: %d" % rounds,
             "verdict: %s" % _verdict(report.global_verdict)]
    if report.detection_round is not None:
        lines.append("detection: round %d by %s"
                     % (report.detection_round, report.detecting_pid))
    for r, pid, f in report.detections:
        lines.append("  violated at round %d by %s: %s"
                     % (r, pid, render_formula(f)))
    lines.append("recovery log:" if result.recovery_log
                 else "recovery log: empty")
    for r, fault, action, trig in result.recovery_log:
        lines.append("  round %d  %s  fault %s@%s  via %s"
                     % (r, action.kind, fault.kind, fault.target,
                        render_formula(trig)))
    if result.outcome is not None:
        lines.append("outcome: %s" % result.outcome)
    if result.effective_deadline is not None:
        lines.append("effective deadline: round %d"
                     % result.effective_deadline)
    lines.append("messages total: %d" % report.message_total)
    lines.append("trace log:")
    lines.extend(_trace_log_lines(result))
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    sc = _assemble_scenario(args)
    rounds = args.rounds
    if rounds is None:
        rounds = sc.suggested_rounds if sc.suggested_rounds is not None else 40
    result = run_scenario(sc, rounds)
    if args.format == "json":
        _emit(args, json.dumps(_result_document(args.scenario, rounds, result),
                               indent=2, sort_keys=True))
        return EXIT_OK
    text = _result_text(args.scenario, rounds, result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        report = result.report
        print("verdict: %s" % _verdict(report.global_verdict))
        if report.detection_round is not None:
            print("detection: round %d by %s"
                  % (report.detection_round, report.detecting_pid))
    else:
        print(text)
    return EXIT_OK


def cmd_check(args) -> int:
    sc = _assemble_scenario(args)
    formula = (_read_formula(args.formula) if args.formula is not None
               else sc.formula)
    if formula is None:
        raise _UsageError("scenario carries no end-to-end formula; "
                          "pass --formula")
    plan = plan_monitors(formula, sc.graph)
    monitors = plan.fresh_monitors()
    if args.tamper_budget is not None:
        idx, val = args.tamper_budget
        budget_watchers = [w for m in monitors for w in m.watchers
                           if isinstance(w, BudgetWatcher)]
        if idx >= len(budget_watchers):
            raise _UsageError("--tamper-budget index %d out of range (%d "
                              "budget watchers)" % (idx, len(budget_watchers)))
        w = budget_watchers[idx]
        w.dep = QDep(w.dep.left, w.dep.right, val)
    rounds = args.rounds
    if rounds is None:
        rounds = sc.suggested_rounds if sc.suggested_rounds is not None else 40
    result = run_simulation(sc, rounds, monitors, root=formula)
    report = result.report
    central, position = evaluate_trace_with_position(
        formula, latched(result.global_trace))
    dec = report.global_verdict
    agree = False
    if dec is central is Verdict.UNKNOWN:
        agree = True
    elif dec is central is Verdict.TRUE:
        agree = True
    elif dec is central is Verdict.FALSE:
        agree = (report.detection_round is not None
                 and position is not None
                 and report.detection_round <= position)
    lines = ["formula: %s" % render_formula(formula),
             "decentralized: %s%s" % (
                 _verdict(dec),
                 "" if report.detection_round is None
                 else " at round %d by %s" % (report.detection_round,
                                              report.detecting_pid)),
             "centralized: %s%s" % (
                 _verdict(central),
                 "" if position is None else " at position %d" % position)]
    if agree:
        if dec is Verdict.FALSE:
            lines.append("agree: False; decentralized round %d <= "
                         "centralized round %d"
                         % (report.detection_round, position))
        else:
            lines.append("agree: %s" % _verdict(dec))
    else:
        lines.append("DISAGREE: decentralized %s, centralized %s"
                     % (_verdict(dec), _verdict(central)))
    if args.format == "json":
        doc = {
            "formula": render_formula(formula),
            "decentralized": _verdict(dec),
            "detection_round": report.detection_round,
            "detecting_pid": report.detecting_pid,
            "centralized": _verdict(central),
            "centralized_position": position,
            "agree": agree,
        }
        _emit(args, json.dumps(doc, indent=2, sort_keys=True))
    else:
        _emit(args, "\n".join(lines))
    return EXIT_OK if agree else EXIT_DISAGREE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_USAGE
    except FormulaSyntaxError as e:
        sys.stderr.write("formula error: %s\n" % e)
        return EXIT_FORMULA
    except InfeasibleConstraintError as e:
        sys.stderr.write("infeasible constraint: %s\n" % e)
        return EXIT_INFEASIBLE
    except UnobservableAtomError as e:
        sys.stderr.write("unobservable: %s\n" % e)
        return EXIT_UNOBSERVABLE
    except GraphError as e:
        sys.stderr.write("graph error: %s\n" % e)
        return EXIT_GRAPH
    except ValueError as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_GRAPH
    except OSError as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
