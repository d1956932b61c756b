"""Command-line interface: analyze, deadlocks, oracle, crash, generate.

Exit codes of `analyze`: 0 when the global spare capacity is at least 2 and
no deadlock or critical vertex exists, 2 when deadlocks exist, 3 when critical
vertices exist without deadlocks, 1 on parse or usage errors.  `oracle` exits
4 when the chain bound is violated (a bug signal) and 5 on enumeration
overflow.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import analysis, oracle
from .errors import PathOverflowError, PvcapError
from .pv_lang import generate_threshold_program, parse_program, serialize_program
from .semantics import StateSpace

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEADLOCK = 2
EXIT_CRITICAL = 3
EXIT_BOUND_VIOLATION = 4
EXIT_OVERFLOW = 5


def _parse_vertex(text: str, space: StateSpace):
    if text == "origin":
        return space.origin
    if text == "top":
        return space.top
    try:
        v = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise PvcapError(f"bad vertex {text!r}: expected comma-separated integers") from None
    space.check_vertex(v)
    return v


def _fmt_vertex(v) -> str:
    return "(" + ",".join(map(str, v)) + ")"


def _fmt_spare(value) -> str:
    return "inf" if value == math.inf else str(int(value))


def _json_spare(value):
    return "inf" if value == math.inf else int(value)


def _json_box(box) -> dict:
    return {"low": list(box.low), "high": list(box.high)}


def _json_connectivity(conn) -> dict:
    out = {"kind": conn.kind}
    if conn.k is not None:
        out["k"] = conn.k
    return out


def report_to_json(report: analysis.AnalysisReport) -> dict:
    data = {
        "global_spare": _json_spare(report.global_spare),
        "witness": list(report.witness) if report.witness is not None else None,
        "connectivity": _json_connectivity(report.connectivity),
        "deadlocks": [
            {
                "vertex": list(d.vertex),
                "resources": list(d.resources),
                "holders": {r: list(t) for r, t in d.holders.items()},
                "callers": {r: list(t) for r, t in d.callers.items()},
            }
            for d in report.deadlocks
        ],
        "doomed_boxes": [_json_box(b) for b in report.doomed_boxes],
        "elimination_boxes": [_json_box(b) for b in report.elimination_boxes],
        "critical": [list(c.vertex) for c in report.criticals],
        "critical_regions": [
            {
                "low": list(region.box.low),
                "high": list(region.box.high),
                "exits": [list(comp) for comp in region.exits],
            }
            for region in report.critical_regions
        ],
        "component_bound": report.component_bound,
        "target_excluded": report.target_excluded,
    }
    if report.per_vertex is not None:
        data["per_vertex"] = [
            {
                "vertex": list(row.vertex),
                "class": row.kind,
                "c": list(row.c),
                "d": list(row.d),
                "spare": _json_spare(row.spare) if row.spare is not None else None,
                "flags": list(row.flags),
            }
            for row in report.per_vertex
        ]
    return data


def _print_report(report: analysis.AnalysisReport, show_elimination: bool, out=None) -> None:
    w = (out if out is not None else sys.stdout).write
    w(f"global spare capacity: {_fmt_spare(report.global_spare)}\n")
    if report.witness is not None:
        w(f"witness vertex: {_fmt_vertex(report.witness)}\n")
    w(f"path spaces toward {_fmt_vertex(report.target)} are {report.connectivity.describe()}\n")
    if report.target_excluded:
        w("warning: the target lies inside an eliminated doomed region\n")
    if report.deadlocks:
        w(f"deadlocks ({len(report.deadlocks)}):\n")
        for d, box in zip(report.deadlocks, report.doomed_boxes):
            held = ", ".join(
                f"{r} held by {sorted(d.holders[r])} wanted by {sorted(d.callers[r])}"
                for r in d.resources
            )
            w(f"  {_fmt_vertex(d.vertex)}  doomed box {box}  [{held}]\n")
    else:
        w("deadlocks: none\n")
    if show_elimination and report.elimination_boxes:
        w(f"elimination: {report.elimination_rounds} round(s)\n")
        for box in report.elimination_boxes:
            w(f"  wall {box}\n")
    if report.criticals:
        w(f"critical vertices ({len(report.criticals)}):\n")
        for c, region in zip(report.criticals, report.critical_regions):
            exits = " | ".join("{" + ",".join(map(str, comp)) + "}" for comp in region.exits)
            r0 = f" bottleneck {c.r0}" if c.r0 else ""
            w(f"  {_fmt_vertex(c.vertex)}  region {region.box}  exits {exits}{r0}\n")
    else:
        w("critical vertices: none\n")
    w(f"component bound {_fmt_vertex(report.source)} -> {_fmt_vertex(report.target)}: {report.component_bound}\n")
    if report.per_vertex is not None:
        w("per-vertex table:\n")
        for row in report.per_vertex:
            spare = _fmt_spare(row.spare) if row.spare is not None else "-"
            flags = ",".join(row.flags) if row.flags else "-"
            w(
                f"  {_fmt_vertex(row.vertex)} class={row.kind} c={list(row.c)} d={list(row.d)}"
                f" spare={spare} flags={flags}\n"
            )


def _exit_code(report: analysis.AnalysisReport) -> int:
    if report.has_deadlocks:
        return EXIT_DEADLOCK
    if report.has_criticals or report.global_spare < 2:
        return EXIT_CRITICAL
    return EXIT_OK


def _load(path: str):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_program(handle.read())


def cmd_analyze(args) -> int:
    program = _load(args.file)
    space = StateSpace(program)
    source = _parse_vertex(args.source, space)
    target = _parse_vertex(args.target, space)
    report = analysis.analyze(program, source=source, target=target, per_vertex=args.per_vertex)
    _print_report(report, show_elimination=args.eliminate)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as handle:
            json.dump(report_to_json(report), handle, indent=2)
            handle.write("\n")
    return _exit_code(report)


def cmd_deadlocks(args) -> int:
    program = _load(args.file)
    space = StateSpace(program)
    if args.eliminate:
        result = analysis.eliminate_deadlocks(space)
        for rnd, infos in enumerate(result.rounds, start=1):
            for info in infos:
                print(f"round {rnd}: deadlock {_fmt_vertex(info.vertex)} on {', '.join(info.resources)}")
        for box in result.elimination_boxes:
            print(f"wall {box}")
        found = result.deadlocks
    else:
        found = analysis.find_deadlocks(space)
        for info in found:
            box = analysis.doomed_box(space, info.vertex)
            print(f"deadlock {_fmt_vertex(info.vertex)} on {', '.join(info.resources)}  doomed box {box}")
    if not found:
        print("no deadlocks")
        return EXIT_OK
    return EXIT_DEADLOCK


def cmd_oracle(args) -> int:
    program = _load(args.file)
    space = StateSpace(program)
    source = _parse_vertex(args.source, space)
    target = _parse_vertex(args.target, space)
    try:
        paths = oracle.enumerate_tame_paths(space, source, target, cap=args.max_paths)
        classes = oracle.count_path_components(space, source, target, cap=args.max_paths)
    except PathOverflowError as exc:
        print(f"overflow: more than {exc.cap} paths from {_fmt_vertex(source)} to {_fmt_vertex(target)}")
        return EXIT_OVERFLOW
    bound = analysis.component_upper_bound(space, source, target)
    agrees = classes.class_count <= bound
    print(f"paths: {len(paths)}")
    print(f"classes: {classes.class_count}")
    print(f"bound: {bound}")
    print(f"bound holds: {'yes' if agrees else 'NO'}")
    return EXIT_OK if agrees else EXIT_BOUND_VIOLATION


def cmd_crash(args) -> int:
    program = _load(args.file)
    space = StateSpace(program)
    scenario = analysis.make_crash_scenario(program, args.thread, args.after)
    target = None
    if args.target is not None:
        remaining = tuple(t for j, t in enumerate(program.threads) if j != scenario.thread)
        from .pv_lang import Program as _Program

        target = _parse_vertex(args.target, StateSpace(_Program(program.resources, remaining)))
    report = analysis.analyze_crash(space, scenario, target)
    held = ", ".join(scenario.held_locks) if scenario.held_locks else "nothing"
    print(f"thread {program.threads[scenario.thread].name} crashes after step {scenario.after_step}, holding {held}")
    print(f"kappa before: {_fmt_spare(report.kappa_before)}")
    print(f"kappa after:  {_fmt_spare(report.kappa_after)}")
    print(f"case: {report.case}")
    print(f"inequality kappa_after >= kappa_before - 1: {'holds' if report.inequality_holds else 'VIOLATED'}")
    if args.json:
        data = {
            "crash": {
                "thread": program.threads[scenario.thread].name,
                "after_step": scenario.after_step,
                "held_locks": list(scenario.held_locks),
                "kappa_before": _json_spare(report.kappa_before),
                "kappa_after": _json_spare(report.kappa_after),
                "case": report.case,
            }
        }
        with open(args.json, "w", encoding="utf-8") as handle:
            json.dump(data, handle, indent=2)
            handle.write("\n")
    return EXIT_OK if report.inequality_holds else EXIT_BOUND_VIOLATION


def cmd_generate(args) -> int:
    capacities = [int(part) for part in args.capacities.split(",")]
    program = generate_threshold_program(args.threads, capacities)
    text = serialize_program(program)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvcap",
        description="Spare-capacity analyzer for PV-style concurrent programs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full analysis: spare capacities, deadlocks, critical states")
    p.add_argument("file")
    p.add_argument("--source", default="origin", help="comma-separated vertex, or origin/top")
    p.add_argument("--target", default="top", help="comma-separated vertex, or origin/top")
    p.add_argument("--eliminate", action="store_true", help="show the doomed-region walls")
    p.add_argument("--per-vertex", action="store_true", help="emit the full lock-pattern vertex table")
    p.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("deadlocks", help="list deadlocks and doomed boxes")
    p.add_argument("file")
    p.add_argument("--eliminate", action="store_true", help="run the wall-off fixpoint")
    p.set_defaults(func=cmd_deadlocks)

    p = sub.add_parser("oracle", help="exhaustive path enumeration and class counting")
    p.add_argument("file")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--max-paths", type=int, default=oracle.DEFAULT_PATH_CAP)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("crash", help="spare capacity before and after a thread crash")
    p.add_argument("file")
    p.add_argument("--thread", required=True, help="thread name")
    p.add_argument("--after", type=int, required=True, help="crash after this many steps")
    p.add_argument("--target", help="target vertex over the surviving coordinates")
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_crash)

    p = sub.add_parser("generate", help="synthesize a threshold program")
    p.add_argument("--threads", type=int, required=True)
    p.add_argument("--capacities", required=True, help="comma-separated capacities")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PvcapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
