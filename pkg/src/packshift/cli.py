"""Command-line entry point: ``packshift run|generate|validate|oracle``.

Exit codes: 0 ok, 2 monitor violation (or invalid packing), 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .core import (
    Event,
    Item,
    TraceError,
    ValidationError,
    dumps_trace,
    fmt_rational,
    read_trace,
    solution_from_json,
    solution_to_json,
)
from .framework import MonitorViolation
from .geometry import validate_packing
from .harness import ExperimentConfig, export, generate_trace, run_experiment
from .offline import InstanceTooLarge, bottom_left_search, exact_vector_opt, volume_lower_bound

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_INPUT = 3

DEFAULT_PROBLEM = {"rect2d": "strip2d", "hyperrect": "strip-d", "hypercube": "strip-hypercube", "vector": "vector"}


class InputError(Exception):
    pass


def _load_json_arg(text: str) -> dict:
    """A JSON object given inline or as a path to a file."""
    text = text.strip()
    try:
        if text.startswith("{"):
            return json.loads(text)
        with open(text) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc


def _write(path: Optional[str], data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _trace(path: str) -> list[Event]:
    try:
        return read_trace(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _live_at(events: Sequence[Event], at: Optional[int]) -> list[Item]:
    live: dict[str, Item] = {}
    for ev in events:
        if at is not None and ev.t > at:
            break
        if ev.op == "insert":
            live[ev.id] = ev.item
        else:
            live.pop(ev.id)
    return list(live.values())


def _keyed_items(events: Sequence[Event]) -> dict[str, Item]:
    """Every inserted item under the key the runner gives it (``id#n`` on reuse)."""
    items: dict[str, Item] = {}
    uses: dict[str, int] = {}
    for ev in events:
        if ev.op == "insert":
            n = uses.get(ev.id, 0)
            uses[ev.id] = n + 1
            key = ev.id if n == 0 else f"{ev.id}#{n}"
            items[key] = ev.item.with_id(key) if n else ev.item
    return items


# -- subcommands ---------------------------------------------------------------


def cmd_run(args) -> int:
    obj = _load_json_arg(args.config)
    if args.trace is not None:
        obj["trace"] = args.trace
    if args.seed is not None:
        obj["seed"] = args.seed
    obj["check"] = obj.get("check", False) or args.check or args.strict
    obj["strict"] = obj.get("strict", False) or args.strict
    config = ExperimentConfig.from_dict(obj)
    fmt = args.format or ("json" if (args.out or "").endswith(".json") else "csv")
    try:
        report = run_experiment(config)
    except MonitorViolation as exc:
        diag = exc.diagnostics
        print(f"monitor violation at t={diag.t}:", file=sys.stderr)
        for v in diag.violations:
            print(f"  {v}", file=sys.stderr)
        print(json.dumps(diag.to_json(), sort_keys=True), file=sys.stderr)
        return EXIT_VIOLATION
    _write(args.out, export(report, fmt))
    if args.solution_out:
        _write(args.solution_out, (json.dumps(solution_to_json(report.solution), indent=1) + "\n").encode())
    if not report.ok:
        for line in report.violations():
            print(line, file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = _load_json_arg(args.spec)
    events = generate_trace(spec, args.seed)
    _write(args.out, dumps_trace(events).encode())
    return EXIT_OK


def cmd_validate(args) -> int:
    events = _trace(args.trace)
    obj = _load_json_arg(args.solution)
    sol = solution_from_json(obj, _keyed_items(events))
    report = validate_packing(sol)
    print(report.dumps())
    return EXIT_OK if report.valid else EXIT_VIOLATION


def cmd_oracle(args) -> int:
    events = _trace(args.trace)
    items = _live_at(events, args.at)
    out: dict = {"at": args.at, "items": len(items)}
    try:
        if args.kind == "vector-exact":
            if any(it.kind != "vector" for it in items):
                raise InputError("vector-exact needs a vector trace")
            out["opt"] = exact_vector_opt(items)
        elif args.kind == "bottom-left":
            if any(it.kind != "rect2d" for it in items):
                raise InputError("bottom-left needs a rect2d trace")
            out["upper"] = fmt_rational(bottom_left_search(items))
        else:
            problem = args.problem or (DEFAULT_PROBLEM[items[0].kind] if items else "strip2d")
            out["problem"] = problem
            out["lower"] = fmt_rational(volume_lower_bound(items, problem))
    except InstanceTooLarge as exc:
        raise InputError(str(exc)) from exc
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="packshift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replay a trace through the combined algorithm")
    p.add_argument("--config", required=True, help="config JSON file or inline object")
    p.add_argument("--trace", help="trace JSONL (overrides the config)")
    p.add_argument("--seed", type=int, help="generator seed (overrides the config)")
    p.add_argument("--check", action="store_true", help="assert every monitor per event")
    p.add_argument("--strict", action="store_true", help="stop at the first violation")
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="default: from the --out suffix")
    p.add_argument("--solution-out", help="write the final solution as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a synthetic trace")
    p.add_argument("--spec", required=True, help="generator spec JSON file or inline object")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="trace path (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a solution for overlaps and containment")
    p.add_argument("--trace", required=True)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="optimum or bounds for the live items at time T")
    p.add_argument("--trace", required=True)
    p.add_argument("--at", type=int, help="time index (default: end of trace)")
    p.add_argument("--kind", choices=("vector-exact", "bottom-left", "bounds"), required=True)
    p.add_argument("--problem", help="problem for --kind bounds (default from the item kind)")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValidationError, TraceError) as exc:
        print(f"packshift: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
