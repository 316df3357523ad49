"""Command-line surface.

Subcommands wire the pipeline end to end over the JSON file formats:

    translate   source.hlsw -> machine dump + state count
    calibrate   design + activity + measurement -> routing calibration file
    predict     design + activity + calibration [+ measurement, variants]
    simulate    design + impls -> trace CSV + extracted activity
    report      prediction records -> comparison table (text + CSV)

Exit codes: 0 success, 1 input syntax (source or JSON), 2 semantic
validation, 3 numeric infeasibility.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import files, fixtures
from .design import routing_bits, validate_design
from .errors import (
    HlsInterpError,
    InfeasibleError,
    ParseError,
    SchemaError,
    TransformError,
    ValidationError,
)
from .fsm import dump, state_count, translate
from .lang import parse
from .power import (
    PowerParams,
    calibrate_routing,
    gamma_parts,
    predict,
    substitute_optimized,
)
from .sim import extract_activity, initial_state, run_periods, trace_to_csv

EXIT_OK = 0
EXIT_SYNTAX = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def _write_text(path: str, text: str) -> None:
    p = Path(path)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(p)


def _params_from(args, pr1=None) -> PowerParams:
    base = files.load_params(args.params) if getattr(args, "params", None) else PowerParams()
    if args.deterministic:
        sigma = 0.0
    elif args.sigma is not None:
        sigma = args.sigma
    else:
        sigma = base.sigma
    return PowerParams(
        ps_c_watts=base.ps_c_watts,
        pd_c_watts=base.pd_c_watts,
        pr1_watts_per_bit=pr1 if pr1 is not None else base.pr1_watts_per_bit,
        pr1_static_watts_per_bit=base.pr1_static_watts_per_bit,
        sigma=sigma,
        seed=args.seed if args.seed is not None else base.seed,
        l_div=args.ldiv if args.ldiv is not None else base.l_div,
    )


def _load_design_checked(path):
    design = files.load_design(path)
    diags = validate_design(design)
    if diags:
        raise ValidationError(diags)
    return design


# ---------------------------------------------------------------------------
# subcommands

def cmd_translate(args) -> int:
    text = Path(args.source).read_text()
    graph = parse(text)
    stub_counts = files.load_stub_counts(args.stub_counts) if args.stub_counts else None
    if stub_counts:
        unknown = set(stub_counts) - set(graph.functions)
        if unknown:
            raise ValidationError([f"stub counts for undeclared functions: {sorted(unknown)}"])
    machine = translate(graph, stub_counts)
    text_out = dump(machine) + f"states: {state_count(machine)}\n"
    if args.out:
        _write_text(args.out, text_out)
    else:
        sys.stdout.write(text_out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    design = _load_design_checked(args.design)
    if args.library:
        design = replace(design, functions={**design.functions,
                                            **files.load_library(args.library)})
    _, activity = files.load_activity(args.activity)
    _, measured = files.load_measurement(args.measurement)
    params = _params_from(args)
    g = gamma_parts(design, activity, None, params.l_div)
    bits = routing_bits(design.routing, design.costs)
    cal = calibrate_routing(measured.dynamic_watts, g.value, bits, params)
    obj = files.dump_calibration(cal, source_design=design.name)
    if args.out:
        files.write_json(args.out, obj)
    print(f"pr1_watts_per_bit: {cal.pr1_watts_per_bit!r}")
    print(f"residual_watts:    {cal.residual_watts!r} over {cal.routing_bits} bits")
    print(f"gamma_watts:       {cal.gamma_watts!r}")
    print(f"noise_std:         {cal.noise_std!r}")
    return EXIT_OK


def cmd_predict(args) -> int:
    design = _load_design_checked(args.design)
    if args.library:
        design = replace(design, functions={**design.functions,
                                            **files.load_library(args.library)})
    if args.optimized:
        design = substitute_optimized(design, files.load_library(args.optimized))
    _, activity = files.load_activity(args.activity)
    cal = files.load_calibration(args.calibration)
    params = _params_from(args, pr1=cal.pr1_watts_per_bit)
    measured = None
    if args.measured:
        _, measured = files.load_measurement(args.measured)
    report = predict(design, activity, None, params, measured)
    obj = files.dump_report(report)
    if args.out:
        files.write_json(args.out, obj)
    print(f"design:    {report.design}")
    print(f"predicted: {report.dynamic.mean_watts!r} W dynamic")
    if report.static is not None:
        print(f"           {report.static.mean_watts!r} W static")
    if measured is not None:
        print(f"measured:  {measured.dynamic_watts!r} W dynamic")
        print(f"rel_error: {100 * report.rel_error:.3f}%")
    return EXIT_OK


def cmd_simulate(args) -> int:
    design = _load_design_checked(args.design)
    impls = files.load_impls(args.impls)
    state = initial_state(design)
    state, trace = run_periods(state, design, impls, args.periods)
    csv_text = trace_to_csv(trace)
    if args.trace_out:
        _write_text(args.trace_out, csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.activity_out:
        profile = extract_activity(trace, args.period_states)
        files.write_json(args.activity_out,
                         files.dump_activity(design.name, profile))
    return EXIT_OK


def _report_rows(paths) -> list[dict]:
    rows = []
    for p in paths:
        r = files.load_report(p)
        rows.append({
            "prototype": r.design,
            "predicted": repr(r.dynamic.mean_watts),
            "measured": "" if r.measured is None else repr(r.measured.dynamic_watts),
            "error_pct": "" if r.rel_error is None else f"{100 * r.rel_error:.3f}",
        })
    rows.sort(key=lambda row: row["prototype"])
    return rows


def cmd_report(args) -> int:
    rows = _report_rows(args.records)
    headers = ("Prototype", "Predicted", "Measured", "Error%")
    table = [headers] + [(r["prototype"], r["predicted"], r["measured"], r["error_pct"])
                         for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(4)]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    if args.csv:
        lines = ["prototype,predicted,measured,error_pct"]
        lines += [f"{r['prototype']},{r['predicted']},{r['measured']},{r['error_pct']}"
                  for r in rows]
        _write_text(args.csv, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    root = fixtures.fixture_path("")
    print(f"fixture directory: {root}")
    for name in sorted(p.name for p in root.iterdir()):
        print(f"  {name}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_common(p) -> None:
    p.add_argument("--deterministic", action="store_true",
                   help="force sigma=0 even if a params file sets noise "
                        "(sigma already defaults to 0)")
    p.add_argument("--sigma", type=float, default=None,
                   help="noise standard deviation")
    p.add_argument("--seed", type=int, default=None, help="noise seed")
    p.add_argument("--ldiv", type=int, default=None,
                   help="override the function-mix divisor")
    p.add_argument("--params", default=None, help="power parameters JSON file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hlsinterp", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate", help="lower a source file to its state machine")
    p.add_argument("source")
    p.add_argument("--stub-counts", default=None,
                   help="JSON file of declared state counts for extern functions")
    p.add_argument("-o", "--out", default=None, help="write the dump to a file")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("calibrate", help="fit per-bit routing power from a measurement")
    p.add_argument("--design", required=True)
    p.add_argument("--library", default=None, help="function library overlay")
    p.add_argument("--activity", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("-o", "--out", default=None, help="write the calibration JSON")
    _add_common(p)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("predict", help="predict a design's power from a calibration")
    p.add_argument("--design", required=True)
    p.add_argument("--library", default=None, help="function library overlay")
    p.add_argument("--optimized", default=None,
                   help="optimized-variant library to substitute before predicting")
    p.add_argument("--activity", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--measured", default=None, help="measurement file for error reporting")
    p.add_argument("-o", "--out", default=None, help="write the report JSON")
    _add_common(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("simulate", help="run the stored program over concrete data")
    p.add_argument("--design", required=True)
    p.add_argument("--impls", required=True, help="function implementation JSON file")
    p.add_argument("--periods", type=int, default=1)
    p.add_argument("--period-states", type=int, default=None,
                   help="period length in states for activity extraction")
    p.add_argument("--trace-out", default=None, help="write the trace CSV")
    p.add_argument("--activity-out", default=None,
                   help="write the extracted activity profile JSON")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("report", help="tabulate prediction records")
    p.add_argument("records", nargs="+")
    p.add_argument("--csv", default=None, help="write the table as CSV")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("fixtures", help="list the shipped fixture files")
    p.set_defaults(fn=cmd_fixtures)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "activity_out", None) and args.period_states is None:
        print("error: --activity-out requires --period-states", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.fn(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except SchemaError as exc:
        msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_SYNTAX if "invalid JSON" in msg else EXIT_VALIDATION
    except (ValidationError, TransformError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except HlsInterpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
