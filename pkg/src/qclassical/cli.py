"""Batch front-end: run checkers on process documents, reproduce the built-in
models, and emit JSON-lines verdicts, CSV trajectory data and figures.

Exit codes: 0 when all requested checks match the expected verdicts (or
merely complete when none are given), 1 on a verdict mismatch, 2 on input
errors.  Reports are deterministic for identical inputs and seeds, and files
are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .channels import Observable
from .checkers import (
    PreparationSet,
    check_classicality_set,
    check_eq12_identity,
    check_incoherence,
    check_invertibility,
    check_ncgd,
    check_theorem_pipeline,
    Verdict,
    Witness,
)
from .errors import NotInvertibleError
from .fuzz import FUZZ_CLASSES, default_threads
from .models import (
    DephasingModelParams,
    QuadratureScheme,
    dephasing_separation_instance,
    build_counterexample,
    trajectory_table,
    write_trajectory_csv,
)
from .process import MarkovProcess, markov_from_dilation
from .serialize import json_line, load_check_document, verdict_to_json

BUILTIN_MODELS = {
    "counterexample-1": lambda: build_counterexample(1),
    "counterexample-2": lambda: build_counterexample(2),
    "counterexample-3": lambda: build_counterexample(3),
    "appendix-a": lambda: dephasing_separation_instance(),
}

CHECK_NAMES = ("classical", "incoherent", "ncgd", "invertible", "markov", "eq12", "pipeline")


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(lines: list[str], output: str | None) -> None:
    text = "\n".join(lines) + "\n" if lines else ""
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        _write_atomic(Path(output), text)


def _map_family(process) -> MarkovProcess:
    if isinstance(process, MarkovProcess):
        return process
    return markov_from_dilation(process)


def _run_one_check(
    name: str,
    process,
    observable: Observable,
    preparations: PreparationSet,
    tolerance: float,
):
    if name == "classical":
        return check_classicality_set(process, observable, preparations, tolerance=tolerance)
    if name == "incoherent":
        return check_incoherence(process, observable, preparations, tolerance=tolerance)
    if name == "ncgd":
        return check_ncgd(_map_family(process), observable, tolerance)
    if name == "invertible":
        try:
            family = _map_family(process)
        except NotInvertibleError as exc:
            return Verdict(
                "invertible", False, 0.0,
                Witness({"reason": str(exc)}, None, None, float("inf")),
            )
        return check_invertibility(family)
    if name == "markov":
        holds = isinstance(process, MarkovProcess) and not process.derived
        witness = None
        if not holds:
            witness = Witness(
                {"reason": "process is not a certified dynamical-map family"},
                None, None, float("inf"),
            )
        return Verdict("markov", holds, 0.0, witness)
    if name == "eq12":
        if not isinstance(process, MarkovProcess):
            raise ValueError("eq12 applies to the interval maps of a markov process")
        for k, interval_map in enumerate(process.maps):
            verdict = check_eq12_identity(interval_map, observable, observable, tolerance)
            if not verdict.holds:
                pattern = dict(verdict.witness.pattern)
                pattern["interval"] = k + 1
                return Verdict(
                    "eq12", False, tolerance,
                    Witness(pattern, verdict.witness.lhs, verdict.witness.rhs,
                            verdict.witness.distance),
                )
        return Verdict("eq12", True, tolerance)
    raise ValueError(f"unknown check {name!r}")


def _pipeline_line(report) -> dict:
    return {
        "check": "pipeline",
        "holds": report.consistent,
        "markov": report.markov,
        "spanning": report.spanning,
        "verdicts": {
            "classical": [v.holds for v in report.classical],
            "incoherent": [v.holds for v in report.incoherent],
            "invertible": None if report.invertible is None else report.invertible.holds,
            "ncgd": None if report.ncgd is None else report.ncgd.holds,
            "diagonal_incoherent": (
                None if report.diagonal_incoherent is None
                else report.diagonal_incoherent.holds
            ),
        },
        "implications": [
            {
                "name": imp.name,
                "applicable": imp.applicable,
                "premise": imp.premise,
                "conclusion": imp.conclusion,
                "violated": imp.violated,
            }
            for imp in report.implications
        ],
    }


def _cmd_check(args) -> int:
    if args.model:
        instance = BUILTIN_MODELS[args.model]()
        process, observable = instance.process, instance.observable
        preparations, expected = instance.preparations, instance.expected
        doc_checks: list[str] = []
    else:
        try:
            doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            print(
                f"error: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                file=sys.stderr,
            )
            return 2
        try:
            process, observable, preparations, expected, doc_checks = (
                load_check_document(doc)
            )
        except Exception as exc:  # schema, dimension and validation errors
            path = getattr(exc, "json_path", None)
            at = f" at {path}" if path else ""
            print(f"error: invalid input{at}: {exc}", file=sys.stderr)
            return 2

    checks = args.checks or doc_checks or sorted(expected) or ["classical", "incoherent"]
    lines = []
    results = {}
    for name in checks:
        if name == "pipeline":
            report = check_theorem_pipeline(
                process, observable, preparations, tolerance=args.tolerance
            )
            results[name] = report.consistent
            lines.append(json_line(_pipeline_line(report)))
            continue
        verdict = _run_one_check(name, process, observable, preparations, args.tolerance)
        results[name] = verdict.holds
        lines.append(json_line(verdict_to_json(verdict)))
    _emit(lines, args.output)

    for name, value in expected.items():
        if name in results and results[name] != value:
            print(
                f"mismatch: {name} = {results[name]}, expected {value}",
                file=sys.stderr,
            )
            return 1
    return 0


def _cmd_counterexample(args) -> int:
    args.model = f"counterexample-{args.which}"
    args.input = None
    args.checks = args.checks or None
    return _cmd_check(args)


def _cmd_dephasing_model(args) -> int:
    # Validates the parameter combination up front.
    DephasingModelParams(g=args.g, gamma=args.gamma, x0=args.x0, s=args.s,
                         t=max(args.s, args.t_max))
    table = trajectory_table(
        g=args.g, gamma=args.gamma, s=args.s, x0=args.x0,
        t_max=args.t_max, dt=args.dt,
    )
    output = Path(args.output)
    tmp = output.with_suffix(output.suffix + ".tmp")
    write_trajectory_csv(tmp, table)
    os.replace(tmp, output)
    if not args.no_figure:
        figure = Path(args.figure) if args.figure else output.with_suffix(".png")
        from .plotting import render_trajectory_figure

        figure_tmp = figure.with_suffix(figure.suffix + ".tmp")
        fmt = figure.suffix.lstrip(".") or "png"
        render_trajectory_figure(table, figure_tmp, dephasing_time=args.s, fmt=fmt)
        os.replace(figure_tmp, figure)
    if args.nodes != QuadratureScheme().node_count:
        # The table is closed-form; nodes only matter for oracle cross-checks.
        QuadratureScheme(node_count=args.nodes)
    return 0


def _cmd_fuzz(args) -> int:
    lines = []
    status = 0
    for name in args.checks or ["pipeline"]:
        fn = FUZZ_CLASSES[name]
        result = fn(args.count, args.seed, tolerance=args.tolerance, threads=args.threads)
        lines.append(
            json_line(
                {
                    "fuzz": result.name,
                    "count": result.count,
                    "seed": result.seed,
                    "violations": len(result.violations),
                }
            )
        )
        for violation in result.violations:
            lines.append(json_line({"fuzz": result.name, "violation": violation}))
        if result.violations:
            status = 1
    _emit(lines, args.output)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qclassical",
        description="Decide classicality, incoherence, NCGD, Markovianity and "
        "invertibility of multi-time measurement statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run checkers on a process document")
    source = check.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="JSON check document")
    source.add_argument("--model", choices=sorted(BUILTIN_MODELS),
                        help="built-in instance, no input file needed")
    check.add_argument("--checks", type=lambda s: s.split(","), default=None,
                       metavar="NAME[,NAME...]",
                       help=f"subset of {','.join(CHECK_NAMES)}")
    check.add_argument("--tolerance", type=float, default=1e-9)
    check.add_argument("--output", "-o", default=None, help="report path (default stdout)")
    check.set_defaults(fn=_cmd_check)

    ce = sub.add_parser("counterexample", help="check a built-in counterexample "
                        "against its expected verdicts")
    ce.add_argument("--which", type=int, choices=(1, 2, 3), required=True)
    ce.add_argument("--checks", type=lambda s: s.split(","), default=None)
    ce.add_argument("--tolerance", type=float, default=1e-9)
    ce.add_argument("--output", "-o", default=None)
    ce.set_defaults(fn=_cmd_counterexample)

    dm = sub.add_parser("dephasing-model", help="emit the trajectory comparison "
                        "as CSV plus a rendered figure")
    dm.add_argument("--g", type=float, default=1.0, help="coupling rate")
    dm.add_argument("--gamma", type=float, default=1.0, help="Lorentzian width")
    dm.add_argument("--s", type=float, default=1.0, help="dephasing time")
    dm.add_argument("--x0", type=float, default=1.0, help="initial <sigma_x>")
    dm.add_argument("--t-max", type=float, default=5.0)
    dm.add_argument("--dt", type=float, default=0.01)
    dm.add_argument("--nodes", type=int, default=2000, help="oracle quadrature nodes")
    dm.add_argument("--output", "-o", required=True, help="CSV path")
    dm.add_argument("--figure", default=None, help="figure path (default: CSV path with .png)")
    dm.add_argument("--no-figure", action="store_true")
    dm.set_defaults(fn=_cmd_dephasing_model)

    fuzz = sub.add_parser("fuzz", help="randomized implication checking")
    fuzz.add_argument("--seed", type=int, required=True)
    fuzz.add_argument("--count", type=int, default=10000)
    fuzz.add_argument("--tolerance", type=float, default=1e-9)
    fuzz.add_argument("--checks", type=lambda s: s.split(","), default=None,
                      metavar="NAME[,NAME...]",
                      help=f"subset of {','.join(sorted(FUZZ_CLASSES))}")
    fuzz.add_argument("--threads", type=int, default=None,
                      help="worker threads (default: QCLASSICAL_THREADS or 1)")
    fuzz.add_argument("--output", "-o", default=None)
    fuzz.set_defaults(fn=_cmd_fuzz)
    return parser


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tolerance", 1.0) <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return 2
    if args.command == "check" and args.checks:
        bad = [c for c in args.checks if c not in CHECK_NAMES]
        if bad:
            print(f"error: unknown checks {bad}", file=sys.stderr)
            return 2
    if args.command == "fuzz":
        if args.threads is None:
            args.threads = default_threads()
        bad = [c for c in (args.checks or []) if c not in FUZZ_CLASSES]
        if bad:
            print(f"error: unknown fuzz classes {bad}", file=sys.stderr)
            return 2
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
