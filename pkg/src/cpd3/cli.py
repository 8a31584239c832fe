"""Command-line front end: decompose, certify, bench.

Exit codes for ``decompose``: 0 success, 1 malformed input file,
2 checkable-condition violation (per-level kernel dimensions are printed
as JSON diagnostics), 3 verification failure in a later phase.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench as bench_mod
from .algebraic import DEFAULT_VERIFY_TOL, auto_l, decompose_at_level
from .conditions import check_uniqueness
from .errors import (
    AllLevelsRejectedError,
    ConditionViolationError,
    CpdError,
    InvalidArgumentError,
    MalformedFileError,
)
from .io import read_factors, read_tensor, write_factors
from .kernelspace import DEFAULT_KERNEL_TOL

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_CONDITION = 2
EXIT_VERIFICATION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpd3",
        description="Algebraic canonical polyadic decomposition of third-order tensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="decompose a CPD3 tensor file")
    dec.add_argument("input", help="tensor file in the CPD3 binary format")
    dec.add_argument("--rank", type=int, required=True, help="target rank R")
    dec.add_argument(
        "--l", default="auto",
        help="level parameter: a nonnegative integer, or 'auto' to search (default)",
    )
    dec.add_argument("--l-max", type=int, default=3, help="largest level tried by auto")
    dec.add_argument("--seed", type=int, default=0)
    dec.add_argument("--tol-kernel", type=float, default=DEFAULT_KERNEL_TOL)
    dec.add_argument("--out", default="factors.json", help="output factor JSON path")
    dec.set_defaults(func=cmd_decompose)

    ben = sub.add_parser("bench", help="run a benchmark suite")
    ben.add_argument("--suite", choices=("table1", "table2", "custom"), required=True)
    ben.add_argument("--trials", type=int, default=20)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--l-max", type=int, default=3)
    ben.add_argument("--big", action="store_true", help="include rows with D > 6000")
    ben.add_argument("--max-d", type=int, default=None, help="drop rows with D above this")
    ben.add_argument("--dims", default=None, help="custom suite dimensions, e.g. 3,3,5")
    ben.add_argument("--rank", type=int, default=None, help="custom suite rank")
    ben.add_argument("--format", choices=("csv", "json"), default="csv")
    ben.add_argument("--out", default=None, help="also write the report to this path")
    ben.set_defaults(func=cmd_bench)

    cer = sub.add_parser("certify", help="evaluate uniqueness certificates for factors")
    cer.add_argument("input", help="factor-triple JSON file")
    cer.add_argument("--l-max", type=int, default=3)
    cer.add_argument("--out", default=None, help="also write the report to this path")
    cer.set_defaults(func=cmd_certify)
    return parser


def cmd_decompose(args) -> int:
    try:
        tensor = read_tensor(args.input)
    except MalformedFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED

    try:
        if args.l == "auto":
            result = auto_l(
                tensor, args.rank, l_max=args.l_max, seed=args.seed,
                tol_kernel=args.tol_kernel,
            )
        else:
            result = decompose_at_level(
                tensor, args.rank, int(args.l), seed=args.seed,
                tol_kernel=args.tol_kernel,
            )
    except AllLevelsRejectedError as exc:
        print(json.dumps({"error": "condition-violation", "per_level": exc.per_level}))
        return EXIT_CONDITION
    except ConditionViolationError as exc:
        payload = {"error": "condition-violation", "message": str(exc)}
        if exc.found_dim is not None:
            payload["kernel_dim_found"] = exc.found_dim
            payload["kernel_dim_expected"] = exc.expected_dim
        print(json.dumps(payload))
        return EXIT_CONDITION
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except CpdError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_VERIFICATION

    diagnostics = {
        "l_used": result.l_used,
        "m": result.m,
        "kernel_dim": result.kernel_dim,
        "residual": result.residual,
        "phase_diagnostics": _jsonable(result.phase_diagnostics),
    }
    write_factors(args.out, result.factors, diagnostics=diagnostics)
    print(json.dumps(diagnostics))
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, float) and obj == float("inf"):
        return "inf"
    return obj


def cmd_bench(args) -> int:
    if args.suite == "custom":
        if not args.dims or args.rank is None:
            print("error: custom suite needs --dims I,J,K and --rank", file=sys.stderr)
            return EXIT_MALFORMED
        try:
            dims = tuple(int(p) for p in args.dims.split(","))
            if len(dims) != 3:
                raise ValueError
        except ValueError:
            print(f"error: bad --dims {args.dims!r}", file=sys.stderr)
            return EXIT_MALFORMED
        configs = [bench_mod.BenchConfig(dims=dims, R=args.rank)]
    else:
        configs = bench_mod.suite_configs(args.suite, big=args.big, max_d=args.max_d)

    def progress(cfg, row):
        print(
            f"# {cfg.name}: success {row.success_rate:.0%}, l={row.l_used}, "
            f"D={row.D}, mean {row.mean_wall_time_seconds:.2f}s",
            file=sys.stderr,
        )

    rows = bench_mod.run_suite(
        configs, trials=args.trials, seed=args.seed, l_max=args.l_max, progress=progress
    )
    if args.format == "csv":
        report = bench_mod.rows_to_csv(rows)
    else:
        report = json.dumps([r.as_dict() for r in rows], indent=1) + "\n"
    sys.stdout.write(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report)
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        factors = read_factors(args.input)
    except MalformedFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    report = check_uniqueness(factors, l_max=args.l_max)
    text = report.to_json(indent=1) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
