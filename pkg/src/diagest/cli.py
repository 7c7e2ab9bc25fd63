"""Command-line front end: ``diagest estimate | experiment | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 I/O or input-file error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import generators
from .estimators import DegenerateDenominator
from .experiment import MODES, ExperimentConfig, estimate_once, fmt, run_experiment
from .median import num_estimators
from .mmio import MatrixMarketError, read_matrix_market
from .probes import DISTRIBUTIONS, ProbeStream, get_distribution
from .verify import run_checks

log = logging.getLogger("diagest")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _add_matrix_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="Matrix Market (.mtx) file")
    src.add_argument("--generator", help="built-in matrix, e.g. offdiag-uniform:128 or spiked-diag:64:2")


def _add_estimator_args(p, many_m):
    p.add_argument("--dist", default="rademacher", choices=sorted(DISTRIBUTIONS))
    p.add_argument("--mode", default="plain", choices=MODES)
    if many_m:
        p.add_argument("--m", type=int, nargs="+", required=True, help="probe counts to sweep")
    else:
        p.add_argument("--m", type=int, required=True, help="number of probes")
    p.add_argument("--delta", type=float, default=0.05, help="failure probability (median mode, bounds)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diagest", description="Stochastic diagonal estimation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate diag(A) once")
    _add_matrix_args(p)
    _add_estimator_args(p, many_m=False)
    p.add_argument("--json", action="store_true", help="write a JSON object instead of text")

    p = sub.add_parser("experiment", help="error sweep over m and trials (CSV + JSON sidecar)")
    _add_matrix_args(p)
    _add_estimator_args(p, many_m=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--constant", type=float, default=1.0, help="constant c used in the shape-only bounds")

    p = sub.add_parser("verify", help="run the exact-enumeration self checks")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    return parser


def _load_matrix(args):
    if args.generator:
        try:
            return generators.from_spec(args.generator)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    op = read_matrix_market(args.matrix)
    return Path(args.matrix).name, op


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_estimate(args):
    config = ExperimentConfig(
        m_values=[args.m], dist=args.dist, delta=args.delta, trials=1, seed=args.seed,
        mode=args.mode, workers=args.workers,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    matrix_id, op = _load_matrix(args)
    log.info("estimate: matrix=%s n=%d seed=%d", matrix_id, op.dim, args.seed)
    values, matvecs = estimate_once(op, args.m, config, ProbeStream(args.seed))
    meta = {
        "matrix": matrix_id,
        "n": op.dim,
        "m": args.m,
        "seed": args.seed,
        "mode": args.mode,
        "distribution": get_distribution(args.dist).name,
        "matvecs": matvecs,
    }
    if args.mode == "median":
        meta["delta"] = args.delta
        meta["r"] = num_estimators(args.delta)
    if args.json:
        text = json.dumps({"metadata": meta, "values": [float(v) for v in values]}, indent=2) + "\n"
    else:
        header = "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"
        text = header + "".join(fmt(v) + "\n" for v in values)
    _write(text, args.out)
    return EXIT_OK


def cmd_experiment(args):
    config = ExperimentConfig(
        m_values=list(args.m), dist=args.dist, delta=args.delta, trials=args.trials,
        seed=args.seed, mode=args.mode, matrix=args.matrix, generator=args.generator,
        out=args.out, workers=args.workers, constant=args.constant,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    matrix_id, op = _load_matrix(args)
    log.info("experiment: matrix=%s n=%d seed=%d trials=%d m=%s",
             matrix_id, op.dim, config.seed, config.trials, config.m_values)
    result = run_experiment(op, matrix_id, config)
    _write(result.csv(), args.out)
    if args.out is not None:
        sidecar = Path(args.out).with_suffix(".json")
        sidecar.write_text(json.dumps(result.summary(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_verify(args):
    report = run_checks()
    if args.json:
        sys.stdout.write(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        for line in report.lines():
            print(line)
        print("all checks passed" if report.passed else "verification FAILED")
    return EXIT_OK if report.passed else EXIT_VERIFY


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "seed", None) is not None:
        # always recorded, even without -v, so any run can be replayed
        sys.stderr.write(f"diagest: seed={args.seed}\n")
    handlers = {"estimate": cmd_estimate, "experiment": cmd_experiment, "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"diagest: error: {exc}\n")
        return EXIT_USAGE
    except MatrixMarketError as exc:
        sys.stderr.write(f"diagest: error: {exc}\n")
        return EXIT_IO
    except OSError as exc:
        sys.stderr.write(f"diagest: error: {exc}\n")
        return EXIT_IO
    except DegenerateDenominator as exc:
        sys.stderr.write(f"diagest: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
