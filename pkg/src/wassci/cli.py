"""Command-line interface.

Exit codes: 0 success, 2 degenerate solution refused, 3 usage or parse
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from ._errors import DegenerateSolution, DimensionMismatch, ParseError, WassCIError
from .harness import (
    NOISE_FAMILIES,
    VARIANCE_MODES,
    ExperimentConfig,
    dumps,
    run_coverage_experiment,
    run_length_experiment,
    run_robustness_experiment,
    run_timing_experiment,
)
from .io import load_two_sample_csv, write_lp_dump
from .selective import run_algorithm_1

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_USAGE = 3
EXIT_NUMERICAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alpha(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < val < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return val


def _positive_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return val


def _positive_float(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(val) and val > 0.0):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return val


def _seed(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return val


def _list_of(conv):
    def parse(text):
        items = [s for s in text.split(",") if s.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        return [conv(s.strip()) for s in items]

    return parse


def _float(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wassci", description="Selective confidence intervals for the l1 Wasserstein distance.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ci = sub.add_parser("ci", help="interval for two samples stored as CSV files")
    ci.add_argument("--x", required=True, help="CSV file of the first sample")
    ci.add_argument("--y", required=True, help="CSV file of the second sample")
    ci.add_argument("--alpha", type=_alpha, default=0.05)
    noise = ci.add_mutually_exclusive_group()
    noise.add_argument("--sigma", type=_positive_float, help="known noise standard deviation (default 1)")
    noise.add_argument("--estimate-sigma", action="store_true", help="use the pooled sample variance")
    ci.add_argument("--header", action="store_true", help="skip the first line of each CSV")
    ci.add_argument("--allow-degenerate", action="store_true")
    ci.add_argument("--out", help="report path (JSON); printed to stdout when omitted")
    ci.add_argument("--dump-lp", help="write the LP and its optimal basis to this path")
    ci.add_argument("--n", type=_positive_int, help="subsample this many rows of --x")
    ci.add_argument("--m", type=_positive_int, help="subsample this many rows of --y")
    ci.add_argument("--seed", type=_seed, help="seed for subsampling")
    ci.add_argument("--cov-x", help="covariance of vec(X) as row-major CSV")
    ci.add_argument("--cov-y", help="covariance of vec(Y) as row-major CSV")

    for name, help_text in (
        ("simulate-coverage", "coverage sweep over mean shifts"),
        ("simulate-length", "interval length sweep over mean shifts"),
        ("benchmark", "wall time of full runs per sample size"),
        ("robustness", "coverage under non-Gaussian noise and estimated variance"),
    ):
        p = sub.add_parser(name, help=help_text)
        bench = name == "benchmark"
        p.add_argument("--n", type=_list_of(_positive_int) if bench else _positive_int,
                       default=[50, 60, 70, 80] if bench else 5)
        p.add_argument("--m", type=_positive_int, default=None, help="defaults to --n")
        p.add_argument("--d", type=_positive_int, default=1)
        default_delta = [2.0] if name in ("benchmark", "robustness") else [0.0, 1.0, 2.0, 3.0, 4.0]
        p.add_argument("--delta", type=_list_of(_float), default=default_delta, help="comma-separated list")
        p.add_argument("--noise", choices=NOISE_FAMILIES, default="gaussian")
        p.add_argument("--variance-mode", choices=VARIANCE_MODES, default="known")
        p.add_argument("--trials", type=_positive_int, default=10 if bench else 1000)
        p.add_argument("--alpha", type=_alpha, default=0.05)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--jobs", type=_positive_int, default=1)
        p.add_argument("--out", help="aggregate JSON path; printed to stdout when omitted")
        p.add_argument("--exclude-degenerate", action="store_true",
                       help="count degenerate trials as excluded instead of running them")
        if bench:
            p.add_argument("--timeout", type=_positive_float, default=300.0)
        else:
            p.add_argument("--trials-csv", help="per-trial CSV path (one file per record)")
    return parser


def _emit(args, payload_text: str, summary: str) -> None:
    if args.out:
        Path(args.out).write_text(payload_text)
        print(summary)
    else:
        sys.stdout.write(payload_text)
    sys.stdout.flush()


def _fmt(x: float) -> str:
    return f"{x:.6g}" if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def cmd_ci(args) -> int:
    inst = load_two_sample_csv(
        args.x, args.y,
        sigma=args.sigma, estimate_sigma=args.estimate_sigma, header=args.header,
        n=args.n, m=args.m, seed=args.seed, cov_x=args.cov_x, cov_y=args.cov_y,
    )
    res = run_algorithm_1(inst, args.alpha, allow_degenerate=args.allow_degenerate, on_unbracketed="infinite")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.dump_lp:
        write_lp_dump(args.dump_lp, res.problem, res.solution)
    text = json.dumps(res.to_report(), indent=2) + "\n"
    sel = res.selective
    _emit(args, text, f"distance={_fmt(res.distance)} selective=[{_fmt(sel.lo)}, {_fmt(sel.hi)}] "
                      f"naive=[{_fmt(res.naive.lo)}, {_fmt(res.naive.hi)}]")
    return EXIT_OK


def _base_config(args, delta: float) -> ExperimentConfig:
    n = args.n if isinstance(args.n, int) else args.n[0]
    return ExperimentConfig(
        n=n, m=args.m if args.m is not None else n, d=args.d, delta=delta,
        noise=args.noise, variance_mode=args.variance_mode, trials=args.trials,
        alpha=args.alpha, seed=args.seed, parallelism=args.jobs,
        allow_degenerate=not args.exclude_degenerate,
    )


def _trials_csv_path(base: str, tag: str, count: int) -> Path:
    path = Path(base)
    if count == 1:
        return path
    return path.with_name(f"{path.stem}_{tag}{path.suffix}")


def _write_trials(args, reports, tags) -> None:
    if not getattr(args, "trials_csv", None):
        return
    for rep, tag in zip(reports, tags):
        rep.write_trials_csv(_trials_csv_path(args.trials_csv, tag, len(reports)))


def cmd_simulate_coverage(args) -> int:
    reports = [run_coverage_experiment(_base_config(args, dl)) for dl in args.delta]
    _write_trials(args, reports, [f"delta{dl:g}" for dl in args.delta])
    text = dumps({"kind": "coverage", "records": [r.to_json() for r in reports]})
    summary = " ".join(
        f"delta={r.config.delta:g}:sel={r.selective_coverage:.3f},naive={r.naive_coverage:.3f}" for r in reports
    )
    _emit(args, text, summary)
    return EXIT_OK


def cmd_simulate_length(args) -> int:
    out = run_length_experiment(_base_config(args, args.delta[0]), deltas=args.delta)
    reports = out["reports"]
    _write_trials(args, reports, [f"delta{dl:g}" for dl in args.delta])
    rho = out["spearman"]
    text = dumps({
        "kind": "length",
        "records": [r.to_json() for r in reports],
        "spearman": None if math.isnan(rho) else rho,
    })
    lengths = ",".join(_fmt(r.mean_finite_length) for r in reports)
    _emit(args, text, f"mean lengths [{lengths}] spearman={_fmt(rho) if not math.isnan(rho) else 'nan'}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = replace(_base_config(args, args.delta[0]), parallelism=1)
    table = run_timing_experiment(cfg, sizes=args.n, trials=args.trials, timeout=args.timeout)
    text = dumps({"kind": "benchmark", "config": cfg.to_json(), "timings": table})
    summary = " ".join(f"n={row['n']}:{row['median_seconds']:.3f}s(fail={row['failures']})" for row in table)
    _emit(args, text, summary)
    return EXIT_OK


def cmd_robustness(args) -> int:
    cfg = _base_config(args, args.delta[0])
    reports = run_robustness_experiment(cfg)
    _write_trials(args, list(reports.values()), list(reports))
    text = dumps({"kind": "robustness", "records": {k: r.to_json() for k, r in reports.items()}})
    summary = " ".join(f"{k}={r.selective_coverage:.3f}" for k, r in reports.items())
    _emit(args, text, summary)
    return EXIT_OK


COMMANDS = {
    "ci": cmd_ci,
    "simulate-coverage": cmd_simulate_coverage,
    "simulate-length": cmd_simulate_length,
    "benchmark": cmd_benchmark,
    "robustness": cmd_robustness,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except DegenerateSolution as exc:
        print(f"wassci: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParseError, DimensionMismatch, ValueError, OSError) as exc:
        print(f"wassci: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WassCIError, ArithmeticError) as exc:
        print(f"wassci: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
