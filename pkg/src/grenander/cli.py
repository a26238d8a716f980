"""Command-line interface.

Subcommands::

    grenander estimate --model uniform --n 1000 --seed 7
    grenander estimate --input samples.csv [--model ...] [--rescale]
    grenander verify [--plan plan.json]
    grenander risk --model powerlaw:alpha=0.75 --n-values 100,1000,10000
    grenander dkw --n 1000 --reps 2000
    grenander coverage --n 1000 --reps 2000

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
The worker count for Monte Carlo runs is read from ``GRENANDER_WORKERS``;
outputs do not depend on it.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .density_models import DomainError, parse_model
from .estimator import fit
from .experiments import (
    DEFAULT_MODELS,
    WORKERS_ENV,
    ExperimentPlan,
    PlanError,
    TheoremViolation,
    coverage_table,
    dkw_table,
    risk_curve,
    run_plan,
    write_plotdata,
)
from .metrics import evaluate
from .sampling import SampleSet, draw

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class SampleFileError(DomainError):
    """A sample file is empty or holds a value that is not a valid observation."""


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def read_samples(path, rescale: bool = False) -> np.ndarray:
    """Read one value per line; blank lines and ``#`` comments are skipped.

    Values must lie in (0, 1] unless ``rescale`` is set, in which case
    positive data are divided by their maximum. Rescaling changes the
    estimand to the density of ``X / max(X)``.
    """
    values, lines = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise SampleFileError(f"{path}:{lineno}: not a number: {text!r}") from None
            lines.append(lineno)
    if not values:
        raise SampleFileError(f"{path}: no sample values")
    arr = np.array(values)
    lo = 0.0
    hi = arr.max() if rescale else 1.0
    for v, lineno in zip(values, lines):
        if not (lo < v <= hi) or not np.isfinite(v):
            interval = "(0, max]" if rescale else "(0, 1]"
            raise SampleFileError(f"{path}:{lineno}: value {v!r} outside {interval}")
    if rescale:
        arr = arr / hi
    return arr


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="base seed (64-bit unsigned integer)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="format of tabular outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grenander",
        description="Grenander estimator for nonincreasing densities on [0, 1] and Monte Carlo "
        "certification of its weighted-ISE bound.",
        epilog=f"Set {WORKERS_ENV}=k to run Monte Carlo trials on k processes; results are identical for any k.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="fit the Grenander estimator to one sample")
    _add_common(p)
    p.add_argument("--model", help="model to draw from, or ground truth for --input (e.g. powerlaw:alpha=0.75)")
    p.add_argument("--n", type=int, help="sample size to draw from --model")
    p.add_argument("--replicate", type=int, default=0, help="replicate index of the draw (default 0)")
    p.add_argument("--input", type=Path, help="CSV file of observations, one per line")
    p.add_argument("--rescale", action="store_true", help="divide --input data by its maximum (changes the estimand)")
    p.add_argument("--save-sample", action="store_true", help="also write the drawn sample to sample.csv")

    p = sub.add_parser("verify", help="run a plan and certify every trial")
    _add_common(p)
    p.add_argument("--plan", type=Path, help="JSON plan file (default: built-in plan)")
    p.add_argument("--reps", type=int, help="override replicates per (model, n)")
    p.add_argument("--plotdata", action="store_true", help="also write plotdata/*.csv")

    for name, helptext in (
        ("risk", "mean weighted ISE against the sqrt(2 pi / n) risk bound"),
        ("dkw", "tail frequency of sqrt(n) KS against 2 exp(-2 lam^2)"),
        ("coverage", "coverage of the high-probability weighted-ISE bound"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--model", default=None, help="model spec (default depends on subcommand)")
        p.add_argument("--reps", type=int, default=None, help="replicates per sample size")
        if name == "risk":
            p.add_argument("--n-values", type=_int_list, default=[100, 1000, 10000], help="comma-separated sample sizes")
        else:
            p.add_argument("--n", type=int, default=1000, help="sample size (default 1000)")
        if name == "dkw":
            p.add_argument("--lambdas", type=_float_list, default=[0.5, 1.0, 1.5, 2.0], help="comma-separated lambda grid")
        if name == "coverage":
            p.add_argument("--alphas", type=_float_list, default=[0.01, 0.05, 0.1], help="comma-separated alpha levels")
    return parser


def _write_table(rows: list[dict], out: Path, stem: str, fmt: str, columns=None) -> Path:
    columns = columns or (list(rows[0]) if rows else [])
    if fmt == "json":
        path = out / f"{stem}.json"
        path.write_text(json.dumps([{c: r[c] for c in columns} for r in rows], indent=2) + "\n")
    else:
        path = out / f"{stem}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            w.writerows([[repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns] for r in rows])
    return path


def cmd_estimate(args) -> int:
    if args.input is not None and args.n is not None:
        raise UsageError("give either --input or --n, not both")
    if args.input is None and (args.model is None or args.n is None):
        raise UsageError("estimate needs --model with --n, or --input")
    if args.rescale and args.input is None:
        raise UsageError("--rescale applies only to --input")
    model = parse_model(args.model) if args.model else None
    if args.input is not None:
        sample = SampleSet.from_values(read_samples(args.input, args.rescale), model_name=str(args.input))
    else:
        if args.n < 1:
            raise UsageError("--n must be positive")
        seed = 0 if args.seed is None else args.seed
        sample = draw(model, args.n, seed, args.replicate)
        if args.save_sample:
            sample.to_csv(args.out / "sample.csv")
    if model is not None:
        metrics, g = evaluate(sample, model)
        _write_table([metrics.row()], args.out, "metrics", args.format)
    else:
        _, _, g = fit(sample)
    g.to_json(args.out / "estimate.json")
    if args.format == "csv":
        g.to_csv(args.out / "estimate.csv")
    print(f"{len(g.values)} pieces written to {args.out / 'estimate.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    plan = ExperimentPlan.from_json(args.plan) if args.plan else ExperimentPlan()
    changes = {}
    if args.reps is not None:
        changes["reps"] = args.reps
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        plan = ExperimentPlan.from_dict({**plan.to_dict(), **changes})
    try:
        result = run_plan(plan, log_path=args.out / "trials.csv")
    except TheoremViolation as exc:
        print(f"theorem violation: {exc}", file=sys.stderr)
        return EXIT_FAIL
    summary = result.summary
    (args.out / "summary.json").write_text(summary.to_json())
    if args.plotdata:
        write_plotdata(summary, args.out / "plotdata")
    print(
        f"{summary.trials} trials, 0 theorem violations, min slack {summary.min_slack_theorem!r}; "
        f"statistical checks {'passed' if summary.passed else 'FAILED'}"
    )
    for failure in summary.failures():
        print(f"failed: {failure}", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_FAIL


def _single_model_plan(args, n_values, default_reps, **extra) -> ExperimentPlan:
    fields = {
        "models": (args.model or DEFAULT_MODELS[0],),
        "n_values": tuple(n_values),
        "reps": default_reps if args.reps is None else args.reps,
        **extra,
    }
    if args.seed is not None:
        fields["seed"] = args.seed
    return ExperimentPlan(**fields)


def cmd_risk(args) -> int:
    if args.model is None:
        args.model = "powerlaw:alpha=0.75"
    plan = _single_model_plan(args, args.n_values, 500)
    result = run_plan(plan)
    rows = risk_curve(result.trials)
    table = [{"n": r.n, "mean_wise": r.mean_wise, "stderr": r.stderr, "bound": r.bound} for r in rows]
    path = _write_table(table, args.out, "risk_curve", "csv")
    print(f"wrote {path}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def cmd_dkw(args) -> int:
    plan = _single_model_plan(args, [args.n], 2000, lambda_grid=tuple(args.lambdas))
    rows = dkw_table(run_plan(plan).trials, plan.lambda_grid)
    table = [{"lambda": r.lam, "frequency": r.frequency, "stderr": r.stderr, "bound": r.bound} for r in rows]
    path = _write_table(table, args.out, "dkw", args.format)
    print(f"wrote {path}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def cmd_coverage(args) -> int:
    plan = _single_model_plan(args, [args.n], 2000, alpha_levels=tuple(args.alphas))
    rows = coverage_table(run_plan(plan).trials, plan.alpha_levels)
    table = [
        {"alpha": r.alpha, "threshold": r.threshold, "coverage": r.coverage, "stderr": r.stderr} for r in rows
    ]
    path = _write_table(table, args.out, "coverage", args.format)
    print(f"wrote {path}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


COMMANDS = {
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "risk": cmd_risk,
    "dkw": cmd_dkw,
    "coverage": cmd_coverage,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args)
    except (UsageError, PlanError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SampleFileError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"{parser.prog}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
