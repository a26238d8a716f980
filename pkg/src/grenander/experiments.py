"""Monte Carlo harness for the probabilistic consequences of the error bound.

Each trial draws a sample, fits the Grenander estimator, computes
:class:`~grenander.metrics.TrialMetrics` and certifies the almost-sure chain.
Across replicates the harness then compares

* the mean weighted ISE with the risk bound ``sqrt(2 pi) / sqrt(n)``;
* the tail frequency of ``sqrt(n) ks > lam`` with the DKW bound
  ``2 exp(-2 lam^2)``;
* the coverage of ``wise <= sqrt(2 ln(2/alpha)) / sqrt(n)`` with ``1 - alpha``.

Statistical comparisons allow three standard errors; the almost-sure checks
allow only floating-point tolerance and abort the run on failure.
"""

from __future__ import annotations

import json
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .density_models import parse_model
from .metrics import Certificate, TrialMetrics, check_theorem, evaluate
from .sampling import SEED_LIMIT, draw

log = logging.getLogger(__name__)

WORKERS_ENV = "GRENANDER_WORKERS"
N_SIGMA = 3.0
# replicates per worker task
_BLOCK = 100

DEFAULT_MODELS = (
    "uniform",
    "powerlaw:alpha=0.6",
    "powerlaw:alpha=0.75",
    "powerlaw:alpha=0.9",
    "texp:lambda=2.0",
    "pwc:breaks=0.2,0.5;values=3,1,0.2",
)


class PlanError(ValueError):
    """An experiment plan failed validation."""


class TheoremViolation(RuntimeError):
    """An almost-sure inequality failed on some trial; this is a bug, not noise."""

    def __init__(self, certificate: Certificate):
        self.certificate = certificate
        super().__init__(certificate.describe())


@dataclass(frozen=True)
class ExperimentPlan:
    models: tuple[str, ...] = DEFAULT_MODELS
    n_values: tuple[int, ...] = (1, 10, 100, 1000)
    reps: int = 500
    seed: int = 20240611
    alpha_levels: tuple[float, ...] = (0.01, 0.05, 0.1)
    lambda_grid: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)

    def __post_init__(self):
        for name in ("models", "n_values", "alpha_levels", "lambda_grid"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if not self.models:
            raise PlanError("plan needs at least one model")
        if not self.n_values:
            raise PlanError("plan needs at least one sample size")
        if any(int(n) != n or n < 1 for n in self.n_values):
            raise PlanError(f"sample sizes must be positive integers: {self.n_values}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise PlanError(f"reps must be a positive integer, got {self.reps!r}")
        if not (0 <= self.seed < SEED_LIMIT):
            raise PlanError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if any(not (0.0 < a < 1.0) for a in self.alpha_levels):
            raise PlanError(f"alpha levels must lie in (0, 1): {self.alpha_levels}")
        if any(not (lam >= 0.0) for lam in self.lambda_grid):
            raise PlanError(f"lambda values must be nonnegative: {self.lambda_grid}")
        for spec in self.models:
            try:
                parse_model(spec)
            except ValueError as exc:
                raise PlanError(str(exc)) from None

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentPlan:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known - {"model"}
        if unknown:
            raise PlanError(f"unknown plan fields: {sorted(unknown)}")
        data = dict(data)
        if "model" in data:
            data["models"] = (data.pop("model"),)
        try:
            return cls(**data)
        except PlanError:
            raise
        except (TypeError, ValueError) as exc:
            raise PlanError(f"malformed plan: {exc}") from None

    @classmethod
    def from_json(cls, path) -> ExperimentPlan:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise PlanError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise PlanError(f"{path}: plan must be a JSON object")
        return cls.from_dict(data)


def risk_bound(n: int) -> float:
    """Quadratic-risk bound ``sqrt(2 pi / n)``."""
    return math.sqrt(2.0 * math.pi / n)


def dkw_bound(lam: float) -> float:
    return 2.0 * math.exp(-2.0 * lam * lam)


def coverage_threshold(alpha: float, n: int) -> float:
    """Weighted-ISE level exceeded with probability at most alpha."""
    return math.sqrt(2.0 * math.log(2.0 / alpha) / n)


@dataclass(frozen=True)
class RiskRow:
    model: str
    n: int
    reps: int
    mean_wise: float
    stderr: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class DkwRow:
    model: str
    n: int
    reps: int
    lam: float
    frequency: float
    stderr: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class CoverageRow:
    model: str
    n: int
    reps: int
    alpha: float
    threshold: float
    coverage: float
    stderr: float
    passed: bool


def _binomial_se(p: float, reps: int) -> float:
    return math.sqrt(p * (1.0 - p) / reps)


def _groups(trials) -> dict[tuple[str, int], list[TrialMetrics]]:
    groups: dict[tuple[str, int], list[TrialMetrics]] = defaultdict(list)
    for t in sorted(trials, key=lambda t: (t.model, t.n, t.replicate)):
        groups[(t.model, t.n)].append(t)
    return dict(sorted(groups.items()))


def risk_curve(trials) -> list[RiskRow]:
    """Mean weighted ISE per (model, n) against the risk bound."""
    rows = []
    for (model, n), group in _groups(trials).items():
        w = np.array([t.wise for t in group])
        se = float(w.std(ddof=1) / math.sqrt(len(w))) if len(w) > 1 else 0.0
        mean = float(w.mean())
        bound = risk_bound(n)
        rows.append(RiskRow(model, n, len(w), mean, se, bound, mean + N_SIGMA * se <= bound))
    return rows


def dkw_table(trials, lambda_grid) -> list[DkwRow]:
    """Empirical ``P(sqrt(n) ks > lam)`` per (model, n, lam) against ``2 exp(-2 lam^2)``."""
    if not trials:
        raise ValueError("no trials")
    rows = []
    for (model, n), group in _groups(trials).items():
        scaled = math.sqrt(n) * np.array([t.ks for t in group])
        for lam in lambda_grid:
            p = float(np.mean(scaled > lam))
            se = _binomial_se(p, len(group))
            bound = dkw_bound(lam)
            rows.append(DkwRow(model, n, len(group), float(lam), p, se, bound, p <= bound + N_SIGMA * se))
    return rows


def coverage_table(trials, alpha_levels) -> list[CoverageRow]:
    """Empirical ``P(wise <= sqrt(2 ln(2/alpha) / n))`` against ``1 - alpha``."""
    if not trials:
        raise ValueError("no trials")
    rows = []
    for (model, n), group in _groups(trials).items():
        w = np.array([t.wise for t in group])
        for alpha in alpha_levels:
            thr = coverage_threshold(alpha, n)
            p = float(np.mean(w <= thr))
            se = _binomial_se(p, len(group))
            rows.append(
                CoverageRow(model, n, len(group), float(alpha), thr, p, se, p >= 1.0 - alpha - N_SIGMA * se)
            )
    return rows


@dataclass
class RiskSummary:
    plan: ExperimentPlan
    trials: int
    risk: list[RiskRow] = field(default_factory=list)
    dkw: list[DkwRow] = field(default_factory=list)
    coverage: list[CoverageRow] = field(default_factory=list)
    min_slack_theorem: float = math.inf
    min_slack_marshall: float = math.inf

    @property
    def passed(self) -> bool:
        return all(r.passed for r in (*self.risk, *self.dkw, *self.coverage))

    def failures(self) -> list[str]:
        return [repr(r) for r in (*self.risk, *self.dkw, *self.coverage) if not r.passed]

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "trials": self.trials,
            "theorem_violations": 0,
            "min_slack_theorem": self.min_slack_theorem,
            "min_slack_marshall": self.min_slack_marshall,
            "risk": [asdict(r) for r in self.risk],
            "dkw": [asdict(r) for r in self.dkw],
            "coverage": [asdict(r) for r in self.coverage],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass
class ExperimentResult:
    summary: RiskSummary
    trials: list[TrialMetrics]


def _run_block(model_spec: str, n: int, seed: int, start: int, stop: int) -> list[TrialMetrics]:
    model = parse_model(model_spec)
    return [evaluate(draw(model, n, seed, r), model)[0] for r in range(start, stop)]


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise PlanError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(workers, 1)


def run_plan(plan: ExperimentPlan, workers: int | None = None, log_path=None) -> ExperimentResult:
    """Run every (model, n, replicate) trial of ``plan`` and summarise.

    Replicate ``r`` of every (model, n) cell uses the uniform stream keyed by
    ``(plan.seed, r)``, so results do not depend on ``workers``. If
    ``log_path`` is given, trial rows are appended there as blocks finish.

    Raises
    ------
    TheoremViolation
        If any trial breaks an almost-sure inequality.
    """
    workers = worker_count() if workers is None else max(int(workers), 1)
    tasks = [
        (spec, n, plan.seed, start, min(start + _BLOCK, plan.reps))
        for spec in plan.models
        for n in plan.n_values
        for start in range(0, plan.reps, _BLOCK)
    ]
    logf = None
    if log_path is not None:
        logf = open(log_path, "w")
        logf.write(TrialMetrics.csv_header() + "\n")
    trials: list[TrialMetrics] = []
    try:
        if workers == 1:
            blocks = (_run_block(*t) for t in tasks)
            pool = None
        else:
            pool = ProcessPoolExecutor(max_workers=workers)
            blocks = pool.map(_run_block, *zip(*tasks))
        try:
            for block in blocks:
                if logf is not None:
                    logf.writelines(t.csv_row() + "\n" for t in block)
                    logf.flush()
                for t in block:
                    cert = check_theorem(t)
                    if not cert.passed:
                        raise TheoremViolation(cert)
                trials.extend(block)
        finally:
            if pool is not None:
                pool.shutdown(cancel_futures=True)
    finally:
        if logf is not None:
            logf.close()
    log.info("ran %d trials", len(trials))
    return ExperimentResult(summarize(plan, trials), trials)


def summarize(plan: ExperimentPlan, trials: list[TrialMetrics]) -> RiskSummary:
    trials = sorted(trials, key=lambda t: (t.model, t.n, t.replicate))
    return RiskSummary(
        plan=plan,
        trials=len(trials),
        risk=risk_curve(trials),
        dkw=dkw_table(trials, plan.lambda_grid),
        coverage=coverage_table(trials, plan.alpha_levels),
        min_slack_theorem=min(t.slack_theorem for t in trials),
        min_slack_marshall=min(t.slack_marshall for t in trials),
    )


def write_trials(trials, path) -> None:
    lines = [TrialMetrics.csv_header()] + [t.csv_row() for t in trials]
    Path(path).write_text("\n".join(lines) + "\n")


def write_plotdata(summary: RiskSummary, directory) -> None:
    """One ``series,x,y`` CSV per figure: risk curve, DKW tail, coverage."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    risk = ["series,x,y"]
    for r in summary.risk:
        risk += [f'"{r.model}",{r.n},{r.mean_wise!r}', f'"bound",{r.n},{r.bound!r}']
    dkw = ["series,x,y"]
    for r in summary.dkw:
        dkw += [f'"{r.model} n={r.n}",{r.lam!r},{r.frequency!r}', f'"bound",{r.lam!r},{r.bound!r}']
    cov = ["series,x,y"]
    for r in summary.coverage:
        cov += [f'"{r.model} n={r.n}",{r.alpha!r},{r.coverage!r}', f'"target",{r.alpha!r},{1 - r.alpha!r}']
    for name, lines in (("risk_curve", risk), ("dkw_tail", dkw), ("coverage", cov)):
        # the bound series repeats per model; keep first occurrence only
        (out / f"{name}.csv").write_text("\n".join(dict.fromkeys(lines)) + "\n")
