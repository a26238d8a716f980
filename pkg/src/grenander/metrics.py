"""Error measures of a Grenander fit and the almost-sure inequality chain.

For a fit on a sample of size n from a nonincreasing density f with CDF F:

* ``wise``         int_0^1 (fhat(x) - f(x))^2 x dx, evaluated exactly;
* ``ks``           sup |F_n - F|, the Kolmogorov-Smirnov distance;
* ``ks_majorant``  sup |Fhat_n - F| for the least concave majorant.

With probability one, ``wise <= 2 ks_majorant <= 2 ks``. The first step is
the weighted-error bound, the second Marshall's lemma. Both hold for every
sample path, so :func:`check_theorem` uses only a floating-point tolerance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .density_models import DensityModel
from .estimator import ConcaveMajorant, EmpiricalCdf, GrenanderEstimate, fit
from .sampling import SampleSet

THEOREM_TOL = 1e-9
LEMMA_MOMENT_TOL = 1e-12
LEMMA_WISE_TOL = 1e-10

TRIAL_FIELDS = (
    "n", "seed", "replicate", "model", "wise", "ks", "ks_majorant", "slack_theorem", "slack_marshall",
)


def weighted_ise(g: GrenanderEstimate, model: DensityModel) -> float:
    """Exact ``int_0^1 (g(x) - f(x))^2 x dx``.

    On each piece ``[t0, t1)`` with value v the integrand expands to
    ``v^2 x - 2 v x f(x) + x f(x)^2``, integrated with the model's closed-form
    weighted moments. Using the right-continuous step is harmless: the
    left-limit version differs only at the knots.
    """
    total = 0.0
    t = g.knots.tolist()
    for i, v in enumerate(g.values.tolist()):
        a, b = t[i], t[i + 1]
        total += (
            v * v * (b * b - a * a) / 2.0
            - 2.0 * v * model.weighted_moment_1(a, b)
            + model.weighted_moment_2(a, b)
        )
    # rounding can leave a tiny negative when the fit is exact
    return max(total, 0.0)


def ks_statistic(e: EmpiricalCdf, model: DensityModel) -> float:
    """Exact ``sup_x |F_n(x) - F(x)|``.

    F is continuous and F_n is flat between jumps, so the supremum is attained
    at a jump point, either as ``F_n(x_i) - F(x_i)`` or as the left limit
    ``F(x_i) - F_n(x_i-)``. Beyond the last jump ``F_n = 1 >= F``, which the
    first form already covers.
    """
    c = e.cumulative
    c_prev = np.concatenate(([0.0], c[:-1]))
    f = model.cdf(e.jump_points)
    return float(max(np.max(c - f), np.max(f - c_prev), 0.0))


def majorant_deviation(m: ConcaveMajorant, model: DensityModel) -> float:
    """Exact ``sup_x |Fhat(x) - F(x)|``.

    On a majorant segment the difference ``d = Fhat - F`` is convex, so its
    maximum is at a segment end. Its minimum is where the model density meets
    the segment slope; :meth:`DensityModel.pdf_inverse` gives that point in
    closed form, clipped into the segment.
    """
    x0, x1 = m.knots_x[:-1], m.knots_x[1:]
    y0 = m.knots_y[:-1]
    ends = np.abs(m.knots_y - model.cdf(m.knots_x))
    xs = np.clip(model.pdf_inverse(m.slopes), x0, x1)
    inner = np.abs(y0 + m.slopes * (xs - x0) - model.cdf(xs))
    return float(max(ends.max(), inner.max()))


@dataclass(frozen=True)
class TrialMetrics:
    """Per-replicate error measures and inequality slacks.

    ``estimate_moment`` is ``int fhat^2 x dx``; it is kept for the bounded
    second-moment check but is not part of the CSV schema.
    """

    n: int
    seed: int | None
    replicate: int | None
    model: str
    wise: float
    ks: float
    ks_majorant: float
    slack_theorem: float
    slack_marshall: float
    estimate_moment: float = field(default=math.nan, compare=False)

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in TRIAL_FIELDS}

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            "" if v is None else repr(v) if isinstance(v, float) else v for v in self.row().values()
        )
        return buf.getvalue()

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(TRIAL_FIELDS)

    def replay_key(self) -> str:
        return f"model={self.model} n={self.n} seed={self.seed} replicate={self.replicate}"


def evaluate(sample: SampleSet, model: DensityModel) -> tuple[TrialMetrics, GrenanderEstimate]:
    """Fit a sample and compute its :class:`TrialMetrics` against ``model``."""
    e, m, g = fit(sample)
    wise = weighted_ise(g, model)
    ks = ks_statistic(e, model)
    ksm = majorant_deviation(m, model)
    metrics = TrialMetrics(
        n=sample.n,
        seed=sample.seed,
        replicate=sample.replicate_index,
        model=model.name,
        wise=wise,
        ks=ks,
        ks_majorant=ksm,
        slack_theorem=2.0 * ks - wise,
        slack_marshall=ks - ksm,
        estimate_moment=g.second_moment(),
    )
    return metrics, g


@dataclass(frozen=True)
class Certificate:
    """Outcome of the almost-sure checks on one trial.

    ``passed`` requires every individual check. ``trial`` carries the replay
    key (seed, replicate, model, n) for exact reproduction of a failure.
    """

    trial: TrialMetrics
    theorem: bool
    refined: bool
    marshall: bool
    moment_bound: bool
    wise_bound: bool

    @property
    def passed(self) -> bool:
        return self.theorem and self.refined and self.marshall and self.moment_bound and self.wise_bound

    def describe(self) -> str:
        t = self.trial
        failed = [
            name
            for name, ok in (
                (f"wise {t.wise!r} <= 2*ks {2 * t.ks!r}", self.theorem),
                (f"wise {t.wise!r} <= 2*ks_majorant {2 * t.ks_majorant!r}", self.refined),
                (f"ks_majorant {t.ks_majorant!r} <= ks {t.ks!r}", self.marshall),
                (f"int fhat^2 x dx {t.estimate_moment!r} <= 1/2", self.moment_bound),
                (f"wise {t.wise!r} <= 1", self.wise_bound),
            )
            if not ok
        ]
        status = "PASS" if self.passed else "FAIL " + "; ".join(failed)
        return f"{status} [{t.replay_key()}]"


def check_theorem(t: TrialMetrics, tol: float = THEOREM_TOL) -> Certificate:
    """Check ``wise <= 2 ks_majorant <= 2 ks`` and the bounded-moment facts."""
    moment_ok = math.isnan(t.estimate_moment) or t.estimate_moment <= 0.5 + LEMMA_MOMENT_TOL
    return Certificate(
        trial=t,
        theorem=t.wise <= 2.0 * t.ks + tol,
        refined=t.wise <= 2.0 * t.ks_majorant + tol,
        marshall=t.ks_majorant <= t.ks + tol,
        moment_bound=moment_ok,
        wise_bound=t.wise <= 1.0 + LEMMA_WISE_TOL,
    )
