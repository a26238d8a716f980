"""Empirical CDF, its least concave majorant, and the Grenander estimator.

The Grenander estimator of a nonincreasing density on [0, 1] is the slope of
the least concave majorant (LCM) of the empirical distribution function. The
LCM is the upper concave hull of the points

    (0, 0), (x_1, F_n(x_1)), ..., (x_k, F_n(x_k)), (1, 1)

where x_1 < ... < x_k are the distinct order statistics, so the estimator is a
nonincreasing step function whose jumps sit at a subset of the observations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density_models import DomainError
from .sampling import SampleSet

# consecutive hull slopes closer than this (relative) are treated as collinear
SLOPE_RTOL = 1e-12


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step function jumping by ``counts / n`` at each point."""

    jump_points: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def jump_heights(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def cumulative(self) -> np.ndarray:
        """F_n at each jump point; integer arithmetic so the last entry is exactly 1."""
        return np.cumsum(self.counts) / self.n

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.jump_points, x, side="right")
        c = np.concatenate(([0.0], self.cumulative))
        out = c[k]
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConcaveMajorant:
    """Piecewise-linear concave majorant through ``(knots_x, knots_y)``.

    ``slopes[i]`` is the slope on ``[knots_x[i], knots_x[i+1]]``; slopes are
    strictly decreasing and nonnegative.
    """

    knots_x: np.ndarray
    knots_y: np.ndarray
    slopes: np.ndarray

    def __call__(self, x):
        out = np.interp(x, self.knots_x, self.knots_y)
        return float(out) if np.ndim(out) == 0 else out


def _check_x(x, *, open_left):
    arr = np.asarray(x, dtype=float)
    bad = (arr <= 0.0) if open_left else (arr < 0.0)
    if np.any(bad) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise DomainError(f"argument outside {'(0, 1]' if open_left else '[0, 1]'}: {x!r}")
    return arr


@dataclass(frozen=True)
class GrenanderEstimate:
    """Nonincreasing step density: ``values[i]`` on ``[knots[i], knots[i+1])``."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.knots) != len(self.values) + 1:
            raise ValueError("need one more knot than piece values")
        if self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            raise ValueError("pieces must cover [0, 1]")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.knots)

    def total_mass(self) -> float:
        return float(np.sum(self.values * self.widths))

    def second_moment(self) -> float:
        """Exact ``int_0^1 fhat(x)^2 x dx``, bounded by 1/2 for any nonincreasing density."""
        t = self.knots
        return float(np.sum(self.values**2 * (t[1:] ** 2 - t[:-1] ** 2)) / 2.0)

    def eval_right(self, x):
        """Right-continuous version: value of the piece containing ``x``."""
        arr = _check_x(x, open_left=False)
        k = np.clip(np.searchsorted(self.knots, arr, side="right") - 1, 0, len(self.values) - 1)
        out = self.values[k]
        return float(out) if out.ndim == 0 else out

    def eval_left(self, x):
        """Left-limit version fhat(x-), the left derivative of the majorant."""
        arr = _check_x(x, open_left=True)
        k = np.searchsorted(self.knots, arr, side="left") - 1
        out = self.values[k]
        return float(out) if out.ndim == 0 else out

    def majorant(self) -> ConcaveMajorant:
        y = np.concatenate(([0.0], np.cumsum(self.values * self.widths)))
        return ConcaveMajorant(self.knots.copy(), y, self.values.copy())

    def to_dict(self) -> dict:
        return {"knots": [float(t) for t in self.knots], "values": [float(v) for v in self.values]}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, text: str) -> GrenanderEstimate:
        data = json.loads(text)
        return cls(np.asarray(data["knots"], dtype=float), np.asarray(data["values"], dtype=float))

    def to_csv(self, path) -> None:
        """Write ``t,value`` rows; the final row repeats the last value at t = 1."""
        rows = ["t,value"]
        rows += [f"{t!r},{v!r}" for t, v in zip(self.knots[:-1].tolist(), self.values.tolist())]
        rows.append(f"{1.0!r},{float(self.values[-1])!r}")
        Path(path).write_text("\n".join(rows) + "\n")


def build_ecdf(s: SampleSet) -> EmpiricalCdf:
    return EmpiricalCdf(s.values, s.counts, s.n)


def _upper_hull(xs: list[float], ys: list[float]) -> tuple[list[float], list[float], list[float]]:
    # monotone chain over points already sorted by x; hs[i] is the slope
    # between knots i and i+1 of the current stack
    hx, hy, hs = [xs[0]], [ys[0]], []
    for x, y in zip(xs[1:], ys[1:]):
        s = (y - hy[-1]) / (x - hx[-1])
        while hs and s >= hs[-1] * (1.0 - SLOPE_RTOL):
            hx.pop()
            hy.pop()
            hs.pop()
            s = (y - hy[-1]) / (x - hx[-1])
        hx.append(x)
        hy.append(y)
        hs.append(s)
    return hx, hy, hs


def least_concave_majorant(e: EmpiricalCdf) -> ConcaveMajorant:
    """Least concave majorant of an empirical CDF on [0, 1].

    A single stack pass over the (already sorted) jump points. Collinear and
    nearly collinear points (slopes equal to within ``SLOPE_RTOL``) are
    dropped, so the result has the fewest knots and strictly decreasing
    slopes. If the largest observation is below 1 the final segment is flat.
    """
    xs = [0.0, *e.jump_points.tolist()]
    ys = [0.0, *e.cumulative.tolist()]
    if xs[-1] < 1.0:
        xs.append(1.0)
        ys.append(1.0)
    hx, hy, hs = _upper_hull(xs, ys)
    return ConcaveMajorant(np.array(hx), np.array(hy), np.array(hs))


def grenander(m: ConcaveMajorant) -> GrenanderEstimate:
    return GrenanderEstimate(m.knots_x.copy(), m.slopes.copy())


def fit(s: SampleSet) -> tuple[EmpiricalCdf, ConcaveMajorant, GrenanderEstimate]:
    """ECDF, majorant and Grenander estimate of a sample, in one call."""
    e = build_ecdf(s)
    m = least_concave_majorant(e)
    return e, m, grenander(m)


def eval_right(g: GrenanderEstimate, x):
    return g.eval_right(x)


def eval_left(g: GrenanderEstimate, x):
    return g.eval_left(x)
