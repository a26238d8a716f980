"""Closed-form nonincreasing densities on [0, 1].

Every model exposes its density, distribution function, quantile function and
the two weighted moments

    weighted_moment_1(a, b) = int_a^b x f(x) dx
    weighted_moment_2(a, b) = int_a^b x f(x)^2 dx

in closed form, so that the weighted integrated square error of a step
density against the model can be evaluated without numerical integration.

All methods accept scalars or arrays and return a ``float`` for scalar input.
"""

from __future__ import annotations

import enum
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class ModelKind(enum.Enum):
    POWER_LAW = "powerlaw"
    UNIFORM = "uniform"
    TRUNCATED_EXPONENTIAL = "texp"
    PIECEWISE_CONSTANT = "pwc"


def _as_output(x, scalar):
    return float(x) if scalar else x


def _check_unit(x, *, open_left=False):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("argument is NaN")
    lo_bad = arr <= 0.0 if open_left else arr < 0.0
    if np.any(lo_bad) or np.any(arr > 1.0):
        interval = "(0, 1]" if open_left else "[0, 1]"
        raise DomainError(f"argument outside {interval}: {x!r}")
    return arr, arr.ndim == 0


def _check_interval(a, b):
    if not (0.0 <= a <= b <= 1.0):
        raise DomainError(f"need 0 <= a <= b <= 1, got a={a!r}, b={b!r}")


class DensityModel(ABC):
    """A nonincreasing probability density on [0, 1].

    Subclasses implement the vectorised ``_pdf``, ``_cdf``, ``_quantile`` and
    ``_pdf_inverse`` kernels plus the scalar moment antiderivatives; this base
    class owns domain validation.
    """

    kind: ModelKind

    @property
    @abstractmethod
    def name(self) -> str:
        """Canonical model string, parseable by :func:`parse_model`."""

    @property
    def breakpoints(self) -> np.ndarray:
        """Interior points where the density jumps (empty for smooth models)."""
        return np.empty(0)

    def pdf(self, x):
        """Right-continuous density at ``x`` in (0, 1]."""
        arr, scalar = _check_unit(x, open_left=True)
        return _as_output(self._pdf(arr), scalar)

    def cdf(self, x):
        arr, scalar = _check_unit(x)
        out = np.clip(self._cdf(arr), 0.0, 1.0)
        out = np.where(arr == 1.0, 1.0, np.where(arr == 0.0, 0.0, out))
        return _as_output(out, scalar)

    def quantile(self, u):
        """Return ``inf{x : F(x) >= u}``."""
        arr, scalar = _check_unit(u)
        out = np.clip(self._quantile(arr), 0.0, 1.0)
        out = np.where(arr == 1.0, 1.0, np.where(arr == 0.0, 0.0, out))
        return _as_output(out, scalar)

    def pdf_inverse(self, slope):
        """Maximiser over [0, 1] of ``F(x) - slope * x``.

        This is the generalised inverse of the density: the point at which a
        line of the given slope touches the concave CDF from above. Used to
        locate the interior extremum of ``Fhat - F`` on a majorant segment.
        """
        s = np.asarray(slope, dtype=float)
        if np.any(s < 0.0):
            raise DomainError("slope must be nonnegative")
        return _as_output(np.clip(self._pdf_inverse(s), 0.0, 1.0), s.ndim == 0)

    def weighted_moment_1(self, a: float, b: float) -> float:
        """Exact ``int_a^b x f(x) dx``."""
        _check_interval(a, b)
        if a == b:
            return 0.0
        return float(self._moment_1(a, b))

    def weighted_moment_2(self, a: float, b: float) -> float:
        """Exact ``int_a^b x f(x)^2 dx``. Finite for every supported model."""
        _check_interval(a, b)
        if a == b:
            return 0.0
        return float(self._moment_2(a, b))

    def __str__(self) -> str:
        return self.name

    @abstractmethod
    def _pdf(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _quantile(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _pdf_inverse(self, s: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _moment_1(self, a: float, b: float) -> float: ...

    @abstractmethod
    def _moment_2(self, a: float, b: float) -> float: ...


@dataclass(frozen=True)
class Uniform(DensityModel):
    kind = ModelKind.UNIFORM

    @property
    def name(self) -> str:
        return "uniform"

    def _pdf(self, x):
        return np.ones_like(x)

    def _cdf(self, x):
        return x.copy()

    def _quantile(self, u):
        return u.copy()

    def _pdf_inverse(self, s):
        # F(x) - s x = (1 - s) x: increasing for s < 1, else maximal at 0
        return np.where(s < 1.0, 1.0, 0.0)

    def _moment_1(self, a, b):
        return (b * b - a * a) / 2.0

    def _moment_2(self, a, b):
        return (b * b - a * a) / 2.0


@dataclass(frozen=True)
class PowerLaw(DensityModel):
    """``f(x) = (1 - alpha) x**(-alpha)``, unbounded at 0 for ``alpha > 0``."""

    alpha: float
    kind = ModelKind.POWER_LAW

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @property
    def name(self) -> str:
        return f"powerlaw:alpha={self.alpha!r}"

    def _pdf(self, x):
        return (1.0 - self.alpha) * x ** (-self.alpha)

    def _cdf(self, x):
        return x ** (1.0 - self.alpha)

    def _quantile(self, u):
        return u ** (1.0 / (1.0 - self.alpha))

    def _pdf_inverse(self, s):
        a = self.alpha
        with np.errstate(divide="ignore", over="ignore"):
            x = ((1.0 - a) / s) ** (1.0 / a)
        return np.where(s > 0.0, x, 1.0)

    def _moment_1(self, a, b):
        p = 2.0 - self.alpha
        return (1.0 - self.alpha) / p * (b**p - a**p)

    def _moment_2(self, a, b):
        p = 2.0 - 2.0 * self.alpha
        return (1.0 - self.alpha) / 2.0 * (b**p - a**p)


@dataclass(frozen=True)
class TruncatedExponential(DensityModel):
    """``f(x) = lam exp(-lam x) / (1 - exp(-lam))`` on [0, 1]."""

    lam: float
    kind = ModelKind.TRUNCATED_EXPONENTIAL

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive, got {self.lam!r}")

    @property
    def name(self) -> str:
        return f"texp:lambda={self.lam!r}"

    @property
    def _z(self) -> float:
        return -math.expm1(-self.lam)

    def _pdf(self, x):
        return self.lam * np.exp(-self.lam * x) / self._z

    def _cdf(self, x):
        return -np.expm1(-self.lam * x) / self._z

    def _quantile(self, u):
        return -np.log1p(-u * self._z) / self.lam

    def _pdf_inverse(self, s):
        with np.errstate(divide="ignore"):
            x = -np.log(s * self._z / self.lam) / self.lam
        return x

    def _moment_1(self, a, b):
        lam = self.lam

        def anti(x):
            return -math.exp(-lam * x) * (x + 1.0 / lam)

        return (anti(b) - anti(a)) / self._z

    def _moment_2(self, a, b):
        lam = self.lam

        def anti(x):
            return -math.exp(-2.0 * lam * x) * (x / (2.0 * lam) + 1.0 / (4.0 * lam * lam))

        return lam * lam / (self._z * self._z) * (anti(b) - anti(a))


@dataclass(frozen=True)
class PiecewiseConstant(DensityModel):
    """Nonincreasing step density.

    Parameters
    ----------
    breaks : tuple of float
        Strictly increasing interior breakpoints in (0, 1).
    values : tuple of float
        Nonincreasing positive piece heights, ``len(breaks) + 1`` of them.
        Must integrate to 1 within 1e-12; use :meth:`normalized` otherwise.
    """

    breaks: tuple[float, ...]
    values: tuple[float, ...]
    kind = ModelKind.PIECEWISE_CONSTANT
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _vals: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)
        if len(values) != len(breaks) + 1:
            raise DomainError("need exactly one value per piece")
        edges = np.array((0.0, *breaks, 1.0))
        if np.any(np.diff(edges) <= 0.0):
            raise DomainError("breaks must be strictly increasing inside (0, 1)")
        vals = np.array(values)
        if np.any(vals <= 0.0) or np.any(np.diff(vals) > 0.0):
            raise DomainError("values must be positive and nonincreasing")
        mass = np.diff(edges) * vals
        total = float(mass.sum())
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"density integrates to {total!r}, not 1")
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_vals", vals)
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(mass))))

    @classmethod
    def normalized(cls, breaks, values) -> PiecewiseConstant:
        """Build a model after rescaling ``values`` to integrate to one."""
        edges = np.array((0.0, *breaks, 1.0), dtype=float)
        total = float(np.sum(np.diff(edges) * np.asarray(values, dtype=float)))
        if not total > 0.0:
            raise DomainError("values must have positive total mass")
        return cls(tuple(breaks), tuple(float(v) / total for v in values))

    @property
    def name(self) -> str:
        b = ",".join(repr(x) for x in self.breaks)
        v = ",".join(repr(x) for x in self.values)
        return f"pwc:breaks={b};values={v}" if b else f"pwc:values={v}"

    @property
    def breakpoints(self) -> np.ndarray:
        return self._edges[1:-1].copy()

    def _piece(self, x):
        # piece k covers [edge_k, edge_{k+1}); x = 1 belongs to the last piece
        k = np.searchsorted(self._edges, x, side="right") - 1
        return np.clip(k, 0, len(self._vals) - 1)

    def _pdf(self, x):
        return self._vals[self._piece(x)]

    def _cdf(self, x):
        k = self._piece(x)
        return self._cum[k] + self._vals[k] * (x - self._edges[k])

    def _quantile(self, u):
        # F is strictly increasing, so the inverse is single valued
        k = np.searchsorted(self._cum, u, side="right") - 1
        k = np.clip(k, 0, len(self._vals) - 1)
        return self._edges[k] + (u - self._cum[k]) / self._vals[k]

    def _pdf_inverse(self, s):
        # F(x) - s x rises on every piece whose height exceeds s
        rising = (self._vals[None, :] > np.atleast_1d(s)[:, None]).sum(axis=1)
        return self._edges[rising].reshape(np.shape(s))

    def _overlaps(self, a, b):
        lo = np.clip(self._edges[:-1], a, b)
        hi = np.clip(self._edges[1:], a, b)
        return lo, hi

    def _moment_1(self, a, b):
        lo, hi = self._overlaps(a, b)
        return float(np.sum(self._vals * (hi * hi - lo * lo)) / 2.0)

    def _moment_2(self, a, b):
        lo, hi = self._overlaps(a, b)
        return float(np.sum(self._vals**2 * (hi * hi - lo * lo)) / 2.0)


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DomainError(f"malformed {what}: {text!r}") from None


def parse_model(spec: str) -> DensityModel:
    """Parse a model string such as ``powerlaw:alpha=0.75``.

    Accepted forms are ``uniform``, ``powerlaw:alpha=A``, ``texp:lambda=L`` and
    ``pwc:breaks=b1,b2;values=v1,v2,v3``. Piecewise-constant values that do
    not integrate to one are rescaled with a warning.
    """
    kind, _, rest = spec.strip().partition(":")
    kind = kind.strip().lower()
    params: dict[str, str] = {}
    for part in filter(None, (p.strip() for p in rest.split(";"))):
        key, eq, value = part.partition("=")
        if not eq:
            raise DomainError(f"malformed parameter {part!r} in {spec!r}")
        params[key.strip().lower()] = value.strip()

    def take(key):
        try:
            return float(params.pop(key))
        except KeyError:
            raise DomainError(f"{kind} needs a '{key}' parameter") from None
        except ValueError:
            raise DomainError(f"parameter '{key}' is not a number in {spec!r}") from None

    if kind == ModelKind.UNIFORM.value:
        model: DensityModel = Uniform()
    elif kind == ModelKind.POWER_LAW.value:
        model = PowerLaw(take("alpha"))
    elif kind == ModelKind.TRUNCATED_EXPONENTIAL.value:
        model = TruncatedExponential(take("lambda"))
    elif kind == ModelKind.PIECEWISE_CONSTANT.value:
        breaks = _floats(params.pop("breaks", ""), "breaks")
        values = _floats(params.pop("values", ""), "values")
        try:
            model = PiecewiseConstant(tuple(breaks), tuple(values))
        except DomainError as exc:
            if "integrates to" not in str(exc):
                raise
            warnings.warn(f"{spec!r}: {exc}; values rescaled to unit mass", stacklevel=2)
            model = PiecewiseConstant.normalized(breaks, values)
    else:
        raise DomainError(f"unknown model kind {kind!r} in {spec!r}")
    if params:
        raise DomainError(f"unexpected parameters {sorted(params)} in {spec!r}")
    return model
