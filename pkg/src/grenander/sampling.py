"""Reproducible inverse-transform sampling from a :class:`DensityModel`.

The uniform stream for a replicate is a Philox counter-based generator keyed
by ``(seed, replicate_index)``; the i-th draw of the replicate is the i-th
counter block. A replicate's sample therefore never depends on which other
replicates ran before it, or in which process.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density_models import DensityModel

SEED_LIMIT = 2**64
# smallest positive value produced by Generator.random (53-bit mantissa)
_UNIFORM_FLOOR = 2.0**-53


@dataclass(frozen=True)
class SampleSet:
    """Sorted sample with tie multiplicities and the key that produced it.

    ``values`` holds the distinct order statistics, strictly increasing, and
    ``counts`` how many draws landed on each; ``counts.sum() == n``.
    """

    values: np.ndarray
    counts: np.ndarray
    n: int
    seed: int | None = None
    replicate_index: int | None = None
    model_name: str = ""

    def __post_init__(self):
        if self.n < 1 or len(self.values) == 0:
            raise ValueError("a sample needs at least one value")
        if len(self.values) != len(self.counts) or int(self.counts.sum()) != self.n:
            raise ValueError("counts do not match the sample size")
        if np.any(np.diff(self.values) <= 0.0):
            raise ValueError("values must be strictly increasing")
        if self.values[0] <= 0.0 or self.values[-1] > 1.0:
            raise ValueError("sample values must lie in (0, 1]")

    @classmethod
    def from_values(cls, values, *, seed=None, replicate_index=None, model_name="") -> SampleSet:
        """Sort raw draws and collapse exact ties into multiplicities."""
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("a sample needs at least one value")
        distinct, counts = np.unique(arr, return_counts=True)
        return cls(distinct, counts.astype(np.int64), int(arr.size), seed, replicate_index, model_name)

    @property
    def sorted_values(self) -> np.ndarray:
        """All n order statistics, ties repeated."""
        return np.repeat(self.values, self.counts)

    def min_value(self) -> float:
        """X_min, the smallest observation (strictly positive)."""
        return float(self.values[0])

    def to_csv(self, path) -> None:
        """Write one value per line, ties repeated, at full precision."""
        lines = [f"# model={self.model_name} seed={self.seed} replicate={self.replicate_index}"]
        lines += [repr(float(v)) for v in self.sorted_values]
        Path(path).write_text("\n".join(lines) + "\n")


def uniform_stream(seed: int, replicate_index: int, n: int) -> np.ndarray:
    """The first ``n`` uniforms in (0, 1) of replicate ``replicate_index``."""
    if not (0 <= seed < SEED_LIMIT):
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    if replicate_index < 0:
        raise ValueError("replicate_index must be nonnegative")
    bitgen = np.random.Philox(np.random.SeedSequence([seed, replicate_index]))
    u = np.random.Generator(bitgen).random(n)
    u[u == 0.0] = _UNIFORM_FLOOR
    return u


def draw(model: DensityModel, n: int, seed: int, replicate_index: int = 0) -> SampleSet:
    """Draw ``n`` i.i.d. observations from ``model`` by inverse transform.

    Parameters
    ----------
    model : DensityModel
        Target density.
    n : int
        Sample size, at least 1.
    seed : int
        Base seed, any 64-bit unsigned integer.
    replicate_index : int
        Replicate number; with ``seed`` it fully determines the sample.

    Returns
    -------
    SampleSet
        Sorted sample with ties collapsed.
    """
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n!r}")
    x = model.quantile(uniform_stream(seed, replicate_index, n))
    # very heavy power laws can underflow u**(1/(1-alpha)) to zero
    x = np.maximum(x, np.finfo(float).tiny)
    return SampleSet.from_values(x, seed=seed, replicate_index=replicate_index, model_name=model.name)


def min_value(s: SampleSet) -> float:
    return s.min_value()
