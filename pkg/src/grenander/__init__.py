"""Grenander estimator for nonincreasing densities on [0, 1].

Fits the estimator, measures its x-weighted integrated square error exactly,
and certifies on simulated data that this error never exceeds twice the
Kolmogorov-Smirnov distance of the sample.
"""

from .density_models import (
    DensityModel,
    DomainError,
    PiecewiseConstant,
    PowerLaw,
    TruncatedExponential,
    Uniform,
    parse_model,
)
from .estimator import (
    ConcaveMajorant,
    EmpiricalCdf,
    GrenanderEstimate,
    build_ecdf,
    fit,
    grenander,
    least_concave_majorant,
)
from .experiments import ExperimentPlan, TheoremViolation, run_plan
from .metrics import TrialMetrics, check_theorem, evaluate, ks_statistic, majorant_deviation, weighted_ise
from .sampling import SampleSet, draw

__version__ = "0.1.0"

__all__ = [
    "ConcaveMajorant",
    "DensityModel",
    "DomainError",
    "EmpiricalCdf",
    "ExperimentPlan",
    "GrenanderEstimate",
    "PiecewiseConstant",
    "PowerLaw",
    "SampleSet",
    "TheoremViolation",
    "TrialMetrics",
    "TruncatedExponential",
    "Uniform",
    "build_ecdf",
    "check_theorem",
    "draw",
    "evaluate",
    "fit",
    "grenander",
    "ks_statistic",
    "least_concave_majorant",
    "majorant_deviation",
    "parse_model",
    "run_plan",
    "weighted_ise",
]
