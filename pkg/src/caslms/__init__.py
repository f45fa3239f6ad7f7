"""Constraint active search with a likelihood-of-metric-satisfaction acquisition.

The package searches a bounded design space for as many well-separated
satisfactory designs as an evaluation budget allows, where satisfactory
means every objective clears its threshold. Independent Gaussian process
surrogates score candidate designs by the posterior probability that a
new evaluation both clears the thresholds and lands at least a resolution
radius away from everything already measured.
"""

from .acquisition import LMSConfig, eci_like, lms, lms_batch, mc_hvi
from .errors import ConfigError, EvaluatorError, InputError, NumericalError
from .external import ExternalEvaluator, external_problem
from .gp import FitConfig, GPModel, KernelSpec, PosteriorGaussian, fit
from .metrics import (
    avg_neighbors,
    build_satisfactory_cloud,
    count_satisfactory,
    fill_distance,
    history_metrics,
    hypervolume,
    hypervolume_mc,
    pareto_front,
)
from .problems import PROBLEM_NAMES, ProblemDef, get_problem
from .search import History, HistoryRecord, SearchSpec, propose, run

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EvaluatorError",
    "ExternalEvaluator",
    "FitConfig",
    "GPModel",
    "History",
    "HistoryRecord",
    "InputError",
    "KernelSpec",
    "LMSConfig",
    "NumericalError",
    "PosteriorGaussian",
    "ProblemDef",
    "PROBLEM_NAMES",
    "SearchSpec",
    "avg_neighbors",
    "build_satisfactory_cloud",
    "count_satisfactory",
    "eci_like",
    "external_problem",
    "fill_distance",
    "fit",
    "get_problem",
    "history_metrics",
    "hypervolume",
    "hypervolume_mc",
    "lms",
    "lms_batch",
    "mc_hvi",
    "pareto_front",
    "propose",
    "run",
]
