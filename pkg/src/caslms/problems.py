"""Synthetic test problems.

The base problem is a pair of isotropic Gaussian bumps on the unit square,

    f1(x) = exp(-((x1 - 0.2)^2 + (x2 - 0.5)^2) / 2)
    f2(x) = exp(-((x1 - 0.8)^2 + (x2 - 0.5)^2) / 2)

with satisfaction thresholds 0.85 on both objectives. The negative sign in
the exponent is load-bearing: it makes each objective peak at 1 over its
center so that the 0.85 thresholds carve out a nontrivial satisfactory
region (a positive sign would put every design at or above 1, satisfying
the thresholds everywhere).

Two scaled variants stress the search:

* objective-scaled: f1 and its threshold are multiplied by ``s_m``,
  leaving the satisfactory set in parameter space unchanged but stretching
  objective space anisotropically.
* parameter-scaled: ``s_m`` multiplies the (x2 - 0.5)^2 term inside both
  exponents, shrinking the satisfactory band in x2 by sqrt(s_m).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError

HC22_CENTERS = ((0.2, 0.5), (0.8, 0.5))
HC22_THRESHOLD = 0.85
HC22_RESOLUTION = 0.1  # default LMS resolution, normalized objective units


@dataclass(frozen=True)
class ProblemDef:
    """A boxed multi-objective problem plus its satisfaction thresholds.

    ``evaluate`` maps one design (d,) to objectives (m,); ``evaluate_batch``
    is an optional vectorized (n, d) -> (n, m) path used for bulk work like
    satisfactory-region sampling. ``resolution`` is the problem's default
    diversity radius in normalized objective units.
    """

    name: str
    bounds: np.ndarray      # (d, 2) rows of (lo, hi)
    thresholds: np.ndarray  # (m,)
    resolution: float
    evaluate: Callable[[np.ndarray], np.ndarray]
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if bounds.ndim != 2 or bounds.shape[1] != 2 or np.any(bounds[:, 0] >= bounds[:, 1]):
            raise InputError("bounds must be (d, 2) rows with lo < hi")
        thresholds = np.atleast_1d(np.asarray(self.thresholds, dtype=float))
        if thresholds.ndim != 1 or thresholds.size == 0 or not np.all(np.isfinite(thresholds)):
            raise InputError("thresholds must be a finite vector")
        if not (np.isfinite(self.resolution) and self.resolution > 0):
            raise InputError("resolution must be positive")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "thresholds", thresholds)

    @property
    def d(self) -> int:
        return self.bounds.shape[0]

    @property
    def m(self) -> int:
        return self.thresholds.size

    def check_design(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise InputError(f"design must have shape ({self.d},), got {x.shape}")
        if np.any(x < self.bounds[:, 0]) or np.any(x > self.bounds[:, 1]):
            raise InputError(f"design {x.tolist()} is outside the problem bounds")
        return x


def _bumps_batch(X: np.ndarray, s_obj: float, s_param: float) -> np.ndarray:
    x1 = X[..., 0]
    x2 = X[..., 1]
    f1 = np.exp(-((x1 - 0.2) ** 2 + s_param * (x2 - 0.5) ** 2) / 2.0)
    f2 = np.exp(-((x1 - 0.8) ** 2 + s_param * (x2 - 0.5) ** 2) / 2.0)
    return np.stack([s_obj * f1, f2], axis=-1)


def _make_variant(name: str, s_obj: float, s_param: float, thresholds) -> ProblemDef:
    bounds = np.array([[0.0, 1.0], [0.0, 1.0]])

    def evaluate_batch(X: np.ndarray) -> np.ndarray:
        return _bumps_batch(np.asarray(X, dtype=float), s_obj, s_param)

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = problem.check_design(x)
        return _bumps_batch(x, s_obj, s_param)

    problem = ProblemDef(
        name=name,
        bounds=bounds,
        thresholds=np.asarray(thresholds, dtype=float),
        resolution=HC22_RESOLUTION,
        evaluate=evaluate,
        evaluate_batch=evaluate_batch,
    )
    return problem


def make_hc22() -> ProblemDef:
    """The unscaled two-bump problem."""
    return _make_variant("hc22", 1.0, 1.0, (HC22_THRESHOLD, HC22_THRESHOLD))


def make_hc22_objective_scaled(s_m: float) -> ProblemDef:
    """Two bumps with f1 and its threshold multiplied by ``s_m``."""
    if not (np.isfinite(s_m) and s_m > 0):
        raise InputError("s_m must be positive")
    return _make_variant(
        "hc22-objective-scaled", s_m, 1.0, (HC22_THRESHOLD * s_m, HC22_THRESHOLD)
    )


def make_hc22_parameter_scaled(s_m: float) -> ProblemDef:
    """Two bumps with the (x2 - 0.5)^2 term multiplied by ``s_m`` in both."""
    if not (np.isfinite(s_m) and s_m > 0):
        raise InputError("s_m must be positive")
    return _make_variant(
        "hc22-parameter-scaled", 1.0, s_m, (HC22_THRESHOLD, HC22_THRESHOLD)
    )


PROBLEM_NAMES = ("hc22", "hc22-objective-scaled", "hc22-parameter-scaled")


def get_problem(name: str, s_m: float = 1.0) -> ProblemDef:
    """Look up a synthetic problem by name. ``s_m`` is ignored by plain hc22."""
    if name == "hc22":
        return make_hc22()
    if name == "hc22-objective-scaled":
        return make_hc22_objective_scaled(s_m)
    if name == "hc22-parameter-scaled":
        return make_hc22_parameter_scaled(s_m)
    raise InputError(f"unknown problem {name!r}; known: {', '.join(PROBLEM_NAMES)}")
