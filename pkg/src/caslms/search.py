"""The constraint-active-search loop.

One iteration fits an independent GP per objective on everything observed
so far, maximizes the configured acquisition over a candidate pool, and
evaluates the winner. The pool is a scrambled low-discrepancy sample of
the design box plus a cluster of Gaussian perturbations around recent
satisfactory designs, so the argmax gets both global coverage and local
refinement without a nested optimizer.

With ``normalize=True`` each proposal step first maps the observed
objective bounding box onto the unit box and re-expresses the thresholds,
the exclusion set, and the posterior in those coordinates; the resolution
r is then interpreted in normalized units. That per-iteration rescaling is
what makes the search invariant to an affine stretch of any objective: a
run on (s * f1, f2) retraces the run on (f1, f2) design for design.

Every random draw is pulled from a named substream of the run seed
(init, per-iteration proposal, per-fit), so repeated runs are identical
and histories are reproducible from the spec alone.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from . import acquisition as acq
from . import gp, metrics
from .errors import EvaluatorError, InputError

ACQUISITIONS = ("lms", "mc-hvi", "eci-like", "random")

DEFAULT_POOL_SIZE = 2048
# perturbations around satisfactory incumbents: how many incumbents to
# keep (most recent first), draws per incumbent, and the draw width as a
# fraction of the box width
INCUMBENT_LIMIT = 10
PERTURBATIONS_PER_INCUMBENT = 10
PERTURBATION_SCALE = 0.05

# substream tags under the run seed
_STREAM_INIT = 0
_STREAM_PROPOSE = 1
_STREAM_FIT = 2


def default_init_count(d: int) -> int:
    return max(8, 2 * d)


@dataclass(frozen=True)
class SearchSpec:
    """Everything a run needs besides the problem itself."""

    bounds: np.ndarray        # (d, 2)
    thresholds: np.ndarray    # (m,)
    resolution: float
    budget: int
    init_count: int
    acquisition: str = "lms"
    normalize: bool = True
    seed: int = 0
    pool_size: int = DEFAULT_POOL_SIZE
    mc_samples: int = acq.DEFAULT_MC_SAMPLES

    def __post_init__(self):
        bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if bounds.ndim != 2 or bounds.shape[1] != 2 or np.any(bounds[:, 0] >= bounds[:, 1]):
            raise InputError("bounds must be (d, 2) rows with lo < hi")
        thresholds = np.atleast_1d(np.asarray(self.thresholds, dtype=float))
        if thresholds.ndim != 1 or not np.all(np.isfinite(thresholds)):
            raise InputError("thresholds must be a finite vector")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "thresholds", thresholds)
        if not (np.isfinite(self.resolution) and self.resolution > 0):
            raise InputError("resolution must be positive")
        if self.budget < 1:
            raise InputError("budget must be positive")
        if not 1 <= self.init_count <= self.budget:
            raise InputError("init_count must lie in [1, budget]")
        if self.acquisition not in ACQUISITIONS:
            raise InputError(f"acquisition must be one of {ACQUISITIONS}")
        if self.pool_size < 1 or self.mc_samples < 1:
            raise InputError("pool_size and mc_samples must be positive")

    @property
    def d(self) -> int:
        return self.bounds.shape[0]

    @property
    def m(self) -> int:
        return self.thresholds.size


@dataclass(frozen=True)
class ScalingTransform:
    """Affine map sending an observed objective bounding box to the unit box."""

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        offset = np.atleast_1d(np.asarray(self.offset, dtype=float))
        scale = np.atleast_1d(np.asarray(self.scale, dtype=float))
        if offset.shape != scale.shape or np.any(scale <= 0):
            raise InputError("offset and scale must match and scale must be positive")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "scale", scale)

    def apply(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.offset) / self.scale

    def invert(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.scale + self.offset


def fit_scaling(Y: np.ndarray) -> ScalingTransform:
    """Bounding-box transform of the observed objectives.

    Degenerate axes (constant so far) keep scale 1 so they pass through
    shifted but unstretched.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] == 0:
        raise InputError("cannot fit a scaling to zero observations")
    lo = Y.min(axis=0)
    scale = Y.max(axis=0) - lo
    scale = np.where(scale > 0, scale, 1.0)
    return ScalingTransform(offset=lo, scale=scale)


@dataclass
class HistoryRecord:
    iteration: int
    x: np.ndarray
    y: np.ndarray
    acquisition: str
    acquisition_value: float | None
    satisfactory: bool
    wall_time: float = 0.0
    scaling: ScalingTransform | None = None


@dataclass
class History:
    """Ordered record of every evaluation in a run."""

    records: list[HistoryRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: HistoryRecord) -> None:
        self.records.append(record)

    def xs(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, 0))
        return np.array([r.x for r in self.records])

    def ys(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, 0))
        return np.array([r.y for r in self.records])

    def satisfactory_xs(self) -> np.ndarray:
        pts = [r.x for r in self.records if r.satisfactory]
        return np.array(pts) if pts else np.zeros((0, self.xs().shape[1] if self.records else 0))


def _sobol_sample(d: int, n: int, seed: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non-power-of-two draw
        return qmc.Sobol(d=d, scramble=True, seed=seed).random(n)


def initialize(spec: SearchSpec, rng: np.random.Generator) -> np.ndarray:
    """Space-filling init: scrambled low-discrepancy points in the box."""
    u = _sobol_sample(spec.d, spec.init_count, int(rng.integers(0, 2**63)))
    lo = spec.bounds[:, 0]
    hi = spec.bounds[:, 1]
    return lo + u * (hi - lo)


def candidate_pool(spec: SearchSpec, history: History, rng: np.random.Generator) -> np.ndarray:
    """Quasi-random pool plus perturbations of recent satisfactory designs."""
    lo = spec.bounds[:, 0]
    hi = spec.bounds[:, 1]
    base = lo + _sobol_sample(spec.d, spec.pool_size, int(rng.integers(0, 2**63))) * (hi - lo)
    incumbents = [r.x for r in history.records if r.satisfactory][-INCUMBENT_LIMIT:]
    if not incumbents:
        return base
    width = PERTURBATION_SCALE * (hi - lo)
    local = []
    for x0 in incumbents:
        jitter = rng.standard_normal((PERTURBATIONS_PER_INCUMBENT, spec.d)) * width
        local.append(np.clip(x0 + jitter, lo, hi))
    return np.vstack([base] + local)


def _posterior_grid(models: list[gp.GPModel], pool: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cols = [gp.posterior_batch(model, pool) for model in models]
    means = np.stack([c[0] for c in cols], axis=1)
    variances = np.stack([c[1] for c in cols], axis=1)
    return means, variances


def _score_pool(
    spec: SearchSpec,
    models: list[gp.GPModel],
    history: History,
    pool: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, ScalingTransform | None]:
    if spec.acquisition == "random":
        return rng.random(pool.shape[0]), None

    means, variances = _posterior_grid(models, pool)
    Y = history.ys()
    thresholds = spec.thresholds
    transform = None
    if spec.normalize:
        transform = fit_scaling(Y)
        Y = transform.apply(Y)
        thresholds = transform.apply(thresholds)
        means = transform.apply(means)
        variances = variances / (transform.scale**2)

    if spec.acquisition == "lms":
        config = acq.LMSConfig(
            thresholds=thresholds, resolution=spec.resolution, n_samples=spec.mc_samples
        )
        z = rng.standard_normal((spec.mc_samples, spec.m))
        scores = acq.lms_scores(means, variances, acq.ExclusionSet(Y), config, z)
    elif spec.acquisition == "mc-hvi":
        z = rng.standard_normal((spec.mc_samples, spec.m))
        pareto = metrics.dominating_front(Y, thresholds)
        scores = acq.mc_hvi_scores(means, variances, pareto, thresholds, z)
    elif spec.acquisition == "eci-like":
        scores = acq.eci_scores(
            pool, history.satisfactory_xs(), means, variances, thresholds, r_x=spec.resolution
        )
    else:  # unreachable; SearchSpec validates the name
        raise InputError(f"unknown acquisition {spec.acquisition!r}")
    return scores, transform


def _propose(
    spec: SearchSpec,
    models: list[gp.GPModel],
    history: History,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float, ScalingTransform | None]:
    seeds = rng.integers(0, 2**63, size=2)
    pool = candidate_pool(spec, history, np.random.default_rng(seeds[0]))
    scores, transform = _score_pool(spec, models, history, pool, np.random.default_rng(seeds[1]))
    best = int(np.argmax(scores))  # ties resolve to the lowest index
    value = float(scores[best])
    if value <= 0.0:
        # nothing scores: fall back to the pool point farthest from the data
        gaps = cdist(pool, history.xs()).min(axis=1)
        best = int(np.argmax(gaps))
        value = 0.0
    return pool[best], value, transform


def propose(
    spec: SearchSpec,
    models: list[gp.GPModel],
    history: History,
    rng: np.random.Generator,
) -> np.ndarray:
    """Next design to evaluate; always inside the bounds."""
    if len(history) == 0:
        raise InputError("propose requires at least one observation")
    x, _, _ = _propose(spec, models, history, rng)
    return x


def fit_models(spec: SearchSpec, history: History, iteration: int) -> list[gp.GPModel]:
    """One GP per objective on everything observed so far."""
    X = history.xs()
    Y = history.ys()
    return [
        gp.fit(
            X,
            Y[:, j],
            gp.FitConfig(seed=[spec.seed, _STREAM_FIT, iteration, j]),
        )
        for j in range(spec.m)
    ]


def run(spec: SearchSpec, problem, on_record=None) -> History:
    """Run the full search loop against ``problem``.

    ``problem`` needs ``evaluate`` plus matching ``bounds``/``thresholds``
    dimensions (see ProblemDef). ``on_record`` is called with each
    HistoryRecord right after it is appended, so callers can stream
    results to disk; an evaluator failure still carries the partial
    history on the raised error.
    """
    if problem.bounds.shape != spec.bounds.shape or problem.thresholds.size != spec.m:
        raise InputError("problem and spec disagree on dimensions")

    history = History()

    def observe(x: np.ndarray, label: str, value: float | None, scaling, started: float):
        try:
            y = np.asarray(problem.evaluate(x), dtype=float).ravel()
        except EvaluatorError as err:
            raise EvaluatorError(str(err), history=history) from err
        if y.size != spec.m:
            raise EvaluatorError(
                f"evaluator returned {y.size} objectives, expected {spec.m}", history=history
            )
        record = HistoryRecord(
            iteration=len(history),
            x=np.asarray(x, dtype=float),
            y=y,
            acquisition=label,
            acquisition_value=value,
            satisfactory=bool(np.all(y >= spec.thresholds)),
            wall_time=time.perf_counter() - started,
            scaling=scaling,
        )
        history.append(record)
        if on_record is not None:
            on_record(record)

    started = time.perf_counter()
    for x in initialize(spec, np.random.default_rng([spec.seed, _STREAM_INIT])):
        observe(x, "init", None, None, started)
        started = time.perf_counter()

    while len(history) < spec.budget:
        started = time.perf_counter()
        t = len(history)
        # random scoring never reads the surrogates, so skip the fits
        models = [] if spec.acquisition == "random" else fit_models(spec, history, t)
        x, value, transform = _propose(
            spec, models, history, np.random.default_rng([spec.seed, _STREAM_PROPOSE, t])
        )
        observe(x, spec.acquisition, value, transform, started)

    return history
