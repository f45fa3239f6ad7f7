"""Acquisition scores for picking the next design to evaluate.

The primary score is the likelihood of metric satisfaction: the posterior
probability that the next observation both meets every threshold and
lands at least a resolution r away from every previously observed
objective vector,

    lms = Pr(y >= tau elementwise  and  min_j d(y, y_j) >= r)

estimated by Monte Carlo as the acceptance fraction of posterior draws.
A configuration at exactly distance r from an exclusion is acceptable;
"neighbor" means strictly closer than r.

Scoring a candidate pool reuses one shared block of standard-normal draws
for every candidate (common random numbers). That makes sweeps cheap to
compare: with shared draws the estimator is exactly monotone in r and in
the exclusion set, and a batch sweep equals scoring candidates one at a
time with identically seeded streams.

Baselines: ``mc_hvi`` is the expected hypervolume gain over the observed
front, estimated from the same kind of posterior draws; ``eci_like``
scores the product of per-objective satisfaction probabilities gated on
parameter-space novelty; ``random_score`` is a uniform draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import ndtr

from . import metrics
from .errors import InputError
from .gp import PosteriorGaussian

DEFAULT_MC_SAMPLES = 512

# cap on elements of a (candidates, draws) work array before chunking
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class LMSConfig:
    """Thresholds, diversity radius, and draw count for the LMS estimator."""

    thresholds: np.ndarray
    resolution: float
    n_samples: int = DEFAULT_MC_SAMPLES
    distance: str = "euclidean"

    def __post_init__(self):
        thresholds = np.atleast_1d(np.asarray(self.thresholds, dtype=float))
        if thresholds.ndim != 1 or thresholds.size == 0:
            raise InputError("thresholds must be a vector")
        object.__setattr__(self, "thresholds", thresholds)
        if not (np.isfinite(self.resolution) and self.resolution > 0):
            raise InputError("resolution must be positive")
        if self.n_samples < 1:
            raise InputError("n_samples must be at least 1")
        if self.distance != "euclidean":
            raise InputError("only euclidean distance is supported")


@dataclass(frozen=True)
class ExclusionSet:
    """Objective vectors that posterior draws must keep a distance r from."""

    points: np.ndarray  # (k, m); k may be zero

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
        pts = np.atleast_2d(pts)
        if pts.ndim != 2 or not np.all(np.isfinite(pts)):
            raise InputError("exclusions must be a finite (k, m) array")
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, m: int) -> "ExclusionSet":
        return cls(points=np.zeros((0, m)))

    def __len__(self) -> int:
        return self.points.shape[0]


def _accept_fraction(draws: np.ndarray, config: LMSConfig, exclusions: ExclusionSet) -> np.ndarray:
    """Fraction of accepted draws along the second-to-last axis.

    ``draws`` has shape (..., n_samples, m); returns shape (...,).
    """
    ok = np.all(draws >= config.thresholds, axis=-1)
    if len(exclusions):
        r2 = config.resolution * config.resolution
        min_d2 = np.full(draws.shape[:-1], np.inf)
        for point in exclusions.points:
            d2 = np.zeros(draws.shape[:-1])
            for j in range(draws.shape[-1]):
                diff = draws[..., j] - point[j]
                d2 += diff * diff
            np.minimum(min_d2, d2, out=min_d2)
        ok &= min_d2 >= r2
    return ok.mean(axis=-1)


def _draws_for(means: np.ndarray, variances: np.ndarray, z: np.ndarray) -> np.ndarray:
    # means/variances (..., m) against shared draws z (n, m)
    return means[..., None, :] + np.sqrt(variances)[..., None, :] * z


def lms(
    posterior: PosteriorGaussian,
    exclusions: ExclusionSet,
    config: LMSConfig,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo likelihood of metric satisfaction for one posterior.

    Always in [0, 1]. A zero-variance posterior degenerates to the
    indicator at the posterior mean (every draw equals the mean).
    """
    m = posterior.mean.size
    if config.thresholds.size != m:
        raise InputError("threshold length does not match posterior dimension")
    if len(exclusions) and exclusions.points.shape[1] != m:
        raise InputError("exclusion dimension does not match posterior dimension")
    z = rng.standard_normal((config.n_samples, m))
    draws = _draws_for(posterior.mean, posterior.variance, z)
    return float(_accept_fraction(draws, config, exclusions))


def lms_scores(
    means: np.ndarray,
    variances: np.ndarray,
    exclusions: ExclusionSet,
    config: LMSConfig,
    z: np.ndarray,
) -> np.ndarray:
    """LMS for a stack of posteriors (p, m) under shared draws z (n, m)."""
    p = means.shape[0]
    out = np.empty(p)
    step = max(1, _CHUNK_ELEMENTS // max(z.shape[0], 1))
    for start in range(0, p, step):
        stop = min(start + step, p)
        draws = _draws_for(means[start:stop], variances[start:stop], z)
        out[start:stop] = _accept_fraction(draws, config, exclusions)
    return out


def lms_batch(
    posteriors: list[PosteriorGaussian],
    exclusions: ExclusionSet,
    config: LMSConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """LMS over many candidates with common random numbers.

    Elementwise equal to calling :func:`lms` per candidate with identically
    seeded generators, since both paths apply the same draw block.
    """
    if not posteriors:
        return np.zeros(0)
    means = np.stack([p.mean for p in posteriors])
    variances = np.stack([p.variance for p in posteriors])
    z = rng.standard_normal((config.n_samples, means.shape[1]))
    return lms_scores(means, variances, exclusions, config, z)


def _hvi2_strips(pareto: np.ndarray, reference: np.ndarray):
    """Strip decomposition of the uncovered region for 2-objective HVI."""
    if pareto.shape[0] == 0:
        left = np.array([reference[0]])
        right = np.array([np.inf])
        cover = np.array([reference[1]])
        return left, right, cover
    order = np.argsort(pareto[:, 0])
    u = pareto[order, 0]
    v = pareto[order, 1]
    left = np.concatenate([[reference[0]], u])
    right = np.concatenate([u, [np.inf]])
    cover = np.concatenate([v, [reference[1]]])
    return left, right, cover


def hvi2_samples(draws: np.ndarray, pareto: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Exact hypervolume improvement of each 2-objective draw over a front.

    ``draws`` has shape (..., 2); the front must be nondominated and meet
    the reference. Draws below the reference improve by zero.
    """
    left, right, cover = _hvi2_strips(pareto, reference)
    a = draws[..., 0]
    b = draws[..., 1]
    imp = np.zeros(draws.shape[:-1])
    for j in range(left.size):
        width = np.clip(np.minimum(a, right[j]) - left[j], 0.0, None)
        height = np.clip(b - cover[j], 0.0, None)
        imp += width * height
    return imp


def mc_hvi(
    posterior: PosteriorGaussian,
    pareto_set: np.ndarray,
    reference: np.ndarray,
    n_samples: int = DEFAULT_MC_SAMPLES,
    rng: np.random.Generator | None = None,
) -> float:
    """Monte Carlo expected hypervolume improvement above ``reference``.

    ``pareto_set`` is the nondominated subset of the observations that meet
    the reference; an empty set reduces the improvement to the box volume
    between the reference and the draw.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if n_samples < 1:
        raise InputError("n_samples must be at least 1")
    reference = np.asarray(reference, dtype=float).ravel()
    m = posterior.mean.size
    if reference.size != m:
        raise InputError("reference length does not match posterior dimension")
    pareto = metrics.dominating_front(pareto_set, reference)
    z = rng.standard_normal((n_samples, m))
    draws = _draws_for(posterior.mean, posterior.variance, z)
    return float(np.mean(hvi_samples(draws, pareto, reference)))


def hvi_samples(draws: np.ndarray, pareto: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Hypervolume improvement of each draw; exact strip path for 2 objectives."""
    m = reference.size
    if m == 2:
        return hvi2_samples(draws, pareto, reference)
    flat = draws.reshape(-1, m)
    base = metrics.hypervolume(pareto, reference) if pareto.shape[0] else 0.0
    out = np.zeros(flat.shape[0])
    for i, y in enumerate(flat):
        if np.all(y >= reference):
            out[i] = metrics.hypervolume(np.vstack([pareto, y[None, :]]), reference) - base
    return np.maximum(out.reshape(draws.shape[:-1]), 0.0)


def mc_hvi_scores(
    means: np.ndarray,
    variances: np.ndarray,
    pareto: np.ndarray,
    reference: np.ndarray,
    z: np.ndarray,
) -> np.ndarray:
    """Batched expected hypervolume improvement under shared draws."""
    p = means.shape[0]
    out = np.empty(p)
    step = max(1, _CHUNK_ELEMENTS // max(z.shape[0], 1))
    for start in range(0, p, step):
        stop = min(start + step, p)
        draws = _draws_for(means[start:stop], variances[start:stop], z)
        out[start:stop] = hvi_samples(draws, pareto, reference).mean(axis=-1)
    return out


def eci_like(
    candidate_x: np.ndarray,
    satisfactory_x: np.ndarray,
    posterior: PosteriorGaussian,
    thresholds: np.ndarray,
    r_x: float,
) -> float:
    """Satisfaction probability gated on parameter-space novelty.

    The probability factor is the product of independent per-objective
    tail probabilities Phi((mu - tau) / sigma); a zero-variance objective
    contributes an indicator. Candidates within ``r_x`` of an already
    satisfactory design score zero.
    """
    if not (np.isfinite(r_x) and r_x > 0):
        raise InputError("r_x must be positive")
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    if thresholds.size != posterior.mean.size:
        raise InputError("threshold length does not match posterior dimension")
    satisfactory_x = np.asarray(satisfactory_x, dtype=float)
    if satisfactory_x.size:
        satisfactory_x = np.atleast_2d(satisfactory_x)
        x = np.asarray(candidate_x, dtype=float).ravel()
        d2 = np.sum((satisfactory_x - x) ** 2, axis=1)
        if float(d2.min()) < r_x * r_x:
            return 0.0
    return float(_satisfaction_probability(posterior.mean, posterior.variance, thresholds))


def _satisfaction_probability(means, variances, thresholds) -> np.ndarray:
    sigma = np.sqrt(variances)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, (means - thresholds) / np.where(sigma > 0, sigma, 1.0), 0.0)
    factors = np.where(sigma > 0, ndtr(z), (means >= thresholds).astype(float))
    return np.prod(factors, axis=-1)


def eci_scores(
    pool: np.ndarray,
    satisfactory_x: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    thresholds: np.ndarray,
    r_x: float,
) -> np.ndarray:
    """Vectorized :func:`eci_like` over a candidate pool."""
    probs = _satisfaction_probability(means, variances, thresholds)
    satisfactory_x = np.asarray(satisfactory_x, dtype=float)
    if satisfactory_x.size:
        d = cdist(pool, np.atleast_2d(satisfactory_x))
        probs = np.where(d.min(axis=1) >= r_x, probs, 0.0)
    return probs


def random_score(rng: np.random.Generator) -> float:
    """Uniform draw; maximizing it over a pool is uniform sampling."""
    return float(rng.random())
