"""Gaussian process regression, one independent model per scalar objective.

Targets are standardized to zero mean and unit variance before fitting and
predictions are mapped back to raw units afterwards, so an affine change of
the target scale is absorbed exactly. Hyperparameters (per-dimension
lengthscales, an output scale, and a noise variance) are chosen by
maximizing the log marginal likelihood with a seeded multi-start compass
search in log space. A compass search only ever compares likelihood values
at points of a fixed lattice anchored at the start points, which keeps the
fitted hyperparameters bitwise reproducible and insensitive to
last-ulp perturbations of the targets; that stability is what lets a
search on rescaled objectives retrace the unscaled one exactly.

The posterior at a query point x is the standard form

    mean(x) = k(x, X) (K + s2 I)^-1 y_c + mu
    var(x)  = k(x, x) - k(x, X) (K + s2 I)^-1 k(X, x)

with y_c the centered targets and mu the constant mean (zero in
standardized units). The Cholesky factor of K + s2 I is computed once at
fit time and reused for every prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .errors import InputError, NumericalError

KERNEL_FAMILIES = ("squared-exponential", "matern-5/2")

_SQRT5 = math.sqrt(5.0)
_LOG_2PI = math.log(2.0 * math.pi)

# Noise is expressed in standardized target units. The floor keeps the
# Gram matrix factorizable on easy data; on a factorization failure the
# added diagonal is escalated tenfold per retry up to the cap.
NOISE_FLOOR = 1e-6
NOISE_CAP = 1e-2


@dataclass(frozen=True)
class KernelSpec:
    """Stationary kernel with per-dimension lengthscales.

    ``output_scale`` and ``noise_variance`` are variances, not standard
    deviations, so ``kernel_eval(spec, x, x) == output_scale``.
    """

    family: str
    lengthscales: np.ndarray
    output_scale: float
    noise_variance: float

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}")
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0 or not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise InputError("lengthscales must be a vector of positive finite floats")
        object.__setattr__(self, "lengthscales", ls)
        if not (np.isfinite(self.output_scale) and self.output_scale > 0):
            raise InputError("output_scale must be positive")
        if not (np.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise InputError("noise_variance must be nonnegative")


@dataclass(frozen=True)
class PosteriorGaussian:
    """Independent Gaussian marginals over the objectives at one design."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        var = np.atleast_1d(np.asarray(self.variance, dtype=float))
        if mean.shape != var.shape or mean.ndim != 1:
            raise InputError("mean and variance must be vectors of equal length")
        if np.any(var < 0):
            raise InputError("variance must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)


@dataclass(frozen=True)
class FitConfig:
    """Controls for :func:`fit`.

    ``seed`` may be an int or a sequence of ints (a stream path). With
    ``optimize=False`` the model uses ``initial`` verbatim apart from the
    noise floor. ``restarts`` counts the random restarts added on top of
    one deterministic default start.
    """

    family: str = "matern-5/2"
    optimize: bool = True
    restarts: int = 4
    seed: object = 0
    initial: KernelSpec | None = None
    noise_floor: float = NOISE_FLOOR

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}")
        if self.restarts < 0:
            raise InputError("restarts must be nonnegative")
        if not (0 < self.noise_floor <= NOISE_CAP):
            raise InputError("noise_floor must lie in (0, cap]")


@dataclass(frozen=True)
class GPModel:
    """Fitted model with a cached Cholesky factorization. Treat as immutable."""

    x: np.ndarray              # (n, d) training inputs
    kernel: KernelSpec
    y_mean: float              # raw-unit standardization offset
    y_scale: float             # raw-unit standardization scale
    z: np.ndarray              # (n,) standardized targets
    chol: np.ndarray = field(repr=False)   # lower factor of K + noise I
    alpha: np.ndarray = field(repr=False)  # (K + noise I)^-1 z

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def _scaled_sqdist(x1: np.ndarray, x2: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    return cdist(x1 / lengthscales, x2 / lengthscales, "sqeuclidean")


def _kernel_from_sqdist(family: str, r2: np.ndarray, output_scale: float) -> np.ndarray:
    if family == "squared-exponential":
        return output_scale * np.exp(-0.5 * r2)
    r = np.sqrt(np.maximum(r2, 0.0))
    return output_scale * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)


def kernel_matrix(spec: KernelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix k(x1, x2), shape (len(x1), len(x2))."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    if x1.shape[1] != spec.lengthscales.size or x2.shape[1] != spec.lengthscales.size:
        raise InputError("point dimension does not match lengthscale count")
    return _kernel_from_sqdist(spec.family, _scaled_sqdist(x1, x2, spec.lengthscales), spec.output_scale)


def kernel_eval(spec: KernelSpec, x: np.ndarray, x2: np.ndarray) -> float:
    """Kernel value for a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.ndim != 1:
        raise InputError("points must be vectors of equal dimension")
    if x.size != spec.lengthscales.size:
        raise InputError("point dimension does not match lengthscale count")
    diff = (x - x2) / spec.lengthscales
    r2 = float(np.dot(diff, diff))
    return float(_kernel_from_sqdist(spec.family, np.array(r2), spec.output_scale))


def _standardize(y: np.ndarray) -> tuple[float, float, np.ndarray]:
    mean = float(np.mean(y))
    scale = float(np.std(y))
    if y.size < 2 or scale == 0.0:
        scale = 1.0
    return mean, scale, (y - mean) / scale


def _chol_with_escalation(K: np.ndarray, noise: float, floor: float) -> tuple[np.ndarray, float]:
    """Cholesky of K + added*I, escalating the added diagonal tenfold on failure."""
    added = max(noise, floor)
    n = K.shape[0]
    while True:
        try:
            L = cholesky(K + added * np.eye(n), lower=True)
            return L, added
        except LinAlgError:
            added *= 10.0
            if added > NOISE_CAP:
                raise NumericalError(
                    f"Gram matrix not factorizable with added noise up to {NOISE_CAP}"
                ) from None


def _lml(z: np.ndarray, L: np.ndarray, alpha: np.ndarray) -> float:
    return float(
        -0.5 * np.dot(z, alpha) - np.sum(np.log(np.diag(L))) - 0.5 * z.size * _LOG_2PI
    )


class _LMLObjective:
    """Log marginal likelihood over log([lengthscales, output_scale, noise])."""

    def __init__(self, x: np.ndarray, z: np.ndarray, family: str):
        self.z = z
        self.family = family
        self.n = x.shape[0]
        diff = x[:, None, :] - x[None, :, :]
        self.d2 = diff * diff  # (n, n, d) per-dimension squared differences

    def __call__(self, theta: np.ndarray) -> float:
        d = self.d2.shape[2]
        inv_ls2 = np.exp(-2.0 * theta[:d])
        r2 = np.einsum("ijk,k->ij", self.d2, inv_ls2)
        K = _kernel_from_sqdist(self.family, r2, math.exp(theta[d]))
        K[np.diag_indices(self.n)] += math.exp(theta[d + 1])
        try:
            L = cholesky(K, lower=True)
        except LinAlgError:
            return -np.inf
        alpha = solve_triangular(L.T, solve_triangular(L, self.z, lower=True), lower=False)
        return _lml(self.z, L, alpha)


def _compass_search(f, theta0, lo, hi, step0=0.8, min_step=8e-3, max_evals=400):
    """Maximize f by coordinate pattern search with step halving.

    Iterates stay on a dyadic lattice anchored at theta0 (bound clipping
    aside), so the returned point depends only on the outcome of strict
    comparisons between f values at lattice points.
    """
    theta = np.clip(theta0, lo, hi)
    best = f(theta)
    evals = 1
    step = step0
    p = theta.size
    while step >= min_step and evals < max_evals:
        cand_best = None
        cand_val = best
        for j in range(p):
            for sign in (1.0, -1.0):
                cand = theta.copy()
                cand[j] = min(max(cand[j] + sign * step, lo[j]), hi[j])
                val = f(cand)
                evals += 1
                if val > cand_val:
                    cand_val = val
                    cand_best = cand
        if cand_best is None:
            step *= 0.5
        else:
            theta, best = cand_best, cand_val
    return theta, best


def _optimize_hypers(x, z, family, restarts, seed, noise_floor):
    n, d = x.shape
    span = x.max(axis=0) - x.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    lo = np.concatenate([np.log(0.05 * span), [math.log(0.05)], [math.log(noise_floor)]])
    hi = np.concatenate([np.log(20.0 * span), [math.log(50.0)], [math.log(0.25)]])
    default = np.concatenate(
        [np.log(0.5 * span), [0.0], [math.log(max(1e-4, noise_floor))]]
    )
    objective = _LMLObjective(x, z, family)
    rng = np.random.default_rng(seed)
    starts = [default] + [rng.uniform(lo, hi) for _ in range(restarts)]
    best_theta, best_val = None, -np.inf
    for theta0 in starts:
        theta, val = _compass_search(objective, theta0, lo, hi)
        if val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None or not np.isfinite(best_val):
        raise NumericalError("log marginal likelihood not finite at any candidate")
    return KernelSpec(
        family=family,
        lengthscales=np.exp(best_theta[:d]),
        output_scale=math.exp(best_theta[d]),
        noise_variance=max(math.exp(best_theta[d + 1]), noise_floor),
    )


def fit(train_x: np.ndarray, train_y: np.ndarray, config: FitConfig = FitConfig()) -> GPModel:
    """Fit one GP to scalar targets. Deterministic given (data, config).

    With a single observation or constant targets the standardization
    scale falls back to 1 and hyperparameter optimization is skipped.
    """
    x = np.atleast_2d(np.asarray(train_x, dtype=float))
    y = np.asarray(train_y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.size or y.size == 0:
        raise InputError("train_x must be (n, d) with n matching train_y")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputError("training data must be finite")

    y_mean, y_scale, z = _standardize(y)
    degenerate = x.shape[0] < 2 or float(np.std(y)) == 0.0
    if config.initial is not None and not config.optimize:
        spec = config.initial
        if spec.lengthscales.size != x.shape[1]:
            raise InputError("initial lengthscales do not match input dimension")
    elif config.optimize and not degenerate:
        spec = _optimize_hypers(
            x, z, config.family, config.restarts, config.seed, config.noise_floor
        )
    else:
        span = np.where(x.max(axis=0) > x.min(axis=0), x.max(axis=0) - x.min(axis=0), 1.0)
        spec = KernelSpec(config.family, 0.5 * span, 1.0, 1e-4)

    K = kernel_matrix(spec, x, x)
    L, added = _chol_with_escalation(K, spec.noise_variance, config.noise_floor)
    if added != spec.noise_variance:
        spec = KernelSpec(spec.family, spec.lengthscales, spec.output_scale, added)
    alpha = solve_triangular(L.T, solve_triangular(L, z, lower=True), lower=False)
    return GPModel(x=x, kernel=spec, y_mean=y_mean, y_scale=y_scale, z=z, chol=L, alpha=alpha)


def log_marginal_likelihood(model: GPModel) -> float:
    """Log marginal likelihood of the fitted model, standardized units."""
    return _lml(model.z, model.chol, model.alpha)


def posterior_batch(model: GPModel, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances (raw units) at many query points."""
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != model.d:
        raise InputError("query dimension does not match training inputs")
    cross = kernel_matrix(model.kernel, model.x, q)  # (n, q)
    mean_std = cross.T @ model.alpha
    v = solve_triangular(model.chol, cross, lower=True)
    var_std = np.maximum(model.kernel.output_scale - np.sum(v * v, axis=0), 0.0)
    return model.y_mean + model.y_scale * mean_std, (model.y_scale**2) * var_std


def posterior(model: GPModel, x: np.ndarray) -> tuple[float, float]:
    """Posterior (mean, variance) in raw units at one query point."""
    means, variances = posterior_batch(model, np.atleast_2d(np.asarray(x, dtype=float)))
    return float(means[0]), float(variances[0])


def posterior_multi(models: list[GPModel], x: np.ndarray) -> PosteriorGaussian:
    """Stack the per-objective posteriors at one design into a joint diagonal."""
    if not models:
        raise InputError("posterior_multi needs at least one model")
    stats = [posterior(m, x) for m in models]
    return PosteriorGaussian(
        mean=np.array([s[0] for s in stats]), variance=np.array([s[1] for s in stats])
    )
