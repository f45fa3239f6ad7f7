"""Coverage and quality metrics over objective-space point sets.

All metrics work on raw objective units by default; pass
``normalized=True`` to :func:`history_metrics` to re-express everything in
the unit-box coordinates induced by the observed bounding box first.
Neighbor counts exclude the point itself, so a two-point set with a gap
wider than r reports 0 average neighbors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from .errors import InputError

# Satisfactory-region clouds are built by pushing this many low-discrepancy
# parameter points through the problem and keeping the satisfactory images.
CLOUD_SAMPLES = 100_000


def _as_points(Y, name="points") -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.size == 0:
        return Y.reshape(0, Y.shape[1] if Y.ndim == 2 else 0)
    Y = np.atleast_2d(Y)
    if Y.ndim != 2:
        raise InputError(f"{name} must be a (n, m) array")
    return Y


def neighbors_within_r(y: np.ndarray, Y: np.ndarray, r: float) -> int:
    """Number of points of Y strictly closer than r to y, self excluded.

    "Self" is matched by value: if y coincides with a row of Y exactly, one
    such row is discounted, so duplicates still count each other.
    """
    if r <= 0:
        raise InputError("r must be positive")
    Y = _as_points(Y)
    if Y.shape[0] == 0:
        return 0
    y = np.asarray(y, dtype=float).ravel()
    d2 = np.sum((Y - y) ** 2, axis=1)
    count = int(np.sum(d2 < r * r))
    if np.any(d2 == 0.0):
        count -= 1
    return count


def avg_neighbors(Y: np.ndarray, r: float) -> float:
    """Mean neighbor count over the set; 0 for empty or singleton sets."""
    if r <= 0:
        raise InputError("r must be positive")
    Y = _as_points(Y)
    n = Y.shape[0]
    if n <= 1:
        return 0.0
    d2 = cdist(Y, Y, "sqeuclidean")
    close = d2 < r * r
    np.fill_diagonal(close, False)
    return float(close.sum()) / n


def fill_distance(Y_sat: np.ndarray, cloud: np.ndarray) -> float:
    """Largest distance from a cloud point to its nearest satisfactory point.

    Returns +inf when no satisfactory point exists (downstream reporting
    renders that as "undefined").
    """
    cloud = _as_points(cloud, "cloud")
    if cloud.shape[0] == 0:
        raise InputError("cloud must be nonempty")
    Y_sat = _as_points(Y_sat, "Y_sat")
    if Y_sat.shape[0] == 0:
        return float("inf")
    best = np.full(cloud.shape[0], np.inf)
    # chunked so a 1e5-point cloud never materializes a huge matrix
    step = max(1, 2_000_000 // max(Y_sat.shape[0], 1))
    for start in range(0, cloud.shape[0], step):
        d = cdist(cloud[start : start + step], Y_sat)
        best[start : start + step] = d.min(axis=1)
    return float(best.max())


def count_satisfactory(Y: np.ndarray, thresholds: np.ndarray) -> int:
    """Number of points meeting every threshold (inclusive)."""
    Y = _as_points(Y)
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    if Y.shape[0] == 0:
        return 0
    if Y.shape[1] != thresholds.size:
        raise InputError("threshold length does not match objective count")
    return int(np.sum(np.all(Y >= thresholds, axis=1)))


def satisfactory_mask(Y: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    Y = _as_points(Y)
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    if Y.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return np.all(Y >= thresholds, axis=1)


def pareto_front(Y: np.ndarray) -> np.ndarray:
    """Rows of Y not dominated by any other row (maximization)."""
    Y = _as_points(Y)
    n = Y.shape[0]
    if n == 0:
        return Y
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        ge = np.all(Y >= Y[i], axis=1)
        gt = np.any(Y > Y[i], axis=1)
        if np.any(ge & gt):
            keep[i] = False
        else:
            # drop exact duplicates behind the first occurrence
            dup = np.all(Y == Y[i], axis=1)
            dup[i] = False
            keep &= ~dup
    return Y[keep]


def _hv2(points: np.ndarray, ref: np.ndarray) -> float:
    order = np.argsort(points[:, 1])  # f2 ascending means f1 descending
    hv = 0.0
    prev_f2 = ref[1]
    for f1, f2 in points[order]:
        hv += (f1 - ref[0]) * (f2 - prev_f2)
        prev_f2 = f2
    return hv


def _hv3(points: np.ndarray, ref: np.ndarray) -> float:
    # inclusion-exclusion over the union of boxes [ref, y]; exponential in
    # the front size, so guard against degenerate use
    k = points.shape[0]
    if k > 20:
        raise InputError("exact 3-objective hypervolume limited to fronts of <= 20 points; use hypervolume_mc")
    sides = points - ref
    hv = 0.0
    for mask in range(1, 1 << k):
        idx = [i for i in range(k) if mask >> i & 1]
        vol = float(np.prod(np.min(sides[idx], axis=0)))
        hv += vol if len(idx) % 2 == 1 else -vol
    return hv


def dominating_front(Y: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Nondominated subset of the rows of Y that meet ``ref`` everywhere."""
    Y = _as_points(Y)
    if Y.shape[0] == 0:
        return Y
    return pareto_front(Y[np.all(Y >= ref, axis=1)])


def hypervolume(Y: np.ndarray, reference: np.ndarray) -> float:
    """Exact hypervolume dominated by Y above ``reference``.

    Points that do not meet the reference in every coordinate contribute
    nothing. Exact paths exist for 2 and 3 objectives; use
    :func:`hypervolume_mc` otherwise.
    """
    reference = np.asarray(reference, dtype=float).ravel()
    m = reference.size
    if m not in (2, 3):
        raise InputError("exact hypervolume supports 2 or 3 objectives")
    front = dominating_front(Y, reference)
    if front.shape[0] == 0:
        return 0.0
    if front.shape[1] != m:
        raise InputError("reference length does not match objective count")
    return float(_hv2(front, reference) if m == 2 else _hv3(front, reference))


def hypervolume_mc(
    Y: np.ndarray, reference: np.ndarray, n_samples: int = 100_000, seed: int = 0
) -> float:
    """Monte Carlo hypervolume for any objective count; cross-checks the exact path."""
    if n_samples < 1:
        raise InputError("n_samples must be positive")
    reference = np.asarray(reference, dtype=float).ravel()
    front = dominating_front(Y, reference)
    if front.shape[0] == 0:
        return 0.0
    upper = front.max(axis=0)
    box = float(np.prod(upper - reference))
    if box == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    step = max(1, 20_000_000 // max(front.shape[0], 1))
    for start in range(0, n_samples, step):
        take = min(step, n_samples - start)
        pts = reference + rng.random((take, reference.size)) * (upper - reference)
        covered = np.zeros(take, dtype=bool)
        for y in front:
            covered |= np.all(pts <= y, axis=1)
        hits += int(covered.sum())
    return box * hits / n_samples


@dataclass(frozen=True)
class SatisfactoryRegionCloud:
    """Dense sample of the reachable satisfactory objective region."""

    points: np.ndarray  # (c, m), every row meets the thresholds it was built with

    def __post_init__(self):
        pts = _as_points(self.points, "cloud")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def build_satisfactory_cloud(
    problem, n_samples: int = CLOUD_SAMPLES, seed: int = 0
) -> SatisfactoryRegionCloud:
    """Rejection-sample the satisfactory region of ``problem``.

    Pushes a scrambled low-discrepancy parameter sample through the
    problem and keeps the objective images that meet every threshold.
    """
    if n_samples < 1:
        raise InputError("n_samples must be positive")
    bounds = problem.bounds
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non-power-of-two draw
        u = qmc.Sobol(d=bounds.shape[0], scramble=True, seed=seed).random(n_samples)
    X = bounds[:, 0] + u * (bounds[:, 1] - bounds[:, 0])
    if problem.evaluate_batch is not None:
        Y = np.asarray(problem.evaluate_batch(X), dtype=float)
    else:
        Y = np.array([problem.evaluate(x) for x in X], dtype=float)
    keep = np.all(Y >= problem.thresholds, axis=1)
    return SatisfactoryRegionCloud(points=Y[keep])


def history_metrics(
    Y: np.ndarray,
    thresholds: np.ndarray,
    r: float,
    cloud: SatisfactoryRegionCloud | None = None,
    normalized: bool = False,
) -> dict:
    """Summary metrics for one run's observed objectives.

    Returns fill (inf when undefined or no cloud is available),
    n_satisfactory, avg_neighbors over the satisfactory subset, and the
    hypervolume above the thresholds.
    """
    Y = _as_points(Y)
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    cloud_pts = cloud.points if cloud is not None else None
    if normalized and Y.shape[0] > 0:
        lo = Y.min(axis=0)
        scale = Y.max(axis=0) - lo
        scale = np.where(scale > 0, scale, 1.0)
        Y = (Y - lo) / scale
        thresholds = (thresholds - lo) / scale
        if cloud_pts is not None:
            cloud_pts = (cloud_pts - lo) / scale
    sat = Y[satisfactory_mask(Y, thresholds)] if Y.shape[0] else Y
    fill = float("inf")
    if cloud_pts is not None and cloud_pts.shape[0] > 0:
        fill = fill_distance(sat, cloud_pts)
    return {
        "fill": fill,
        "n_satisfactory": int(sat.shape[0]),
        "avg_neighbors": avg_neighbors(sat, r),
        "hypervolume": hypervolume(Y, thresholds) if thresholds.size in (2, 3) else float("nan"),
    }
