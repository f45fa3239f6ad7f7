"""Acquisition estimators against quadrature and brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caslms import acquisition as acq
from caslms import metrics
from caslms.errors import InputError
from caslms.gp import PosteriorGaussian


def oracle_lms_quadrature(mean, var, tau, r, exclusions, cells=1200):
    """Midpoint-rule integral of the acceptance region under the posterior.

    Two independent Gaussians; the integrand is an indicator, so a fine
    midpoint grid over +-8 sigma bounds the truncation and discretization
    error well inside 1e-3.
    """
    sd = np.sqrt(var)
    lo = mean - 8 * sd
    hi = mean + 8 * sd
    edges0 = np.linspace(lo[0], hi[0], cells + 1)
    edges1 = np.linspace(lo[1], hi[1], cells + 1)
    c0 = (edges0[:-1] + edges0[1:]) / 2
    c1 = (edges1[:-1] + edges1[1:]) / 2
    w0 = np.diff(edges0)[0] * np.exp(-0.5 * ((c0 - mean[0]) / sd[0]) ** 2) / (sd[0] * math.sqrt(2 * math.pi))
    w1 = np.diff(edges1)[0] * np.exp(-0.5 * ((c1 - mean[1]) / sd[1]) ** 2) / (sd[1] * math.sqrt(2 * math.pi))
    ok = np.ones((cells, cells), dtype=bool)
    ok &= (c0 >= tau[0])[:, None]
    ok &= (c1 >= tau[1])[None, :]
    for e in exclusions:
        d2 = (c0 - e[0])[:, None] ** 2 + (c1 - e[1])[None, :] ** 2
        ok &= d2 >= r * r
    return float((w0[:, None] * w1[None, :] * ok).sum())


def _post(mean, var):
    return PosteriorGaussian(mean=np.asarray(mean, float), variance=np.asarray(var, float))


def _config(tau, r, n=512):
    return acq.LMSConfig(thresholds=np.asarray(tau, float), resolution=r, n_samples=n)


def test_lms_in_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(20):
        post = _post(rng.normal(size=2), rng.random(2) + 0.01)
        excl = acq.ExclusionSet(rng.normal(size=(3, 2)))
        v = acq.lms(post, excl, _config([0.0, 0.0], 0.3), np.random.default_rng(1))
        assert 0.0 <= v <= 1.0


def test_lms_is_one_when_nothing_binds():
    post = _post([0.0, 0.0], [1.0, 1.0])
    v = acq.lms(
        post, acq.ExclusionSet.empty(2), _config([-np.inf, -np.inf], 0.1),
        np.random.default_rng(0),
    )
    assert v == 1.0


def test_lms_zero_variance_is_an_indicator():
    cfg = _config([0.5, 0.5], 0.2)
    rng = np.random.default_rng(0)
    passing = _post([0.9, 0.9], [0.0, 0.0])
    assert acq.lms(passing, acq.ExclusionSet.empty(2), cfg, rng) == 1.0
    failing = _post([0.9, 0.4], [0.0, 0.0])
    assert acq.lms(failing, acq.ExclusionSet.empty(2), cfg, rng) == 0.0
    crowded = acq.ExclusionSet(np.array([[0.9, 0.85]]))  # within r of the mean
    assert acq.lms(passing, crowded, cfg, rng) == 0.0
    boundary = acq.ExclusionSet(np.array([[0.9, 0.7]]))  # exactly r away
    assert acq.lms(passing, boundary, cfg, rng) == 1.0


def test_lms_batch_equals_per_candidate_with_same_seed():
    rng = np.random.default_rng(5)
    posteriors = [_post(rng.normal(size=2), rng.random(2) + 0.05) for _ in range(17)]
    excl = acq.ExclusionSet(rng.normal(size=(4, 2)))
    cfg = _config([0.2, -0.1], 0.25)
    batch = acq.lms_batch(posteriors, excl, cfg, np.random.default_rng(42))
    singles = np.array([
        acq.lms(p, excl, cfg, np.random.default_rng(42)) for p in posteriors
    ])
    assert np.array_equal(batch, singles)


def test_lms_monotone_in_r_and_exclusions_under_shared_draws():
    rng = np.random.default_rng(7)
    means = rng.normal(size=(10, 2))
    variances = rng.random((10, 2)) + 0.05
    z = np.random.default_rng(0).standard_normal((512, 2))
    excl_pts = rng.normal(size=(5, 2))
    prev = None
    for r in [0.05, 0.1, 0.2, 0.4, 0.8]:
        scores = acq.lms_scores(
            means, variances, acq.ExclusionSet(excl_pts), _config([0.0, 0.0], r), z
        )
        if prev is not None:
            assert np.all(scores <= prev)
        prev = scores
    # growing the exclusion set can only lose draws
    small = acq.lms_scores(
        means, variances, acq.ExclusionSet(excl_pts[:2]), _config([0.0, 0.0], 0.3), z
    )
    large = acq.lms_scores(
        means, variances, acq.ExclusionSet(excl_pts), _config([0.0, 0.0], 0.3), z
    )
    assert np.all(large <= small)


def test_lms_matches_quadrature():
    mean = np.array([0.6, 0.4])
    var = np.array([0.09, 0.04])
    tau = np.array([0.3, 0.2])
    r = 0.25
    exclusions = np.array([[0.6, 0.5], [0.9, 0.2]])
    quad = oracle_lms_quadrature(mean, var, tau, r, exclusions)
    v = acq.lms(
        _post(mean, var), acq.ExclusionSet(exclusions), _config(tau, r, n=100_000),
        np.random.default_rng(3),
    )
    assert v == pytest.approx(quad, abs=0.01)


def test_lms_dimension_mismatches_raise():
    with pytest.raises(InputError):
        acq.lms(
            _post([0.0], [1.0]), acq.ExclusionSet.empty(2), _config([0.0, 0.0], 0.1),
            np.random.default_rng(0),
        )
    with pytest.raises(InputError):
        acq.lms(
            _post([0.0, 0.0], [1.0, 1.0]), acq.ExclusionSet(np.zeros((1, 3))),
            _config([0.0, 0.0], 0.1), np.random.default_rng(0),
        )
    with pytest.raises(InputError):
        _config([0.0, 0.0], -1.0)


def oracle_hvi(y, front, ref):
    base = metrics.hypervolume(front, ref) if len(front) else 0.0
    grown = metrics.hypervolume(np.vstack([front, [y]]) if len(front) else np.array([y]), ref)
    return grown - base


@settings(max_examples=40)
@given(seed=st.integers(0, 10_000))
def test_hvi2_samples_match_hypervolume_difference(seed):
    rng = np.random.default_rng(seed)
    raw = rng.random((5, 2)) * 2.0
    ref = np.array([0.1, 0.1])
    front = metrics.dominating_front(raw, ref)
    draws = rng.random((30, 2)) * 2.5 - 0.2
    got = acq.hvi2_samples(draws, front, ref)
    expected = np.array([oracle_hvi(y, front, ref) for y in draws])
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_hvi_samples_general_m_matches_2d_strip_path():
    rng = np.random.default_rng(1)
    front = metrics.dominating_front(rng.random((6, 2)), np.zeros(2))
    draws = rng.random((20, 2)) * 1.5
    fast = acq.hvi2_samples(draws, front, np.zeros(2))
    slow = np.array([oracle_hvi(y, front, np.zeros(2)) for y in draws])
    np.testing.assert_allclose(fast, slow, atol=1e-12)


def test_mc_hvi_zero_when_candidate_fully_dominated():
    front = np.array([[2.0, 2.0]])
    post = _post([0.5, 0.5], [0.0, 0.0])
    v = acq.mc_hvi(post, front, np.zeros(2), rng=np.random.default_rng(0))
    assert v == 0.0


def test_mc_hvi_positive_beyond_front():
    front = np.array([[1.0, 1.0]])
    post = _post([1.5, 1.5], [0.01, 0.01])
    v = acq.mc_hvi(post, front, np.zeros(2), rng=np.random.default_rng(0))
    assert v > 0.5  # roughly 1.5*1.5 - 1 = 1.25


def test_mc_hvi_scores_match_single_path():
    rng = np.random.default_rng(4)
    means = rng.random((9, 2)) + 0.5
    variances = rng.random((9, 2)) * 0.1 + 0.01
    front = metrics.dominating_front(rng.random((5, 2)), np.zeros(2))
    z = np.random.default_rng(11).standard_normal((256, 2))
    batch = acq.mc_hvi_scores(means, variances, front, np.zeros(2), z)
    for i in range(9):
        draws = means[i] + np.sqrt(variances[i]) * z
        single = float(np.mean(acq.hvi2_samples(draws, front, np.zeros(2))))
        assert batch[i] == pytest.approx(single, abs=1e-12)


def test_eci_like_closed_form():
    mean = np.array([0.9, 0.7])
    var = np.array([0.04, 0.09])
    tau = np.array([0.85, 0.85])
    expected = 1.0
    for j in range(2):
        zj = (mean[j] - tau[j]) / math.sqrt(var[j])
        expected *= 0.5 * math.erfc(-zj / math.sqrt(2))
    got = acq.eci_like(np.array([0.5, 0.5]), np.zeros((0, 2)), _post(mean, var), tau, r_x=0.1)
    assert got == pytest.approx(expected, rel=1e-12)


def test_eci_like_novelty_gate():
    post = _post([2.0, 2.0], [0.01, 0.01])
    tau = np.array([0.0, 0.0])
    sat = np.array([[0.5, 0.5]])
    near = acq.eci_like(np.array([0.55, 0.5]), sat, post, tau, r_x=0.1)
    far = acq.eci_like(np.array([0.8, 0.5]), sat, post, tau, r_x=0.1)
    assert near == 0.0
    assert far > 0.99


def test_eci_like_zero_variance_indicator():
    tau = np.array([0.5, 0.5])
    hi = acq.eci_like(np.array([0.0, 0.0]), np.zeros((0, 2)), _post([0.6, 0.9], [0.0, 0.0]), tau, 0.1)
    lo = acq.eci_like(np.array([0.0, 0.0]), np.zeros((0, 2)), _post([0.6, 0.4], [0.0, 0.0]), tau, 0.1)
    assert hi == 1.0 and lo == 0.0


def test_eci_scores_match_single_path():
    rng = np.random.default_rng(8)
    pool = rng.random((25, 2))
    sat = rng.random((4, 2))
    means = rng.random((25, 2))
    variances = rng.random((25, 2)) * 0.05 + 1e-4
    tau = np.array([0.4, 0.6])
    batch = acq.eci_scores(pool, sat, means, variances, tau, r_x=0.15)
    singles = np.array([
        acq.eci_like(pool[i], sat, _post(means[i], variances[i]), tau, r_x=0.15)
        for i in range(25)
    ])
    np.testing.assert_allclose(batch, singles, atol=1e-14)


def test_exclusion_set_validation():
    assert len(acq.ExclusionSet.empty(3)) == 0
    with pytest.raises(InputError):
        acq.ExclusionSet(np.array([[np.nan, 0.0]]))
