"""Acceptance gate: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdict lines.
Each criterion is asserted at its stated tolerance; the heavy end-to-end
comparisons (criteria 5-7) run real searches and take a few minutes on
one core.
"""

import sys
import textwrap
import time

import numpy as np

from caslms import acquisition as acq
from caslms import external, gp, metrics, problems, runio, search

from test_acquisition import oracle_lms_quadrature
from test_external import HC22_STUB
from test_gp import oracle_posterior

TABLE_SEEDS = range(10)
TABLE_BUDGET = 30
TABLE_R = 0.1


def _verdict(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    assert ok, line


def test_criterion_1_gp_posterior_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for family in gp.KERNEL_FAMILIES:
        X = rng.random((20, 3))
        y = np.sin(4 * X[:, 0]) + X[:, 1] ** 2 - 0.5 * X[:, 2]
        Xq = rng.random((25, 3))
        ls = np.array([0.4, 0.6, 0.9])
        spec = gp.KernelSpec(family, ls, 1.3, 1e-4)
        model = gp.fit(X, y, gp.FitConfig(family=family, optimize=False, initial=spec))
        means, variances = gp.posterior_batch(model, Xq)
        o_means, o_vars = oracle_posterior(family, X, y, Xq, ls, 1.3, 1e-4)
        worst = max(
            worst,
            float(np.max(np.abs(means - o_means))),
            float(np.max(np.abs(variances - o_vars))),
        )
    elapsed = time.perf_counter() - started
    _verdict(
        "gp-posterior-oracle",
        worst <= 1e-8 and elapsed < 1.0,
        f"max |err| {worst:.2e} (tol 1e-8), {elapsed:.2f}s (limit 1s)",
    )


def test_criterion_2_lms_quadrature():
    started = time.perf_counter()
    fixtures = [
        # (mean, var, tau, r, exclusions)
        ([0.5, 0.5], [0.04, 0.09], [0.4, 0.3], 0.2, np.zeros((0, 2))),
        ([0.6, 0.4], [0.09, 0.04], [0.3, 0.2], 0.25, np.array([[0.6, 0.5]])),
        ([0.7, 0.7], [0.02, 0.05], [0.55, 0.5], 0.15,
         np.array([[0.7, 0.65], [0.85, 0.8]])),
    ]
    worst = 0.0
    details = []
    for i, (mean, var, tau, r, excl) in enumerate(fixtures):
        mean, var, tau = map(np.asarray, (mean, var, tau))
        quad = oracle_lms_quadrature(mean, var, tau, r, excl)
        mc = acq.lms(
            gp.PosteriorGaussian(mean=mean, variance=var),
            acq.ExclusionSet(excl),
            acq.LMSConfig(thresholds=tau, resolution=r, n_samples=100_000),
            np.random.default_rng(1000 + i),
        )
        worst = max(worst, abs(mc - quad))
        details.append(f"fx{i}: |{mc:.4f}-{quad:.4f}|={abs(mc - quad):.4f}")
    elapsed = time.perf_counter() - started
    _verdict(
        "lms-quadrature",
        worst <= 0.01 and elapsed < 10.0,
        f"{'; '.join(details)} (tol 0.01), {elapsed:.1f}s (limit 10s)",
    )


def test_criterion_3_lms_monotonicity():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(100):
        means = rng.normal(size=(8, 2))
        variances = rng.random((8, 2)) * 0.5 + 0.01
        tau = rng.normal(size=2) * 0.5
        excl = rng.normal(size=(rng.integers(1, 6), 2))
        z = np.random.default_rng(rng.integers(0, 2**31)).standard_normal((512, 2))
        prev = None
        for r in (0.05, 0.15, 0.3, 0.6):
            cfg = acq.LMSConfig(thresholds=tau, resolution=r, n_samples=512)
            scores = acq.lms_scores(means, variances, acq.ExclusionSet(excl), cfg, z)
            if prev is not None and np.any(scores > prev):
                violations += 1
            prev = scores
        cfg = acq.LMSConfig(thresholds=tau, resolution=0.3, n_samples=512)
        small = acq.lms_scores(means, variances, acq.ExclusionSet(excl[:1]), cfg, z)
        large = acq.lms_scores(means, variances, acq.ExclusionSet(excl), cfg, z)
        if np.any(large > small):
            violations += 1
    _verdict(
        "lms-monotonicity",
        violations == 0,
        f"{violations} violations across 100 fixtures (required 0)",
    )


def test_criterion_4_hypervolume_crosscheck():
    frozen = metrics.hypervolume(np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros(2))
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(20):
        m = 2 if i < 12 else 3
        Y = rng.random((rng.integers(3, 10), m)) + 0.2
        ref = np.full(m, 0.1)
        exact = metrics.hypervolume(Y, ref)
        mc = metrics.hypervolume_mc(Y, ref, n_samples=400_000, seed=100 + i)
        worst = max(worst, abs(mc - exact) / exact)
    _verdict(
        "hypervolume-crosscheck",
        frozen == 3.0 and worst <= 0.01,
        f"frozen case {frozen} (need 3.0), worst MC rel err {worst:.4f} (tol 0.01)",
    )


def _run_method(problem, method, seed, budget=TABLE_BUDGET, normalize=True):
    spec = search.SearchSpec(
        bounds=problem.bounds,
        thresholds=problem.thresholds,
        resolution=TABLE_R,
        budget=budget,
        init_count=8,
        acquisition=method,
        normalize=normalize,
        seed=seed,
    )
    return search.run(spec, problem)


def test_criterion_5_table1_direction():
    started = time.perf_counter()
    prob = problems.make_hc22()
    cloud = metrics.build_satisfactory_cloud(prob)
    fills = {}
    hvs = {}
    for method in search.ACQUISITIONS:
        per_seed = [
            metrics.history_metrics(
                _run_method(prob, method, seed).ys(), prob.thresholds, TABLE_R, cloud=cloud
            )
            for seed in TABLE_SEEDS
        ]
        fills[method] = float(np.median([m["fill"] for m in per_seed]))
        hvs[method] = float(np.median([m["hypervolume"] for m in per_seed]))
    elapsed = time.perf_counter() - started
    lms_fill_lowest = all(fills["lms"] < fills[m] for m in search.ACQUISITIONS if m != "lms")
    hvi_hv_highest = all(hvs["mc-hvi"] > hvs[m] for m in search.ACQUISITIONS if m != "mc-hvi")
    fill_txt = ", ".join(f"{m}={fills[m]:.4f}" for m in search.ACQUISITIONS)
    hv_txt = ", ".join(f"{m}={hvs[m]:.4f}" for m in search.ACQUISITIONS)
    _verdict(
        "table1-direction",
        lms_fill_lowest and hvi_hv_highest and elapsed < 600.0,
        f"median fill [{fill_txt}] lms lowest={lms_fill_lowest}; "
        f"median hv [{hv_txt}] mc-hvi highest={hvi_hv_highest}; "
        f"{elapsed:.0f}s (limit 600s)",
    )


def test_criterion_6_objective_scaling_invariance():
    histories = {}
    for s_m in (1.0, 5.0, 10.0):
        prob = problems.make_hc22_objective_scaled(s_m)
        histories[s_m] = _run_method(prob, "lms", seed=0, normalize=True).xs()
    invariant = np.array_equal(histories[1.0], histories[5.0]) and np.array_equal(
        histories[1.0], histories[10.0]
    )
    raw = {}
    for s_m in (1.0, 10.0):
        prob = problems.make_hc22_objective_scaled(s_m)
        raw[s_m] = _run_method(prob, "lms", seed=0, normalize=False).xs()
    sensitive = not np.array_equal(raw[1.0], raw[10.0])
    _verdict(
        "objective-scaling-invariance",
        invariant and sensitive,
        f"normalized designs identical across s_m 1/5/10: {invariant}; "
        f"unnormalized s_m=10 diverges from s_m=1: {sensitive}",
    )


def test_criterion_7_parameter_scaling_satisfactory_counts():
    prob = problems.make_hc22_parameter_scaled(16.0)
    counts = {}
    for method in ("lms", "random"):
        counts[method] = [
            metrics.count_satisfactory(
                _run_method(prob, method, seed).ys(), prob.thresholds
            )
            for seed in TABLE_SEEDS
        ]
    lms_median = float(np.median(counts["lms"]))
    random_median = float(np.median(counts["random"]))
    _verdict(
        "parameter-scaling",
        lms_median > random_median,
        f"s_m=16 median satisfactory: lms {lms_median} vs random {random_median}",
    )


def test_criterion_8_external_equivalence(tmp_path):
    stub = tmp_path / "stub.py"
    stub.write_text(textwrap.dedent(HC22_STUB), encoding="utf-8")
    in_proc = problems.make_hc22()
    spec = search.SearchSpec(
        bounds=in_proc.bounds, thresholds=in_proc.thresholds, resolution=TABLE_R,
        budget=12, init_count=8, seed=5,
    )
    direct = search.run(spec, in_proc)
    ext_prob, evaluator = external.external_problem(
        [sys.executable, str(stub)], in_proc.bounds, in_proc.thresholds, TABLE_R
    )
    try:
        via_child = search.run(spec, ext_prob)
    finally:
        evaluator.close()
    a = tmp_path / "direct.jsonl"
    b = tmp_path / "child.jsonl"
    runio.write_history(direct, a)
    runio.write_history(via_child, b)
    identical = a.read_bytes() == b.read_bytes()
    _verdict(
        "external-equivalence",
        identical,
        f"history bytes identical across process boundary: {identical}",
    )
