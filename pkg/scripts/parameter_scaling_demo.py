"""Compare LMS against uniform-random search when the satisfactory band
is narrow.

Scaling the (x2 - 0.5)^2 term by s_m shrinks the satisfactory band in x2
by sqrt(s_m), so space-filling search alone finds few satisfactory
designs and the surrogate-guided search has room to pull ahead.
"""

import argparse
import sys

import numpy as np

from caslms import metrics, problems, search


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--s-m", type=float, default=16.0)
    parser.add_argument("--budget", type=int, default=30)
    parser.add_argument("--seeds", type=int, default=10, help="seeds 0..N-1")
    args = parser.parse_args()

    prob = problems.make_hc22_parameter_scaled(args.s_m)
    print(f"s_m={args.s_m}, budget {args.budget}, {args.seeds} seeds")
    medians = {}
    for method in ("lms", "random"):
        counts = []
        for seed in range(args.seeds):
            spec = search.SearchSpec(
                bounds=prob.bounds, thresholds=prob.thresholds, resolution=0.1,
                budget=args.budget, init_count=8, acquisition=method, seed=seed,
            )
            history = search.run(spec, prob)
            counts.append(metrics.count_satisfactory(history.ys(), prob.thresholds))
        medians[method] = float(np.median(counts))
        print(f"{method:>7}: satisfactory per seed {counts}, median {medians[method]}")
    print(f"lms beats random: {medians['lms'] > medians['random']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
