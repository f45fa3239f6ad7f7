"""Run the four-method comparison grid on the two-bump problem.

Writes per-cell run directories plus summary.csv under --out, resuming
any cells that already finished. Equivalent to `caslms compare` with a
generated config; the defaults match the benchmark setting (budget 30,
r=0.1, seeds 0..9).
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from caslms import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/hc22-comparison")
    parser.add_argument("--budget", type=int, default=30)
    parser.add_argument("--seeds", type=int, default=10, help="seeds 0..N-1")
    parser.add_argument("--r", type=float, default=0.1)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    config = {
        "problem": {"name": "hc22"},
        "search": {"budget": args.budget, "init": 8, "r": args.r},
        "methods": ["lms", "mc-hvi", "eci-like", "random"],
        "seeds": list(range(args.seeds)),
        "output": {"directory": args.out},
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
        json.dump(config, handle)
        path = handle.name
    code = cli.main(["compare", "--config", path, "--jobs", str(args.jobs)])
    Path(path).unlink(missing_ok=True)
    if code == 0:
        print(f"summary at {Path(args.out) / 'summary.csv'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
