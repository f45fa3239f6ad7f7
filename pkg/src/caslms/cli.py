"""Command line harness.

Subcommands: ``run`` a config, ``metrics`` over saved histories, ``plot``
a history as SVG + CSV, and ``compare`` a methods-by-seeds grid. Exit
codes: 0 success, 2 config error, 3 evaluator error, 4 numerical error.

A run config is JSON:

    {
      "problem": {"name": "hc22", "s_m": 1.0},
      "search": {"acquisition": "lms", "budget": 30, "init": 8, "r": 0.1,
                 "normalize": true, "seed": 0, "pool_size": 2048,
                 "mc_samples": 512},
      "output": {"directory": "runs/hc22-lms-0"}
    }

``problem`` may instead carry an ``external`` object describing a child
evaluator: {"cmd": [...], "bounds": [[lo, hi], ...], "thresholds": [...],
"r": 0.1, "timeout_s": 300}. Unknown keys anywhere are rejected. A
meta.json written by a previous run is also accepted as a config (its
embedded echo is used), which makes any run reproducible from its meta
alone.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, metrics, runio, search
from .errors import ConfigError, EvaluatorError, InputError, NumericalError
from .external import external_problem
from .problems import PROBLEM_NAMES, ProblemDef, get_problem

METRIC_COLUMNS = ("method", "seed", "fill", "n_satisfactory", "avg_neighbors", "hypervolume")

_SEARCH_KEYS = {
    "acquisition", "budget", "init", "r", "normalize", "seed", "pool_size", "mc_samples",
}


def _fail(where: str, message: str) -> ConfigError:
    return ConfigError(f"{where}: {message}")


def _require_dict(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise _fail(where, f"expected an object, got {type(obj).__name__}")
    return obj


def _check_keys(d: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise _fail(where, f"unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")
    missing = required - set(d)
    if missing:
        raise _fail(where, f"missing required keys {sorted(missing)}")


def _as_int(v, where: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise _fail(where, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise _fail(where, f"must be >= {minimum}, got {v}")
    return v


def _as_number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _fail(where, f"expected a number, got {v!r}")
    return float(v)


def _as_bool(v, where: str) -> bool:
    if not isinstance(v, bool):
        raise _fail(where, f"expected true/false, got {v!r}")
    return v


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            config = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}")
    config = _require_dict(config, path)
    # accept a meta.json and unwrap its config echo
    if "config" in config and isinstance(config.get("config"), dict):
        config = config["config"]
    return config


def _build_problem(problem_cfg: dict) -> tuple[ProblemDef, object | None, dict]:
    """Returns (problem, evaluator-or-None, resolved problem echo)."""
    problem_cfg = _require_dict(problem_cfg, "problem")
    if "external" in problem_cfg:
        _check_keys(problem_cfg, {"external"}, {"external"}, "problem")
        ext = _require_dict(problem_cfg["external"], "problem.external")
        _check_keys(
            ext, {"cmd", "bounds", "thresholds", "r", "timeout_s"},
            {"cmd", "bounds", "thresholds"}, "problem.external",
        )
        cmd = ext["cmd"]
        if not (isinstance(cmd, list) and cmd and all(isinstance(c, str) for c in cmd)):
            raise _fail("problem.external.cmd", "expected a nonempty list of strings")
        bounds = ext["bounds"]
        thresholds = ext["thresholds"]
        resolution = _as_number(ext.get("r", 0.1), "problem.external.r")
        timeout_s = ext.get("timeout_s")
        if timeout_s is not None:
            timeout_s = _as_number(timeout_s, "problem.external.timeout_s")
        try:
            problem, evaluator = external_problem(
                cmd, bounds, thresholds, resolution, timeout_s=timeout_s
            )
        except InputError as err:
            raise _fail("problem.external", str(err))
        echo = {"external": {
            "cmd": list(cmd),
            "bounds": [[float(lo), float(hi)] for lo, hi in problem.bounds],
            "thresholds": [float(t) for t in problem.thresholds],
            "r": resolution,
            **({"timeout_s": timeout_s} if timeout_s is not None else {}),
        }}
        return problem, evaluator, echo

    _check_keys(problem_cfg, {"name", "s_m"}, {"name"}, "problem")
    name = problem_cfg["name"]
    if name not in PROBLEM_NAMES:
        raise _fail("problem.name", f"unknown problem {name!r}; known: {', '.join(PROBLEM_NAMES)}")
    s_m = _as_number(problem_cfg.get("s_m", 1.0), "problem.s_m")
    if s_m <= 0:
        raise _fail("problem.s_m", f"must be positive, got {s_m}")
    return get_problem(name, s_m), None, {"name": name, "s_m": s_m}


def _build_spec(
    search_cfg: dict,
    problem: ProblemDef,
    seed_override: int | None,
    r_override: float | None,
) -> tuple[search.SearchSpec, dict]:
    search_cfg = _require_dict(search_cfg, "search")
    _check_keys(search_cfg, _SEARCH_KEYS, {"budget"}, "search")
    budget = _as_int(search_cfg["budget"], "search.budget", minimum=1)
    init = _as_int(
        search_cfg.get("init", search.default_init_count(problem.d)), "search.init", minimum=1
    )
    acquisition = search_cfg.get("acquisition", "lms")
    if acquisition not in search.ACQUISITIONS:
        raise _fail("search.acquisition", f"must be one of {search.ACQUISITIONS}")
    r = _as_number(search_cfg.get("r", problem.resolution), "search.r")
    if r_override is not None:
        r = float(r_override)
    normalize = _as_bool(search_cfg.get("normalize", True), "search.normalize")
    seed = _as_int(search_cfg.get("seed", 0), "search.seed")
    if seed_override is not None:
        seed = int(seed_override)
    pool_size = _as_int(search_cfg.get("pool_size", search.DEFAULT_POOL_SIZE),
                        "search.pool_size", minimum=1)
    mc_samples = _as_int(search_cfg.get("mc_samples", 512), "search.mc_samples", minimum=1)
    try:
        spec = search.SearchSpec(
            bounds=problem.bounds,
            thresholds=problem.thresholds,
            resolution=r,
            budget=budget,
            init_count=init,
            acquisition=acquisition,
            normalize=normalize,
            seed=seed,
            pool_size=pool_size,
            mc_samples=mc_samples,
        )
    except InputError as err:
        raise _fail("search", str(err))
    echo = {
        "acquisition": acquisition, "budget": budget, "init": init, "r": r,
        "normalize": normalize, "seed": seed, "pool_size": pool_size,
        "mc_samples": mc_samples,
    }
    return spec, echo


def _resolve_out(config: dict, out_override: str | None, where: str = "output") -> Path:
    out_cfg = config.get("output")
    directory = None
    if out_cfg is not None:
        out_cfg = _require_dict(out_cfg, where)
        _check_keys(out_cfg, {"directory"}, {"directory"}, where)
        directory = out_cfg["directory"]
        if not isinstance(directory, str):
            raise _fail(f"{where}.directory", "expected a string path")
    if out_override is not None:
        directory = out_override
    if directory is None:
        raise _fail(where, "no output directory (set output.directory or pass --out)")
    return Path(directory)


def execute_run(config: dict, seed_override=None, r_override=None, out_override=None) -> Path:
    """Validate a run config, run it, and write history.jsonl + meta.json."""
    _check_keys(_require_dict(config, "config"), {"problem", "search", "output"},
                {"problem", "search"}, "config")
    out_dir = _resolve_out(config, out_override)
    problem, evaluator, problem_echo = _build_problem(config["problem"])
    try:
        spec, search_echo = _build_spec(config["search"], problem, seed_override, r_override)
        resolved = {
            "problem": problem_echo,
            "search": search_echo,
            "output": {"directory": str(out_dir)},
        }
        started = time.perf_counter()
        with runio.HistoryWriter(out_dir / runio.HISTORY_FILE) as writer:
            history = search.run(spec, problem, on_record=writer)
        runio.write_meta(
            out_dir / runio.META_FILE,
            resolved,
            __version__,
            time.perf_counter() - started,
            len(history),
        )
    finally:
        if evaluator is not None:
            evaluator.close()
    return out_dir


def cmd_run(args) -> int:
    config = _load_config(args.config)
    out_dir = execute_run(config, args.seed, args.r, args.out)
    print(f"run complete: {out_dir / runio.HISTORY_FILE}")
    return 0


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if not np.isfinite(v):
        return "undefined"
    return repr(v)


def _median(values: list[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


_CLOUD_CACHE: dict[tuple, metrics.SatisfactoryRegionCloud] = {}


def _cloud_for(problem_echo: dict) -> metrics.SatisfactoryRegionCloud | None:
    if "external" in problem_echo:
        return None
    key = (problem_echo["name"], float(problem_echo.get("s_m", 1.0)))
    if key not in _CLOUD_CACHE:
        _CLOUD_CACHE[key] = metrics.build_satisfactory_cloud(get_problem(*key))
    return _CLOUD_CACHE[key]


def _metric_rows(history_paths: list[Path], r_override: float | None) -> list[dict]:
    rows = []
    for path in history_paths:
        path = Path(path)
        meta = runio.read_meta(path.parent / runio.META_FILE)
        config = meta["config"]
        history = runio.read_history(path)
        problem_echo = config["problem"]
        if "external" in problem_echo:
            thresholds = np.asarray(problem_echo["external"]["thresholds"], dtype=float)
        else:
            thresholds = get_problem(
                problem_echo["name"], problem_echo.get("s_m", 1.0)
            ).thresholds
        r = float(r_override) if r_override is not None else float(config["search"]["r"])
        summary = metrics.history_metrics(
            history.ys(), thresholds, r, cloud=_cloud_for(problem_echo)
        )
        rows.append({
            "method": config["search"]["acquisition"],
            "seed": config["search"]["seed"],
            **summary,
        })
    rows.sort(key=lambda row: (row["method"], row["seed"]))
    by_method: dict[str, list[dict]] = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(row)
    for method in sorted(by_method):
        group = by_method[method]
        if len(group) > 1:
            rows.append({
                "method": method,
                "seed": "median",
                "fill": _median([g["fill"] for g in group]),
                "n_satisfactory": _median([g["n_satisfactory"] for g in group]),
                "avg_neighbors": _median([g["avg_neighbors"] for g in group]),
                "hypervolume": _median([g["hypervolume"] for g in group]),
            })
    return rows


def _render_metrics_csv(rows: list[dict]) -> str:
    lines = [",".join(METRIC_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in METRIC_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_metrics(args) -> int:
    rows = _metric_rows([Path(p) for p in args.histories], args.r)
    text = _render_metrics_csv(rows)
    if args.out:
        out = Path(args.out)
        if out.suffix != ".csv":
            out = out / "metrics.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return 0


def _shading_rows(problem: ProblemDef, cells: int = 160):
    if problem.evaluate_batch is None or problem.d != 2:
        return None
    lo = problem.bounds[:, 0]
    hi = problem.bounds[:, 1]
    xs = np.linspace(lo[0], hi[0], cells)
    ys = np.linspace(lo[1], hi[1], cells)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    ok = np.all(problem.evaluate_batch(grid) >= problem.thresholds, axis=1).reshape(cells, cells)
    half_h = (ys[1] - ys[0]) / 2
    half_w = (xs[1] - xs[0]) / 2
    rows = []
    for i in range(cells):
        j = 0
        while j < cells:
            if ok[i, j]:
                j0 = j
                while j < cells and ok[i, j]:
                    j += 1
                rows.append((xs[j0] - half_w, xs[j - 1] + half_w, ys[i] - half_h, ys[i] + half_h))
            else:
                j += 1
    return rows


def cmd_plot(args) -> int:
    from . import svgplot

    history_path = Path(args.history)
    meta = runio.read_meta(history_path.parent / runio.META_FILE)
    config = meta["config"]
    history = runio.read_history(history_path)
    problem_echo = config["problem"]
    out_dir = Path(args.out) if args.out else history_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)

    X = history.xs()
    Y = history.ys()
    if "external" in problem_echo:
        problem = None
        thresholds = np.asarray(problem_echo["external"]["thresholds"], dtype=float)
    else:
        problem = get_problem(problem_echo["name"], problem_echo.get("s_m", 1.0))
        thresholds = problem.thresholds
    satisfactory = np.array([rec.satisfactory for rec in history.records], dtype=bool)

    if args.space == "parameter":
        points = X[:, :2] if len(history) else np.zeros((0, 2))
        svg = svgplot.scatter_plot(
            points, satisfactory, "x1", "x2", f"{config['search']['acquisition']} designs",
            shading_rows=_shading_rows(problem) if problem is not None else None,
        )
    else:
        points = Y[:, :2] if len(history) else np.zeros((0, 2))
        cloud = _cloud_for(problem_echo)
        shade = None
        if cloud is not None and cloud.size:
            shade = cloud.points[:: max(1, cloud.size // 1500), :2]
        svg = svgplot.scatter_plot(
            points, satisfactory, "f1", "f2", f"{config['search']['acquisition']} objectives",
            thresholds=(float(thresholds[0]), float(thresholds[1])),
            shading=shade,
        )
    svg_path = out_dir / f"plot-{args.space}.svg"
    svg_path.write_text(svg, encoding="utf-8")

    d = X.shape[1] if len(history) else 0
    m = Y.shape[1] if len(history) else 0
    header = (["iteration"] + [f"x{i + 1}" for i in range(d)]
              + [f"f{j + 1}" for j in range(m)] + ["satisfactory"])
    lines = [",".join(header)]
    for rec in history.records:
        cells = [str(rec.iteration)]
        cells += [repr(float(v)) for v in rec.x]
        cells += [repr(float(v)) for v in rec.y]
        cells.append(str(bool(rec.satisfactory)).lower())
        lines.append(",".join(cells))
    (out_dir / "plot-points.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {svg_path}")
    return 0


def _compare_cell(cell_json: str) -> str:
    config = json.loads(cell_json)
    execute_run(config)
    return config["output"]["directory"]


def cmd_compare(args) -> int:
    config = _load_config(args.config)
    _check_keys(_require_dict(config, "config"),
                {"problem", "search", "methods", "seeds", "output"},
                {"problem", "search", "methods", "seeds"}, "config")
    methods = config["methods"]
    if not (isinstance(methods, list) and methods
            and all(m in search.ACQUISITIONS for m in methods)):
        raise _fail("methods", f"expected a nonempty list drawn from {search.ACQUISITIONS}")
    seeds = config["seeds"]
    if not (isinstance(seeds, list) and seeds
            and all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)):
        raise _fail("seeds", "expected a nonempty list of integers")
    search_cfg = _require_dict(config["search"], "search")
    for forbidden in ("acquisition", "seed"):
        if forbidden in search_cfg:
            raise _fail("search", f"{forbidden!r} is set by the methods/seeds grid; remove it")
    out_dir = _resolve_out(config, args.out)

    cells = []
    for method in methods:
        for seed in seeds:
            cell_dir = out_dir / method / f"seed-{seed}"
            if (cell_dir / runio.META_FILE).exists():
                continue  # already complete; compare is resumable
            cells.append(json.dumps({
                "problem": config["problem"],
                "search": {**search_cfg, "acquisition": method, "seed": seed},
                "output": {"directory": str(cell_dir)},
            }))

    if cells:
        if args.jobs and args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for done in pool.map(_compare_cell, cells):
                    print(f"cell complete: {done}")
        else:
            for cell in cells:
                print(f"cell complete: {_compare_cell(cell)}")

    histories = sorted(out_dir.glob(f"*/seed-*/{runio.HISTORY_FILE}"))
    rows = _metric_rows(histories, args.r)
    text = _render_metrics_csv(rows)
    (out_dir / "summary.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caslms",
        description="Constraint active search over expensive multi-objective problems.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one search from a JSON config")
    p_run.add_argument("--config", required=True, help="run config (or a prior meta.json)")
    p_run.add_argument("--seed", type=int, default=None, help="override search.seed")
    p_run.add_argument("--r", type=float, default=None, help="override search.r")
    p_run.add_argument("--out", default=None, help="override output.directory")
    p_run.set_defaults(handler=cmd_run)

    p_metrics = sub.add_parser("metrics", help="summary CSV over saved histories")
    p_metrics.add_argument("histories", nargs="+", help="history.jsonl paths")
    p_metrics.add_argument("--r", type=float, default=None, help="neighbor radius override")
    p_metrics.add_argument("--out", default=None, help="CSV destination (default stdout)")
    p_metrics.set_defaults(handler=cmd_metrics)

    p_plot = sub.add_parser("plot", help="SVG + CSV dump of one history")
    p_plot.add_argument("history", help="history.jsonl path")
    p_plot.add_argument("--space", choices=("parameter", "objective"), default="objective")
    p_plot.add_argument("--out", default=None, help="output directory (default: alongside input)")
    p_plot.set_defaults(handler=cmd_plot)

    p_compare = sub.add_parser("compare", help="run a methods-by-seeds grid and summarize")
    p_compare.add_argument("--config", required=True, help="grid config")
    p_compare.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_compare.add_argument("--r", type=float, default=None, help="neighbor radius override")
    p_compare.add_argument("--out", default=None, help="override output.directory")
    p_compare.set_defaults(handler=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, InputError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except EvaluatorError as err:
        print(f"evaluator error: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
