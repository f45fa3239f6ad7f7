"""Run artifacts on disk: history.jsonl and meta.json.

A history file holds one JSON object per evaluation, in iteration order.
Floats are emitted in Python's shortest round-trip form, so reading a
history back reproduces the exact doubles and rerunning the same config
yields byte-identical files. Per-record wall time is deliberately not
serialized (it would break that byte identity); the run's total wall time
lives in meta.json, which also echoes the fully resolved config so a run
can be reproduced from meta.json alone.

Records stream to disk as they happen, so an aborted run leaves a valid
prefix behind. meta.json is written only after a run completes; its
presence is how the compare grid decides a cell is done.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .search import History, HistoryRecord, ScalingTransform

HISTORY_FILE = "history.jsonl"
META_FILE = "meta.json"


def record_to_dict(record: HistoryRecord) -> dict:
    scaling = None
    if record.scaling is not None:
        scaling = {
            "offset": [float(v) for v in record.scaling.offset],
            "scale": [float(v) for v in record.scaling.scale],
        }
    value = record.acquisition_value
    return {
        "iteration": int(record.iteration),
        "x": [float(v) for v in record.x],
        "y": [float(v) for v in record.y],
        "acquisition": record.acquisition,
        "acquisition_value": None if value is None else float(value),
        "satisfactory": bool(record.satisfactory),
        "scaling": scaling,
    }


def dict_to_record(data: dict) -> HistoryRecord:
    scaling = data.get("scaling")
    transform = None
    if scaling is not None:
        transform = ScalingTransform(
            offset=np.asarray(scaling["offset"], dtype=float),
            scale=np.asarray(scaling["scale"], dtype=float),
        )
    return HistoryRecord(
        iteration=int(data["iteration"]),
        x=np.asarray(data["x"], dtype=float),
        y=np.asarray(data["y"], dtype=float),
        acquisition=str(data["acquisition"]),
        acquisition_value=data.get("acquisition_value"),
        satisfactory=bool(data["satisfactory"]),
        scaling=transform,
    )


class HistoryWriter:
    """Append-as-you-go history file; usable as a run's on_record callback."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "w", encoding="utf-8")

    def __call__(self, record: HistoryRecord) -> None:
        self._handle.write(json.dumps(record_to_dict(record)) + "\n")
        self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "HistoryWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_history(history: History, path: Path) -> None:
    with HistoryWriter(path) as writer:
        for record in history.records:
            writer(record)


def read_history(path: Path) -> History:
    history = History()
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                history.append(dict_to_record(json.loads(line)))
    return history


def write_meta(path: Path, config: dict, version: str, wall_time_s: float, n_records: int) -> None:
    payload = {
        "config": config,
        "version": version,
        "wall_time_s": float(wall_time_s),
        "n_records": int(n_records),
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def read_meta(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            meta = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"missing meta file {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed meta file {path}: {err}")
    if "config" not in meta:
        raise ConfigError(f"meta file {path} lacks a config echo")
    return meta
