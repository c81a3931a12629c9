"""CSV/JSON persistence for paths, replicate records and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import ExperimentConfig, ExperimentResult, ReplicateRecord

RECORD_FIELDS = ("n", "replicate", "seed", "theta_hat", "censored", "normalized_error")
ASCLT_FIELDS = ("z", "phi", "mean_average", "mean_abs_deviation")


def fmt(x):
    """17 significant digits; empty for missing values."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _parse_opt(text):
    return None if text == "" else float(text)


def _write_text(path, text):
    # newline="" keeps "\n" line endings on every platform
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def write_path_csv(path, sample):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "value"))
    for t, v in zip(sample.times, sample.values):
        w.writerow((int(t), fmt(v)))
    _write_text(path, buf.getvalue())


def read_path_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([int(r["t"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    return t, v


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow((
            r.n, r.replicate, r.seed, fmt(r.theta_hat), int(r.censored), fmt(r.normalized_error),
        ))
    return buf.getvalue()


def write_records_csv(path, records):
    _write_text(path, records_to_csv(records))


def read_records_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [
            ReplicateRecord(
                int(row["n"]),
                int(row["replicate"]),
                int(row["seed"]),
                _parse_opt(row["theta_hat"]),
                row["censored"] == "1",
                _parse_opt(row["normalized_error"]),
            )
            for row in reader
        ]


def write_asclt_csv(path, table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ASCLT_FIELDS)
    for row in table:
        w.writerow(tuple(fmt(row[k]) for k in ASCLT_FIELDS))
    _write_text(path, buf.getvalue())


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def write_json(path, obj):
    _write_text(path, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def result_from_files(aggregate_path, records_path):
    """Rebuild an ``ExperimentResult`` from its aggregate JSON and record CSV."""
    data = read_json(aggregate_path)
    config = ExperimentConfig.from_dict(data["config"])
    return ExperimentResult(config, read_records_csv(records_path), data["aggregates"], data["theory"])


@dataclass
class RunManifest:
    command: str
    config: dict
    outputs: list = field(default_factory=list)
    censoring: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    )

    def to_dict(self):
        return {
            "tool": "lmar",
            "version": self.version,
            "command": self.command,
            "timestamp": self.timestamp,
            "runtime_seconds": self.runtime_seconds,
            "config": self.config,
            "outputs": [str(p) for p in self.outputs],
            "censoring": self.censoring,
        }

    def write(self, path):
        write_json(path, self.to_dict())
        return Path(path)
