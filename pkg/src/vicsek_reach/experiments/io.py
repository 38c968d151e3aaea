"""CSV persistence for metric series, state dumps and reachability reports."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..dynamics import SwarmState
from ..metrics import MetricSeries
from ..verify import ReachabilityReport

METRIC_HEADER = ("t", "phi", "d_theta", "weak_connected")
STATE_HEADER = ("t", "agent", "x1", "x2", "theta")


class ExportError(OSError):
    pass


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _open(path, mode):
    path = Path(path)
    try:
        if "w" in mode:
            path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, encoding="utf-8", newline="")
    except OSError as e:
        raise ExportError(f"{path}: {e.strerror or e}") from e


def write_metrics(series: MetricSeries, path) -> Path:
    with _open(path, "w") as fh:
        fh.write(",".join(METRIC_HEADER) + "\n")
        for t, p, d, w in zip(series.t, series.phi, series.d_theta, series.weak_connected):
            fh.write(f"{int(t)},{_g(p)},{_g(d)},{int(bool(w))}\n")
    return Path(path)


def write_states(states: Iterable[SwarmState], path) -> Path:
    with _open(path, "w") as fh:
        fh.write(",".join(STATE_HEADER) + "\n")
        for s in states:
            for i, ((x, y), th) in enumerate(zip(s.positions, s.headings)):
                fh.write(f"{int(s.t)},{i},{_g(x)},{_g(y)},{_g(th)}\n")
    return Path(path)


def export_csv(record, path, states_path: Optional[str] = None) -> Path:
    """Write the metrics of a :class:`TraceRecord` (or a bare series), and optionally its states."""
    series = record if isinstance(record, MetricSeries) else record.series
    out = write_metrics(series, path)
    if states_path is not None:
        write_states(getattr(record, "states", []), states_path)
    return out


def read_csv(path) -> MetricSeries:
    with _open(path, "r") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != METRIC_HEADER:
        raise ValueError(f"{path}: expected header {','.join(METRIC_HEADER)}")
    body = rows[1:]
    if not body:
        return MetricSeries.empty()
    t = np.array([int(r[0]) for r in body], dtype=np.int64)
    phi = np.array([float(r[1]) for r in body])
    d = np.array([float(r[2]) for r in body])
    w = np.array([r[3] == "1" for r in body], dtype=bool)
    return MetricSeries(t, phi, d, w)


def export_report(report: ReachabilityReport, path) -> Path:
    """CSV of per-trial results plus a ``.txt`` summary next to it."""
    path = Path(path)
    with _open(path, "w") as fh:
        fh.write("trial,first_hit,member_at_horizon\n")
        for k, h, m in report.rows():
            fh.write(f"{k},{h},{m}\n")
    with _open(path.with_suffix(".txt"), "w") as fh:
        fh.write(report.summary() + "\n")
    return path
