"""CSV export of traces and windowed throughputs."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from .engine import SimTrace
from .measure import windowed_throughput


def write_trace_csv(trace: SimTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "link", "event"])
        for t, i, kind in trace.events():
            w.writerow([repr(t), i, kind])


def window_rows(trace: SimTrace, window: float, links: Iterable[int]) -> list[tuple[float, int, float]]:
    rows = []
    for i in links:
        starts, values = windowed_throughput(trace, window, i)
        rows.extend(zip(starts.tolist(), [i] * len(starts), values.tolist()))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_windows_csv(trace: SimTrace, window: float, path: str | Path, links: Iterable[int] | None = None) -> None:
    links = range(trace.n_links) if links is None else links
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_start", "link", "throughput"])
        for start, i, value in window_rows(trace, window, links):
            w.writerow([repr(start), i, repr(value)])


def read_trace_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of ``write_trace_csv``: arrays of times, links, start flags."""
    times, links, starts = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["time"]))
            links.append(int(row["link"]))
            starts.append(row["event"] == "start")
    return np.array(times), np.array(links, dtype=np.int16), np.array(starts, dtype=bool)
