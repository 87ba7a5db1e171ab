"""Chunked simulation runs that accumulate statistics without keeping the trace."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from ..errors import InsufficientSamples
from .config import SimConfig
from .engine import SimTrace, iter_traces
from .measure import (
    MIN_SAMPLES,
    OccupancyTally,
    PassageTally,
    SampleStats,
    SojournTally,
    cumulative_active,
    windowed_throughput,
)

DEFAULT_CHUNK = 1e5

StateSet = Iterable[int]


@dataclass
class RunStatistics:
    """Statistics of one or more independent runs; samples are kept for merging."""

    duration: float = 0.0
    events: int = 0
    active_time: np.ndarray | None = None
    occupancy_time: dict[str, float] = field(default_factory=dict)
    sojourn: dict[str, np.ndarray] = field(default_factory=dict)
    passage: dict[str, np.ndarray] = field(default_factory=dict)
    windows: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def throughput(self) -> np.ndarray:
        return self.active_time / self.duration

    def occupancy(self, name: str) -> float:
        return self.occupancy_time[name] / self.duration

    def sojourn_stats(self, name: str, min_samples: int = MIN_SAMPLES) -> SampleStats:
        return _stats(self.sojourn[name], min_samples)

    def passage_stats(self, name: str, min_samples: int = MIN_SAMPLES) -> SampleStats:
        return _stats(self.passage[name], min_samples)

    def merge(self, other: RunStatistics) -> RunStatistics:
        """Pool two runs; samples are concatenated in argument order."""
        out = RunStatistics(
            duration=self.duration + other.duration,
            events=self.events + other.events,
            active_time=other.active_time if self.active_time is None else self.active_time + other.active_time,
        )
        for key in sorted(set(self.occupancy_time) | set(other.occupancy_time)):
            out.occupancy_time[key] = self.occupancy_time.get(key, 0.0) + other.occupancy_time.get(key, 0.0)
        for mine, theirs, dest in (
            (self.sojourn, other.sojourn, out.sojourn),
            (self.passage, other.passage, out.passage),
            (self.windows, other.windows, out.windows),
        ):
            for key in list(mine) + [k for k in theirs if k not in mine]:
                dest[key] = np.concatenate([mine.get(key, np.empty(0)), theirs.get(key, np.empty(0))])
        return out


def _stats(x: np.ndarray, min_samples: int) -> SampleStats:
    if len(x) < min_samples:
        raise InsufficientSamples(len(x), min_samples)
    return SampleStats.from_samples(x)


def _active_time(trace: SimTrace) -> np.ndarray:
    return np.array([cumulative_active(trace, i)[1][-1] for i in range(trace.n_links)])


def run_statistics(
    cfg: SimConfig,
    state_sets: Mapping[str, StateSet] | None = None,
    pairs: Mapping[str, tuple[StateSet, StateSet]] | None = None,
    window: float | None = None,
    chunk: float = DEFAULT_CHUNK,
    on_trace: Callable[[SimTrace], None] | None = None,
) -> RunStatistics:
    """Simulate ``cfg`` chunk by chunk and tally the requested statistics.

    ``state_sets`` get occupancy and sojourn tallies, ``pairs`` passage
    tallies. With a ``window``, chunks are a whole number of windows long so
    window boundaries line up with the single-trace computation.
    """
    state_sets = dict(state_sets or {})
    pairs = dict(pairs or {})
    if window is not None:
        chunk = window * max(1, round(chunk / window))
    occ = {k: OccupancyTally(v) for k, v in state_sets.items()}
    soj = {k: SojournTally(v) for k, v in state_sets.items()}
    pas = {k: PassageTally(a, b) for k, (a, b) in pairs.items()}
    n = cfg.graph.n_links
    stats = RunStatistics(active_time=np.zeros(n))
    win: dict[int, list[np.ndarray]] = {i: [] for i in range(n)} if window is not None else {}
    for trace in iter_traces(cfg, chunk):
        stats.duration += trace.duration
        stats.events += len(trace)
        stats.active_time += _active_time(trace)
        for tally in (*occ.values(), *soj.values(), *pas.values()):
            tally.update(trace)
        for i in win:
            win[i].append(windowed_throughput(trace, window, i)[1])
        if on_trace is not None:
            on_trace(trace)
    stats.occupancy_time = {k: t.inside_time for k, t in occ.items()}
    stats.sojourn = {k: t.samples for k, t in soj.items()}
    stats.passage = {k: t.samples for k, t in pas.items()}
    stats.windows = {i: np.concatenate(v) for i, v in win.items()}
    return stats


def run_seeds(
    configs: list[SimConfig],
    jobs: int = 1,
    **kwargs,
) -> RunStatistics:
    """Run independent configurations (typically differing in seed) and pool them in order."""
    if jobs > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: run_statistics(c, **kwargs), configs))
    else:
        results = [run_statistics(c, **kwargs) for c in configs]
    total = results[0]
    for r in results[1:]:
        total = total.merge(r)
    return total
