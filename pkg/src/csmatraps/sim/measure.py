"""Empirical statistics extracted from simulation traces."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import InsufficientSamples, InvalidParameter
from ..graph import ContentionGraph
from ..traps import Trap
from .engine import SimTrace

MIN_SAMPLES = 30


@dataclass(frozen=True)
class SampleStats:
    """Sample mean with a normal-approximation 95% confidence half-width."""

    mean: float
    count: int
    ci95: float
    std: float

    @classmethod
    def from_samples(cls, x: np.ndarray) -> SampleStats:
        n = len(x)
        if n == 0:
            return cls(0.0, 0, 0.0, 0.0)
        std = float(np.std(x, ddof=1)) if n > 1 else 0.0
        return cls(float(np.mean(x)), n, 1.96 * std / math.sqrt(n), std)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "count": self.count, "ci95": self.ci95, "std": self.std}


def _masks(states: Trap | Iterable[int]) -> list[int]:
    return list(states.masks) if isinstance(states, Trap) else [int(m) for m in states]


def measure_stationary(trace: SimTrace, states: Trap | Iterable[int]) -> float:
    """Fraction of the recorded time spent in the given set of states."""
    tally = OccupancyTally(states)
    tally.update(trace)
    return tally.fraction


def active_fraction(trace: SimTrace, i: int) -> float:
    """Long-run throughput of link ``i`` over the whole trace."""
    begin, end, mask = trace.segments
    on = (mask >> i) & 1 == 1
    return float(np.sum((end - begin)[on]) / trace.duration)


def _transitions(inside: np.ndarray, begin: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Times at which the trajectory enters and leaves the set."""
    enter = np.flatnonzero(inside[1:] & ~inside[:-1]) + 1
    leave = np.flatnonzero(inside[:-1] & ~inside[1:]) + 1
    return begin[enter], begin[leave]


class OccupancyTally:
    """Time spent in a state set, accumulated over consecutive traces."""

    def __init__(self, states: Trap | Iterable[int]):
        self.masks = _masks(states)
        self.inside_time = 0.0
        self.total_time = 0.0

    def update(self, trace: SimTrace) -> None:
        self.total_time += trace.duration
        if self.masks:
            begin, end, _ = trace.segments
            self.inside_time += float(np.sum((end - begin)[trace.in_states(self.masks)]))

    @property
    def fraction(self) -> float:
        return self.inside_time / self.total_time if self.total_time > 0 else 0.0


class SojournTally:
    """Complete visits to a state set, each opened by an entry from outside.

    Consecutive traces must be contiguous in time; a visit in progress is
    carried across the boundary. A visit already under way when the first
    trace starts, or still open after the last, is not counted.
    """

    def __init__(self, states: Trap | Iterable[int]):
        self.masks = _masks(states)
        self.open_since: float | None = None
        self._chunks: list[np.ndarray] = []

    def update(self, trace: SimTrace) -> None:
        inside = trace.in_states(self.masks)
        enter, leave = _transitions(inside, trace.segments[0])
        if inside[0]:
            if len(leave) == 0:
                return
            if self.open_since is not None:
                self._chunks.append(np.array([leave[0] - self.open_since]))
            leave = leave[1:]
        # now outside: entries and exits alternate, starting with an entry
        k = len(leave)
        self._chunks.append(leave - enter[:k])
        self.open_since = float(enter[k]) if len(enter) > k else None

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate(self._chunks) if self._chunks else np.empty(0)

    def stats(self, min_samples: int = MIN_SAMPLES) -> SampleStats:
        x = self.samples
        if len(x) < min_samples:
            raise InsufficientSamples(len(x), min_samples)
        return SampleStats.from_samples(x)


class PassageTally:
    """Non-overlapping durations from an entry into one set to the next entry into another."""

    def __init__(self, source: Trap | Iterable[int], target: Trap | Iterable[int]):
        self.source = _masks(source)
        self.target = _masks(target)
        self.pending: float | None = None
        self._samples: list[float] = []

    def update(self, trace: SimTrace) -> None:
        begin = trace.segments[0]
        enter_i = _transitions(trace.in_states(self.source), begin)[0]
        enter_j = _transitions(trace.in_states(self.target), begin)[0]
        a = 0
        while True:
            if self.pending is None:
                if a == len(enter_i):
                    return
                self.pending = float(enter_i[a])
            b = np.searchsorted(enter_j, self.pending, side="right")
            if b == len(enter_j):
                return
            hit = float(enter_j[b])
            self._samples.append(hit - self.pending)
            self.pending = None
            a = np.searchsorted(enter_i, hit, side="right")

    @property
    def samples(self) -> np.ndarray:
        return np.asarray(self._samples, dtype=float)

    def stats(self, min_samples: int = MIN_SAMPLES) -> SampleStats:
        x = self.samples
        if len(x) < min_samples:
            raise InsufficientSamples(len(x), min_samples)
        return SampleStats.from_samples(x)


def sojourn_samples(trace: SimTrace, states: Trap | Iterable[int]) -> np.ndarray:
    """Lengths of complete visits, each opened by an entry from outside the set."""
    tally = SojournTally(states)
    tally.update(trace)
    return tally.samples


def measure_sojourn(trace: SimTrace, states: Trap | Iterable[int], min_samples: int = MIN_SAMPLES) -> SampleStats:
    tally = SojournTally(states)
    tally.update(trace)
    return tally.stats(min_samples)


def _nested(tr_i, tr_j) -> bool:
    mi, mj = set(_masks(tr_i)), set(_masks(tr_j))
    return mi <= mj or mj <= mi


def passage_samples(trace: SimTrace, tr_i: Trap | Iterable[int], tr_j: Trap | Iterable[int]) -> np.ndarray:
    """Non-overlapping durations from an entry into ``tr_i`` to the next entry into ``tr_j``."""
    tally = PassageTally(tr_i, tr_j)
    tally.update(trace)
    return tally.samples


def measure_passage(
    trace: SimTrace,
    tr_i: Trap | Iterable[int],
    tr_j: Trap | Iterable[int],
    min_samples: int = MIN_SAMPLES,
) -> SampleStats:
    """Mean first passage time; zero when one set contains the other."""
    if _nested(tr_i, tr_j):
        return SampleStats(0.0, 0, 0.0, 0.0)
    tally = PassageTally(tr_i, tr_j)
    tally.update(trace)
    return tally.stats(min_samples)


def cumulative_active(trace: SimTrace, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints ``t`` and cumulative active time of link ``i`` at each of them."""
    sel = trace.links == i
    t = np.concatenate(([trace.start_time], trace.times[sel], [trace.end_time]))
    first_on = bool(trace.initial_state >> i & 1)
    # the link toggles at every one of its own events
    on = (np.arange(len(t) - 1) % 2 == 0) == first_on
    acc = np.concatenate(([0.0], np.cumsum(np.diff(t) * on)))
    return t, acc


def windowed_throughput(trace: SimTrace, window: float, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Window start times and the active fraction of link ``i`` in each full window."""
    if not window > 0:
        raise InvalidParameter(f"window must be positive, got {window}")
    if not 0 <= i < trace.n_links:
        raise InvalidParameter(f"link {i} outside 0..{trace.n_links - 1}")
    count = int(math.floor(trace.duration / window * (1 + 1e-12)))
    if count == 0:
        return np.empty(0), np.empty(0)
    edges = trace.start_time + window * np.arange(count + 1)
    edges[-1] = min(edges[-1], trace.end_time)
    t, acc = cumulative_active(trace, i)
    cum = np.interp(edges, t, acc)
    return edges[:-1], np.diff(cum) / window


def bimodal_fraction(values: np.ndarray, low: float = 0.1, high: float = 0.9) -> float:
    """Share of windows whose throughput lies outside ``[low, high]``."""
    if len(values) == 0:
        return 0.0
    return float(np.mean((values < low) | (values > high)))


def measure_residual_wait(trace: SimTrace, i: int, rate: float = 1.0, seed: int = 0) -> SampleStats:
    """Mean wait from a random instant until link ``i`` next starts transmitting.

    Observation instants form a Poisson process of the given rate; instants
    after the last recorded start of ``i`` are discarded.
    """
    starts = trace.times[(trace.links == i) & trace.starts]
    if len(starts) == 0:
        raise InsufficientSamples(0, 1)
    rng = np.random.default_rng(seed)
    span = starts[-1] - trace.start_time
    n = rng.poisson(rate * span)
    epochs = trace.start_time + np.sort(rng.uniform(0.0, span, n))
    nxt = starts[np.searchsorted(starts, epochs, side="left")]
    return SampleStats.from_samples(nxt - epochs)


def check_carrier_sense(trace: SimTrace, graph: ContentionGraph) -> None:
    """Replay the events and raise ``AssertionError`` if two neighbours ever overlap."""
    if not graph.is_independent(trace.initial_state):
        raise AssertionError("initial state is not an independent set")
    if len(trace) == 0:
        return
    if np.any(np.diff(trace.times) < 0):
        raise AssertionError("events are not time-ordered")
    before = np.concatenate(([np.int64(trace.initial_state)], trace.masks_after[:-1]))
    links = trace.links.astype(np.int64)
    was_on = (before >> links) & 1 == 1
    if np.any(was_on == trace.starts):
        raise AssertionError("a link started while active or ended while idle")
    nbr = np.array(graph.neighbor_masks, dtype=np.int64)
    clash = trace.starts & ((nbr[links] & before) != 0)
    if np.any(clash):
        k = int(np.flatnonzero(clash)[0])
        raise AssertionError(f"link {int(links[k])} started next to an active neighbour at t={trace.times[k]}")
    if trace.masks_after[-1] != trace.final_state:
        raise AssertionError("replayed final state differs from the recorded one")
