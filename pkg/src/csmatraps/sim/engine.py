"""Event-driven ICN simulator.

Every idle link counts its residual backoff down at unit rate while none of
its neighbours transmits; the residual is frozen, not redrawn, while any
neighbour is active. On expiry the link transmits for a fresh transmission
sample, then redraws its backoff. Each link owns two independent random
streams (backoff, transmission) spawned from the master seed, and draws are
taken from per-link buffers so a run is reproducible no matter how often the
kernel is re-entered.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numba
import numpy as np

from ..graph import ContentionGraph
from .config import SimConfig

BUFFER_SIZE = 4096
CHUNK_SIZE = 1 << 20
LOOKUP_BITS = 24  # direct membership table up to 2**24 entries

_DONE, _REFILL, _FULL = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def _run(nbr_ptr, nbr_idx, active, blocked, residual, expiry, end_time,
         bo_buf, bo_pos, tx_buf, tx_pos, t, t_stop, record,
         out_t, out_link, out_start, n_out):
    n = active.shape[0]
    cap = out_t.shape[0]
    size = bo_buf.shape[1]
    while True:
        best = -1
        tmin = np.inf
        # linear scan; strict < keeps the lowest link index on ties
        for i in range(n):
            if active[i]:
                et = end_time[i]
            elif blocked[i] == 0:
                et = expiry[i]
            else:
                continue
            if et < tmin:
                tmin = et
                best = i
        if best < 0 or tmin > t_stop:
            return t, n_out, _DONE
        i = best
        if record and n_out == cap:
            return t, n_out, _FULL
        if active[i]:
            if bo_pos[i] == size:
                return t, n_out, _REFILL
            t = tmin
            active[i] = False
            c = bo_buf[i, bo_pos[i]]
            bo_pos[i] += 1
            residual[i] = c
            expiry[i] = t + c
            for p in range(nbr_ptr[i], nbr_ptr[i + 1]):
                j = nbr_idx[p]
                blocked[j] -= 1
                if blocked[j] == 0 and not active[j]:
                    expiry[j] = t + residual[j]
            started = False
        else:
            if tx_pos[i] == size:
                return t, n_out, _REFILL
            t = tmin
            active[i] = True
            end_time[i] = t + tx_buf[i, tx_pos[i]]
            tx_pos[i] += 1
            for p in range(nbr_ptr[i], nbr_ptr[i + 1]):
                j = nbr_idx[p]
                if blocked[j] == 0 and not active[j]:
                    residual[j] = max(expiry[j] - t, 0.0)
                blocked[j] += 1
            started = True
        if record:
            out_t[n_out] = t
            out_link[n_out] = i
            out_start[n_out] = started
            n_out += 1


def _csr(graph: ContentionGraph) -> tuple[np.ndarray, np.ndarray]:
    ptr = [0]
    idx: list[int] = []
    for i in range(graph.n_links):
        idx.extend(graph.neighbors(i))
        ptr.append(len(idx))
    return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)


@dataclass(frozen=True)
class LinkTimer:
    """Residual backoff ``remaining`` of an idle link; ``frozen`` while a neighbour transmits."""

    remaining: float
    frozen: bool


class Simulator:
    """Resumable simulator state for one configuration."""

    def __init__(self, cfg: SimConfig, buffer_size: int = BUFFER_SIZE):
        self.cfg = cfg
        g = cfg.graph
        n = g.n_links
        self.nbr_ptr, self.nbr_idx = _csr(g)
        children = np.random.SeedSequence(cfg.seed).spawn(n)
        self._bo_rng = []
        self._tx_rng = []
        for child in children:
            bo, tx = child.spawn(2)
            self._bo_rng.append(np.random.Generator(np.random.PCG64(bo)))
            self._tx_rng.append(np.random.Generator(np.random.PCG64(tx)))
        self.bo_buf = np.empty((n, buffer_size))
        self.tx_buf = np.empty((n, buffer_size))
        self.bo_pos = np.full(n, buffer_size, dtype=np.int64)
        self.tx_pos = np.full(n, buffer_size, dtype=np.int64)
        self._refill()

        self.active = np.zeros(n, dtype=np.bool_)
        self.blocked = np.zeros(n, dtype=np.int64)
        self.residual = np.zeros(n)
        self.expiry = np.zeros(n)
        self.end_time = np.zeros(n)
        self.time = 0.0
        for i in range(n):
            if cfg.initial_active >> i & 1:
                self.active[i] = True
                self.end_time[i] = self._take(self.tx_buf, self.tx_pos, i)
                for j in g.neighbors(i):
                    self.blocked[j] += 1
        for i in range(n):
            if not self.active[i]:
                self.residual[i] = self._take(self.bo_buf, self.bo_pos, i)
                self.expiry[i] = self.residual[i]

    def _take(self, buf: np.ndarray, pos: np.ndarray, i: int) -> float:
        value = float(buf[i, pos[i]])
        pos[i] += 1
        return value

    def _refill(self) -> None:
        size = self.bo_buf.shape[1]
        for i in np.flatnonzero(self.bo_pos == size):
            self.bo_buf[i] = self.cfg.backoff.sample(self._bo_rng[i], size)
            self.bo_pos[i] = 0
        for i in np.flatnonzero(self.tx_pos == size):
            self.tx_buf[i] = self.cfg.transmission.sample(self._tx_rng[i], size)
            self.tx_pos[i] = 0

    @property
    def active_mask(self) -> int:
        return sum(1 << int(i) for i in np.flatnonzero(self.active))

    def timers(self) -> dict[int, LinkTimer]:
        """Countdown state of every idle link at the current time."""
        out = {}
        for i in range(len(self.active)):
            if self.active[i]:
                continue
            if self.blocked[i]:
                out[i] = LinkTimer(float(self.residual[i]), True)
            else:
                out[i] = LinkTimer(float(max(self.expiry[i] - self.time, 0.0)), False)
        return out

    def advance(self, until: float, record: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Process every event with time ``<= until``; return recorded (times, links, starts)."""
        chunks = []
        out_t = np.empty(CHUNK_SIZE if record else 0)
        out_link = np.empty(len(out_t), dtype=np.int16)
        out_start = np.empty(len(out_t), dtype=np.bool_)
        n_out = 0
        while True:
            t, n_out, status = _run(
                self.nbr_ptr, self.nbr_idx, self.active, self.blocked, self.residual,
                self.expiry, self.end_time, self.bo_buf, self.bo_pos, self.tx_buf,
                self.tx_pos, self.time, float(until), record, out_t, out_link,
                out_start, n_out,
            )
            self.time = t
            if status == _REFILL:
                self._refill()
            elif status == _FULL:
                chunks.append((out_t.copy(), out_link.copy(), out_start.copy()))
                n_out = 0
            else:
                break
        self.time = max(self.time, float(until))
        chunks.append((out_t[:n_out].copy(), out_link[:n_out].copy(), out_start[:n_out].copy()))
        return tuple(np.concatenate([c[k] for c in chunks]) for k in range(3))


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Events recorded on ``[start_time, end_time]``.

    ``initial_state`` is the active-link mask at ``start_time``; the state is
    piecewise constant between consecutive events.
    """

    n_links: int
    start_time: float
    end_time: float
    initial_state: int
    final_state: int
    times: np.ndarray
    links: np.ndarray
    starts: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    def events(self) -> Iterator[tuple[float, int, str]]:
        for t, i, s in zip(self.times, self.links, self.starts):
            yield float(t), int(i), "start" if s else "end"

    @cached_property
    def masks_after(self) -> np.ndarray:
        """Active-link mask right after each event."""
        flips = np.left_shift(np.int64(1), self.links.astype(np.int64))
        if len(flips):
            flips[0] ^= np.int64(self.initial_state)
            return np.bitwise_xor.accumulate(flips)
        return flips

    @cached_property
    def segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(begin, end, mask)`` of every constant-state interval, in order."""
        begin = np.concatenate(([self.start_time], self.times))
        end = np.concatenate((self.times, [self.end_time]))
        mask = np.concatenate(([np.int64(self.initial_state)], self.masks_after))
        return begin, end, mask

    @cached_property
    def _unique_masks(self) -> tuple[np.ndarray, np.ndarray]:
        return np.unique(self.segments[2], return_inverse=True)

    def in_states(self, masks) -> np.ndarray:
        """Per-segment membership of the state in the given set of masks."""
        wanted = np.fromiter((int(m) for m in masks), dtype=np.int64)
        if self.n_links <= LOOKUP_BITS:
            table = np.zeros(1 << self.n_links, dtype=np.bool_)
            table[wanted] = True
            return table[self.segments[2]]
        uniq, inverse = self._unique_masks
        return np.isin(uniq, wanted)[inverse.ravel()]


def simulate(cfg: SimConfig) -> SimTrace:
    sim = Simulator(cfg)
    sim.advance(cfg.warmup, record=False)
    initial = sim.active_mask
    times, links, starts = sim.advance(cfg.end_time)
    return SimTrace(
        n_links=cfg.graph.n_links,
        start_time=cfg.warmup,
        end_time=cfg.end_time,
        initial_state=initial,
        final_state=sim.active_mask,
        times=times,
        links=links,
        starts=starts,
    )


def iter_traces(cfg: SimConfig, chunk: float) -> Iterator[SimTrace]:
    """Simulate ``cfg`` as consecutive traces each spanning at most ``chunk`` time units.

    Concatenating the chunks gives exactly the trace of ``simulate(cfg)``.
    """
    if not chunk > 0:
        raise ValueError("chunk must be positive")
    sim = Simulator(cfg)
    sim.advance(cfg.warmup, record=False)
    t0 = cfg.warmup
    state = sim.active_mask
    while t0 < cfg.end_time:
        t1 = min(t0 + chunk, cfg.end_time)
        times, links, starts = sim.advance(t1)
        final = sim.active_mask
        yield SimTrace(cfg.graph.n_links, t0, t1, state, final, times, links, starts)
        t0, state = t1, final
