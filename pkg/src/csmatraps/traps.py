"""Hierarchical trap decomposition of the state-transition diagram.

``G^(l)`` is the diagram with columns ``0..l-1`` removed. A connected
component of ``G^(l)`` that spans at least two columns is a trap; traps are
searched for recursively inside each trap by truncating further columns.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .errors import ColumnOutOfRange, InvalidParameter
from .statespace import StateGraph, _check_link, column_weights, mask_links


@dataclass(frozen=True, eq=False)
class Trap:
    """A trap ``Tr(s_r, l)``.

    ``states`` and ``roots`` hold state indices of the owning StateGraph;
    ``masks`` holds the same member states as active-link bit masks.
    ``column_sizes[k]`` is the number of member states with ``level + k``
    active links.
    """

    id: int
    name: str
    level: int
    depth: int
    states: tuple[int, ...]
    masks: tuple[int, ...]
    roots: tuple[int, ...]
    column_sizes: tuple[int, ...]
    parent: int | None
    children: tuple[int, ...]

    @cached_property
    def member_set(self) -> frozenset[int]:
        return frozenset(self.states)

    def __contains__(self, k: int) -> bool:
        return k in self.member_set

    def __len__(self) -> int:
        return len(self.states)

    def column_size(self, n: int) -> int:
        """``|A_n|`` for an absolute column index ``n``."""
        k = n - self.level
        return self.column_sizes[k] if 0 <= k <= self.depth else 0

    def leftmost(self, sg: StateGraph) -> list[int]:
        return [k for k in self.states if sg.sizes[k] == self.level]

    def root_masks(self, sg: StateGraph) -> list[int]:
        return [sg.states[k] for k in self.roots]

    def overlaps(self, other: Trap) -> bool:
        return not self.member_set.isdisjoint(other.member_set)

    def nested_with(self, other: Trap) -> bool:
        return self.member_set <= other.member_set or other.member_set <= self.member_set


@dataclass(frozen=True)
class TrapForest:
    traps: tuple[Trap, ...]

    def __iter__(self) -> Iterator[Trap]:
        return iter(self.traps)

    def __len__(self) -> int:
        return len(self.traps)

    def __getitem__(self, trap_id: int) -> Trap:
        return self.traps[trap_id]

    @property
    def top_level(self) -> list[Trap]:
        return [t for t in self.traps if t.parent is None]

    def by_name(self, name: str) -> Trap:
        for t in self.traps:
            if t.name == name:
                return t
        raise KeyError(name)

    def descendants(self, trap: Trap) -> list[Trap]:
        out = []
        stack = list(trap.children)
        while stack:
            t = self.traps[stack.pop()]
            out.append(t)
            stack.extend(t.children)
        return sorted(out, key=lambda t: t.id)


@dataclass(frozen=True)
class TruncatedView:
    """``G^(l)`` restricted to an optional subset of states."""

    sg: StateGraph
    level: int
    retained: tuple[int, ...]


def truncate(sg: StateGraph, l: int, within: Iterable[int] | None = None) -> TruncatedView:
    if not 0 <= l <= sg.max_column:
        raise ColumnOutOfRange(f"column {l} outside 0..{sg.max_column}")
    if within is None:
        retained = tuple(range(sg.offsets[l], len(sg)))
    else:
        retained = tuple(sorted(k for k in within if sg.sizes[k] >= l))
    return TruncatedView(sg, l, retained)


def state_key(sg: StateGraph, k: int) -> tuple[int, tuple[int, ...]]:
    """Order states by cardinality, then by their sorted tuple of active links."""
    m = sg.states[k]
    return (m.bit_count(), tuple(mask_links(m)))


def connected_components(view: TruncatedView) -> list[list[int]]:
    """Components of the retained subgraph, each sorted, ordered by smallest member."""
    sg = view.sg
    keep = set(view.retained)
    seen: set[int] = set()
    comps = []
    for start in view.retained:
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            k = queue.popleft()
            for nxt, _ in sg.up[k]:
                if nxt in keep and nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    queue.append(nxt)
            for nxt, _ in sg.down[k]:
                if nxt in keep and nxt not in seen:
                    seen.add(nxt)
                    comp.append(nxt)
                    queue.append(nxt)
        comp.sort()
        comps.append(comp)
    comps.sort(key=lambda c: min(state_key(sg, k) for k in c))
    return comps


@dataclass
class _Pending:
    level: int
    states: list[int]
    parent: int | None


def _split(sg: StateGraph, states: list[int], above: int, min_depth: int) -> list[tuple[int, list[int]]]:
    """First truncation level above ``above`` that splits ``states``; return its traps."""
    top = int(sg.sizes[states].max())
    for l in range(above + 1, top + 1):
        comps = connected_components(truncate(sg, l, states))
        if len(comps) < 2:
            continue
        out = []
        for comp in comps:
            depth = int(sg.sizes[comp].max()) - l
            if depth >= max(min_depth, 1):
                out.append((l, comp))
        return out
    return []


def find_traps(sg: StateGraph, min_depth: int = 1) -> TrapForest:
    """Decompose the state space into a forest of traps.

    Traps are numbered breadth-first; ``name`` follows the ``G{k}^({l})``
    convention with ``k`` counted per truncation level.
    """
    if min_depth < 1:
        raise InvalidParameter("min_depth must be at least 1")
    traps: list[dict] = []
    per_level: dict[int, int] = {}
    queue = deque(_Pending(l, comp, None) for l, comp in _split(sg, list(range(len(sg))), 0, min_depth))
    while queue:
        item = queue.popleft()
        tid = len(traps)
        per_level[item.level] = per_level.get(item.level, 0) + 1
        sizes = sg.sizes[item.states]
        depth = int(sizes.max()) - item.level
        traps.append(
            dict(
                id=tid,
                name=f"G{per_level[item.level]}^({item.level})",
                level=item.level,
                depth=depth,
                states=tuple(item.states),
                masks=tuple(sg.states[k] for k in item.states),
                roots=tuple(k for k in item.states if sg.sizes[k] == item.level + depth),
                column_sizes=tuple(int(c) for c in np.bincount(sizes - item.level, minlength=depth + 1)),
                parent=item.parent,
                children=[],
            )
        )
        if item.parent is not None:
            traps[item.parent]["children"].append(tid)
        for l, comp in _split(sg, item.states, item.level, min_depth):
            queue.append(_Pending(l, comp, tid))
    return TrapForest(tuple(Trap(**{**t, "children": tuple(t["children"])}) for t in traps))


def _trap_weights(trap: Trap, sg: StateGraph, rho: float) -> tuple[np.ndarray, np.ndarray]:
    w = column_weights(sg, rho)
    idx = np.asarray(trap.states)
    return idx, w[sg.sizes[idx]]


def trap_probability(trap: Trap, sg: StateGraph, rho: float) -> float:
    return float(_trap_weights(trap, sg, rho)[1].sum())


def conditional_throughput(trap: Trap, sg: StateGraph, rho: float, i: int) -> float:
    """Throughput of link ``i`` given that the process is inside ``trap``."""
    _check_link(sg, i)
    idx, p = _trap_weights(trap, sg, rho)
    active = (sg.masks[idx] >> i) & 1 == 1
    return float(p[active].sum() / p.sum())


def conditional_throughputs(trap: Trap, sg: StateGraph, rho: float) -> np.ndarray:
    idx, p = _trap_weights(trap, sg, rho)
    bits = (sg.masks[idx][:, None] >> np.arange(sg.graph.n_links)) & 1
    return (p @ bits) / p.sum()


def starving_links(trap: Trap, sg: StateGraph, rho: float, th_temp: float) -> list[int]:
    if not 0 < th_temp <= 1:
        raise InvalidParameter(f"th_temp must lie in (0, 1], got {th_temp}")
    th = conditional_throughputs(trap, sg, rho)
    return [i for i in range(sg.graph.n_links) if th[i] < th_temp]


def frozen_traps(forest: TrapForest, sg: StateGraph, i: int) -> list[Trap]:
    """Traps in which link ``i`` is never active."""
    _check_link(sg, i)
    bit = 1 << i
    return [t for t in forest if not any(sg.states[k] & bit for k in t.states)]


def forest_to_dicts(forest: TrapForest, sg: StateGraph, rho: float, th_temp: float) -> list[dict]:
    return [
        {
            "id": t.id,
            "name": t.name,
            "level": t.level,
            "depth": t.depth,
            "roots": t.root_masks(sg),
            "state_count": len(t),
            "parent": t.parent,
            "children": list(t.children),
            "starving_links": starving_links(t, sg, rho, th_temp),
            "probability_at_rho": trap_probability(t, sg, rho),
        }
        for t in forest
    ]
