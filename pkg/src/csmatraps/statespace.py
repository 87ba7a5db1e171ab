"""Feasible-state enumeration and equilibrium quantities of the ICN Markov chain.

A system state is the set of transmitting links, stored as an int bit mask.
Feasible states are exactly the independent sets of the contention graph.
Under the product-form equilibrium every state with ``n`` active links has
probability ``rho**n / Z`` where ``Z = sum_n c[n] rho**n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import InvalidParameter, StateSpaceTooLarge, UnknownLink
from .graph import ContentionGraph

DEFAULT_MAX_STATES = 1 << 22


def popcount(mask: int) -> int:
    return mask.bit_count()


def mask_links(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def links_mask(links) -> int:
    mask = 0
    for i in links:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class RhoPolynomial:
    """Polynomial in rho with non-negative integer coefficients (index = power)."""

    coefficients: tuple[int, ...]

    @property
    def degree(self) -> int:
        for k in range(len(self.coefficients) - 1, -1, -1):
            if self.coefficients[k]:
                return k
        return -1

    def __call__(self, rho: float) -> float:
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * rho + c
        return acc

    def coefficient(self, k: int) -> int:
        return self.coefficients[k] if 0 <= k < len(self.coefficients) else 0


@dataclass(frozen=True, eq=False)
class StateGraph:
    """Column-structured state-transition diagram.

    ``states`` is in canonical order: ascending cardinality, then ascending
    mask value. Column ``n`` is the contiguous index range
    ``offsets[n]:offsets[n + 1]``. ``up[k]`` lists ``(state index, added link)``
    and ``down[k]`` lists ``(state index, removed link)``.
    """

    graph: ContentionGraph
    states: tuple[int, ...]
    offsets: tuple[int, ...]
    up: tuple[tuple[tuple[int, int], ...], ...]
    down: tuple[tuple[tuple[int, int], ...], ...]

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def index(self) -> dict[int, int]:
        return {m: k for k, m in enumerate(self.states)}

    @cached_property
    def masks(self) -> np.ndarray:
        return np.array(self.states, dtype=np.int64)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([popcount(m) for m in self.states], dtype=np.int64)

    @property
    def max_column(self) -> int:
        return len(self.offsets) - 2

    @property
    def column_counts(self) -> tuple[int, ...]:
        return tuple(self.offsets[n + 1] - self.offsets[n] for n in range(len(self.offsets) - 1))

    def column(self, n: int) -> range:
        return range(self.offsets[n], self.offsets[n + 1])

    @cached_property
    def up_degree(self) -> np.ndarray:
        return np.array([len(u) for u in self.up], dtype=np.int64)

    def cardinality(self, k: int) -> int:
        return int(self.sizes[k])

    def contains_link(self, i: int) -> np.ndarray:
        """Boolean vector: which states have link ``i`` active."""
        _check_link(self, i)
        return (self.masks >> i) & 1 == 1

    def to_dict(self) -> dict:
        return {
            "links": self.graph.n_links,
            "states": list(self.states),
            "column_counts": list(self.column_counts),
            "up_edges": [[k, t, link] for k, ups in enumerate(self.up) for t, link in ups],
        }


def _check_link(sg: StateGraph, i: int) -> None:
    if not 0 <= i < sg.graph.n_links:
        raise UnknownLink(f"link {i} not in 0..{sg.graph.n_links - 1}")


def _independent_sets(g: ContentionGraph, max_states: int) -> list[int]:
    n = g.n_links
    nbr = g.neighbor_masks
    found: list[int] = []

    # Branch on the lowest undecided link; a link whose neighbour is already
    # active is skipped (its "include" branch is pruned).
    def rec(i: int, current: int, blocked: int) -> None:
        while i < n and blocked >> i & 1:
            i += 1
        if i == n:
            found.append(current)
            if len(found) > max_states:
                raise StateSpaceTooLarge(f"more than {max_states} feasible states")
            return
        rec(i + 1, current | (1 << i), blocked | nbr[i])
        rec(i + 1, current, blocked)

    rec(0, 0, 0)
    return found


def enumerate_states(g: ContentionGraph, max_states: int = DEFAULT_MAX_STATES) -> StateGraph:
    masks = sorted(_independent_sets(g, max_states), key=lambda m: (popcount(m), m))
    index = {m: k for k, m in enumerate(masks)}
    top = popcount(masks[-1])
    counts = [0] * (top + 1)
    for m in masks:
        counts[popcount(m)] += 1
    offsets = [0]
    for c in counts:
        offsets.append(offsets[-1] + c)

    nbr = g.neighbor_masks
    full = (1 << g.n_links) - 1
    up: list[list[tuple[int, int]]] = [[] for _ in masks]
    down: list[list[tuple[int, int]]] = [[] for _ in masks]
    for k, m in enumerate(masks):
        blocked = m
        for i in mask_links(m):
            blocked |= nbr[i]
        for j in mask_links(full & ~blocked):
            t = index[m | (1 << j)]
            up[k].append((t, j))
            down[t].append((k, j))
    return StateGraph(
        graph=g,
        states=tuple(masks),
        offsets=tuple(offsets),
        up=tuple(tuple(u) for u in up),
        down=tuple(tuple(d) for d in down),
    )


def _check_rho(rho: float) -> None:
    if not rho > 0 or not np.isfinite(rho):
        raise InvalidParameter(f"rho must be positive and finite, got {rho}")


def column_weights(sg: StateGraph, rho: float) -> np.ndarray:
    """Normalized probability of a single state in each column."""
    _check_rho(rho)
    n = np.arange(sg.max_column + 1, dtype=float)
    # scaled by rho**(-max column) to keep large rho in range
    logw = n * np.log(rho)
    w = np.exp(logw - logw.max())
    z = float(np.dot(sg.column_counts, w))
    return w / z


def stationary_distribution(sg: StateGraph, rho: float) -> np.ndarray:
    return column_weights(sg, rho)[sg.sizes]


def partition_function(sg: StateGraph) -> RhoPolynomial:
    return RhoPolynomial(sg.column_counts)


def link_throughput(sg: StateGraph, rho: float, i: int) -> float:
    _check_link(sg, i)
    p = stationary_distribution(sg, rho)
    return float(p[sg.contains_link(i)].sum())


def all_throughputs(sg: StateGraph, rho: float) -> np.ndarray:
    p = stationary_distribution(sg, rho)
    bits = (sg.masks[:, None] >> np.arange(sg.graph.n_links)) & 1
    return p @ bits


def throughput_polynomials(sg: StateGraph, i: int) -> tuple[RhoPolynomial, RhoPolynomial]:
    """Exact numerator and denominator of link ``i``'s equilibrium throughput."""
    _check_link(sg, i)
    num = [0] * (sg.max_column + 1)
    for m in sg.states:
        if m >> i & 1:
            num[popcount(m)] += 1
    return RhoPolynomial(tuple(num)), partition_function(sg)


def asymptotic_throughput(sg: StateGraph, i: int) -> Fraction:
    """Limit of link ``i``'s throughput as rho grows without bound."""
    num, den = throughput_polynomials(sg, i)
    top = den.degree
    return Fraction(num.coefficient(top), den.coefficient(top))
