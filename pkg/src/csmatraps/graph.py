"""Contention graphs: links are vertices, an edge joins two links that sense each other."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter, InvalidSize, ParseError, ValidationError

MAX_LINKS = 63


def _normalize_edges(n_links: int, edges: Iterable[Sequence[int]]) -> frozenset[tuple[int, int]]:
    seen: set[tuple[int, int]] = set()
    for edge in edges:
        if len(edge) != 2:
            raise ValidationError(f"edge {edge!r} must have exactly two endpoints")
        i, j = edge
        if isinstance(i, bool) or isinstance(j, bool) or not isinstance(i, int) or not isinstance(j, int):
            raise ValidationError(f"edge {edge!r} endpoints must be integers")
        if not (0 <= i < n_links and 0 <= j < n_links):
            raise ValidationError(f"edge {edge!r} out of range for {n_links} links")
        if i == j:
            raise ValidationError(f"self-loop on link {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValidationError(f"duplicate edge {key}")
        seen.add(key)
    return frozenset(seen)


@dataclass(frozen=True)
class ContentionGraph:
    n_links: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if isinstance(self.n_links, bool) or not isinstance(self.n_links, int):
            raise ValidationError("n_links must be an integer")
        if not 1 <= self.n_links <= MAX_LINKS:
            raise InvalidSize(f"n_links must be in 1..{MAX_LINKS}, got {self.n_links}")
        object.__setattr__(self, "edges", _normalize_edges(self.n_links, self.edges))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.n_links:
                raise ValidationError("labels must name every link exactly once")
            object.__setattr__(self, "labels", labels)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        masks = [0] * self.n_links
        for i, j in self.edges:
            masks[i] |= 1 << j
            masks[j] |= 1 << i
        return tuple(masks)

    def neighbors(self, i: int) -> list[int]:
        mask = self.neighbor_masks[i]
        return [j for j in range(self.n_links) if mask >> j & 1]

    def degree(self, i: int) -> int:
        return self.neighbor_masks[i].bit_count()

    def adjacent(self, i: int, j: int) -> bool:
        return bool(self.neighbor_masks[i] >> j & 1)

    def is_independent(self, mask: int) -> bool:
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if self.neighbor_masks[i] & mask:
                return False
            m ^= low
        return True

    def label(self, i: int) -> str:
        """Human-facing name of link ``i`` (1-based by default)."""
        return self.labels[i] if self.labels is not None else str(i + 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_dict(self) -> dict:
        out: dict = {"links": self.n_links, "edges": [list(e) for e in self.sorted_edges()]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out


def parse_graph(text: str) -> ContentionGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("graph file must hold a JSON object")
    if "links" not in doc or "edges" not in doc:
        raise ParseError('graph object needs "links" and "edges" keys')
    n, edges = doc["links"], doc["edges"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ParseError('"links" must be an integer')
    if not isinstance(edges, list) or not all(isinstance(e, list) for e in edges):
        raise ParseError('"edges" must be a list of [i, j] pairs')
    labels = doc.get("labels")
    if labels is not None and not isinstance(labels, list):
        raise ParseError('"labels" must be a list')
    if not 1 <= n <= MAX_LINKS:
        raise InvalidSize(f"n_links must be in 1..{MAX_LINKS}, got {n}")
    return ContentionGraph(n, _normalize_edges(n, edges), tuple(labels) if labels else None)


def serialize_graph(g: ContentionGraph) -> str:
    return json.dumps(g.to_dict())


def load_graph(path) -> ContentionGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def save_graph(g: ContentionGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_graph(g))
        fh.write("\n")


def gen_ring(n: int) -> ContentionGraph:
    if n < 3:
        raise InvalidSize(f"a ring needs at least 3 links, got {n}")
    return ContentionGraph(n, [(i, (i + 1) % n) for i in range(n)])


def gen_linear(n: int) -> ContentionGraph:
    if n < 1:
        raise InvalidSize(f"a linear network needs at least 1 link, got {n}")
    return ContentionGraph(n, frozenset((i, i + 1) for i in range(n - 1)))


def grid_index(row: int, col: int, rows: int) -> int:
    """Link index of lattice cell (row, col); links are numbered down each column.

    With this numbering the 2x3 grid has maximum independent sets {1,4,5} and
    {2,3,6} in 1-based labels.
    """
    return col * rows + row


def gen_grid(rows: int, cols: int) -> ContentionGraph:
    if rows < 1 or cols < 1:
        raise InvalidSize(f"grid dimensions must be positive, got {rows}x{cols}")
    if rows * cols > MAX_LINKS:
        raise InvalidSize(f"{rows}x{cols} grid exceeds {MAX_LINKS} links")
    edges = set()
    for c in range(cols):
        for r in range(rows):
            here = grid_index(r, c, rows)
            if r + 1 < rows:
                edges.add((here, grid_index(r + 1, c, rows)))
            if c + 1 < cols:
                edges.add((here, grid_index(r, c + 1, rows)))
    return ContentionGraph(rows * cols, frozenset(edges))


def gen_random(n: int, avg_degree: float, seed: int) -> ContentionGraph:
    """Each pair is joined independently with probability ``avg_degree / (n - 1)``."""
    if n < 1 or n > MAX_LINKS:
        raise InvalidSize(f"n must be in 1..{MAX_LINKS}, got {n}")
    if not 0 <= avg_degree <= max(n - 1, 0):
        raise InvalidParameter(f"avg_degree must lie in [0, {n - 1}], got {avg_degree}")
    if n == 1 or avg_degree == 0:
        return ContentionGraph(n)
    p = avg_degree / (n - 1)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return ContentionGraph(n, frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


# 1-based edge list of the seven-link example network used to illustrate the
# hierarchical trap decomposition.
_FIG7_EDGES = [(1, 2), (1, 3), (2, 4), (3, 4)] + [(hub, x) for hub in (5, 7) for x in (1, 2, 3, 4, 6)]


def fig7_network() -> ContentionGraph:
    return ContentionGraph(7, frozenset((min(a, b) - 1, max(a, b) - 1) for a, b in _FIG7_EDGES))
