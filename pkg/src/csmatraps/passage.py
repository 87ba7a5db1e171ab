"""Expected first passage time between traps on a trap-aggregated chain.

Every trap of a pairwise-disjoint trap set collapses to one node that is left
at rate ``1 / T_V`` and, on leaving, lands on a neighbouring state of column
``l - 1`` in proportion to the number of edges joining that state to the
trap's leftmost column. All other states keep their original rates. The
mean hitting time of the target trap node then follows from a linear solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import InvalidParameter, NestedTraps, SingularSystem
from .statespace import StateGraph, _check_rho
from .sojourn import sojourn_time
from .traps import Trap, TrapForest


@dataclass(frozen=True)
class SimplifiedChain:
    """Nodes are ``("state", mask)`` for non-trap states or ``("trap", id)`` for aggregates."""

    nodes: tuple[tuple[str, int], ...]
    node_of_state: np.ndarray
    exit_rates: np.ndarray
    jump_probs: scipy.sparse.csr_matrix

    def node_index(self, label: tuple[str, int]) -> int:
        return self.nodes.index(label)

    def trap_node(self, trap: Trap) -> int:
        return self.node_index(("trap", trap.id))

    def jump_distribution(self, node: int) -> dict[tuple[str, int], float]:
        row = self.jump_probs.getrow(node)
        return {self.nodes[j]: float(p) for j, p in zip(row.indices, row.data)}


def select_trap_set(forest: TrapForest, tr_i: Trap, tr_j: Trap) -> list[Trap]:
    """``[tr_i, tr_j]`` plus further pairwise-disjoint traps, deepest first."""
    if tr_i.id == tr_j.id:
        raise InvalidParameter("source and target trap must differ")
    if tr_i.overlaps(tr_j):
        raise NestedTraps(f"{tr_i.name} and {tr_j.name} overlap")
    chosen = [tr_i, tr_j]
    for t in sorted(forest, key=lambda t: (-t.depth, t.id)):
        if t.id in (tr_i.id, tr_j.id):
            continue
        if all(not t.overlaps(c) for c in chosen):
            chosen.append(t)
    return chosen


def build_simplified_chain(sg: StateGraph, traps: list[Trap], rho: float) -> SimplifiedChain:
    _check_rho(rho)
    owner = np.full(len(sg), -1, dtype=np.int64)
    for pos, t in enumerate(traps):
        idx = np.asarray(t.states)
        if np.any(owner[idx] >= 0):
            raise InvalidParameter("traps of a simplified chain must be pairwise disjoint")
        owner[idx] = pos

    nodes: list[tuple[str, int]] = []
    node_of_state = np.empty(len(sg), dtype=np.int64)
    for k in range(len(sg)):
        if owner[k] < 0:
            node_of_state[k] = len(nodes)
            nodes.append(("state", sg.states[k]))
    first_trap_node = len(nodes)
    for pos, t in enumerate(traps):
        nodes.append(("trap", t.id))
    node_of_state[owner >= 0] = first_trap_node + owner[owner >= 0]

    rates = np.empty(len(nodes))
    rows, cols, vals = [], [], []
    for k in np.flatnonzero(owner < 0):
        src = node_of_state[k]
        nu = sg.sizes[k] + len(sg.up[k]) * rho
        rates[src] = nu
        for t, _ in sg.up[k]:
            rows.append(src)
            cols.append(node_of_state[t])
            vals.append(rho / nu)
        for t, _ in sg.down[k]:
            rows.append(src)
            cols.append(node_of_state[t])
            vals.append(1.0 / nu)
    for pos, trap in enumerate(traps):
        src = first_trap_node + pos
        rates[src] = 1.0 / sojourn_time(trap, sg, rho).value
        share = 1.0 / (trap.column_sizes[0] * trap.level)
        for k in trap.leftmost(sg):
            for t, _ in sg.down[k]:
                rows.append(src)
                cols.append(node_of_state[t])
                vals.append(share)
    # duplicate (row, col) entries are summed: merged transitions into a trap
    P = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(len(nodes), len(nodes)))
    P.sum_duplicates()
    return SimplifiedChain(tuple(nodes), node_of_state, rates, P)


def hitting_times(chain: SimplifiedChain, target: int) -> np.ndarray:
    """Mean time to reach node ``target`` from every node (0 at the target)."""
    n = len(chain.nodes)
    keep = np.ones(n, dtype=bool)
    keep[target] = False
    P = chain.jump_probs[keep][:, keep]
    A = (scipy.sparse.identity(P.shape[0], format="csc") - P).tocsc()
    rhs = 1.0 / chain.exit_rates[keep]
    try:
        sol = scipy.sparse.linalg.spsolve(A, rhs)
    except RuntimeError as exc:
        raise SingularSystem("passage-time system is singular") from exc
    sol = np.atleast_1d(sol)
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("passage-time system is singular")
    out = np.zeros(n)
    out[keep] = sol
    return out


def first_passage(sg: StateGraph, forest: TrapForest, tr_i: Trap, tr_j: Trap, rho: float) -> float:
    """Approximate expected time from entering ``tr_i`` until first entering ``tr_j``.

    Nested (overlapping) traps have passage time zero by definition.
    """
    try:
        traps = select_trap_set(forest, tr_i, tr_j)
    except NestedTraps:
        return 0.0
    chain = build_simplified_chain(sg, traps, rho)
    e = hitting_times(chain, chain.trap_node(tr_j))
    return float(e[chain.trap_node(tr_i)])
