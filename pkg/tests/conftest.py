from __future__ import annotations

import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import strategies as st

from csmatraps.graph import ContentionGraph, fig7_network, gen_grid, gen_linear, gen_ring
from csmatraps.statespace import enumerate_states
from csmatraps.traps import find_traps

RHO0 = 5.35


def labels_mask(*labels: int) -> int:
    """Bit mask of 1-based link labels."""
    return sum(1 << (x - 1) for x in labels)


@st.composite
def graphs(draw, min_links: int = 1, max_links: int = 10) -> ContentionGraph:
    n = draw(st.integers(min_links, max_links))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return ContentionGraph(n, frozenset(chosen))


def brute_force_census(g: ContentionGraph) -> list[int]:
    """Independent-set counts by cardinality from all 2**n subsets."""
    masks = np.arange(1 << g.n_links, dtype=np.int64)
    ok = np.ones(len(masks), dtype=bool)
    for i, j in g.edges:
        ok &= ~(((masks >> i) & 1).astype(bool) & ((masks >> j) & 1).astype(bool))
    sizes = np.array([int(m).bit_count() for m in masks[ok]])
    return np.bincount(sizes).tolist()


def full_chain_passage(sg, source, target, rho: float) -> float:
    """Exact mean hitting time of ``target`` on the unsimplified chain.

    Starts uniformly over ``source``'s leftmost column (where every visit begins).
    """
    n = len(sg)
    tgt = set(target.states)
    Q = np.zeros((n, n))
    for k in range(n):
        for t, _ in sg.up[k]:
            Q[k, t] += rho
        for t, _ in sg.down[k]:
            Q[k, t] += 1.0
    Q -= np.diag(Q.sum(axis=1))
    keep = [k for k in range(n) if k not in tgt]
    h = np.zeros(n)
    h[keep] = scipy.linalg.solve(-Q[np.ix_(keep, keep)], np.ones(len(keep)))
    return float(np.mean(h[source.leftmost(sg)]))


@pytest.fixture(scope="session")
def grid23():
    sg = enumerate_states(gen_grid(2, 3))
    return sg, find_traps(sg)


@pytest.fixture(scope="session")
def fig7():
    sg = enumerate_states(fig7_network())
    return sg, find_traps(sg)


def fixture_graphs() -> dict[str, ContentionGraph]:
    out = {
        "grid2x3": gen_grid(2, 3),
        "grid2x4": gen_grid(2, 4),
        "grid2x5": gen_grid(2, 5),
        "fig7": fig7_network(),
        "linear3": gen_linear(3),
        "linear5": gen_linear(5),
        "linear7": gen_linear(7),
    }
    for n in (4, 6, 8, 10):
        out[f"ring{n}"] = gen_ring(n)
    return out


@pytest.fixture(scope="session")
def fixtures():
    """name -> (state graph, trap forest) for every analytic fixture network."""
    out = {}
    for name, g in fixture_graphs().items():
        sg = enumerate_states(g)
        out[name] = (sg, find_traps(sg))
    return out


ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    """Register an acceptance outcome for the end-of-run summary."""
    ACCEPTANCE.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
