from __future__ import annotations

import numpy as np
import pytest

from csmatraps.errors import InvalidParameter, NestedTraps
from csmatraps.graph import gen_grid
from csmatraps.passage import build_simplified_chain, first_passage, hitting_times, select_trap_set
from csmatraps.sojourn import RHO0, sojourn_time
from csmatraps.statespace import enumerate_states
from csmatraps.traps import find_traps
from conftest import full_chain_passage, labels_mask

RHOS = (1.0, 2.0, RHO0, 5 * RHO0, 10 * RHO0, 100.0)


def disjoint_pairs(forest):
    return [(a, b) for a in forest for b in forest if a.id != b.id and not a.overlaps(b)]


def test_grid_trap_set(grid23):
    sg, (t1, t2) = grid23
    assert select_trap_set(grid23[1], t1, t2) == [t1, t2]


def test_grid_state_node(grid23):
    sg, (t1, t2) = grid23
    r = 4.0
    chain = build_simplified_chain(sg, [t1, t2], r)
    node = chain.node_index(("state", labels_mask(1)))
    probs = chain.jump_distribution(node)
    assert probs[("state", 0)] == pytest.approx(1 / (1 + 3 * r))
    assert probs[("trap", t1.id)] == pytest.approx(2 * r / (1 + 3 * r))
    assert probs[("state", labels_mask(1, 6))] == pytest.approx(r / (1 + 3 * r))
    assert len(probs) == 3
    assert chain.exit_rates[node] == pytest.approx(1 + 3 * r)


def test_grid_trap_node(grid23):
    sg, (t1, t2) = grid23
    chain = build_simplified_chain(sg, [t1, t2], 4.0)
    node = chain.trap_node(t1)
    probs = chain.jump_distribution(node)
    assert probs == pytest.approx({("state", labels_mask(x)): 1 / 3 for x in (1, 4, 5)})
    assert chain.exit_rates[node] == pytest.approx(1 / sojourn_time(t1, sg, 4.0).value)


def test_chain_partitions_states(fixtures):
    for sg, forest in fixtures.values():
        for a, b in disjoint_pairs(forest):
            traps = select_trap_set(forest, a, b)
            chain = build_simplified_chain(sg, traps, RHO0)
            covered = np.zeros(len(sg), dtype=int)
            for t in traps:
                covered[list(t.states)] += 1
                assert np.all(chain.node_of_state[list(t.states)] == chain.trap_node(t))
            assert covered.max() <= 1
            assert len(chain.nodes) == len(sg) - sum(len(t) for t in traps) + len(traps)


def test_jump_normalization(fixtures):
    for sg, forest in fixtures.values():
        for a, b in disjoint_pairs(forest):
            for r in (1.0, 10 * RHO0):
                chain = build_simplified_chain(sg, select_trap_set(forest, a, b), r)
                sums = np.asarray(chain.jump_probs.sum(axis=1)).ravel()
                assert np.allclose(sums, 1.0, atol=1e-12, rtol=0)
                assert chain.jump_probs.min() >= 0


def test_passage_at_least_sojourn(fixtures):
    for sg, forest in fixtures.values():
        for a, b in disjoint_pairs(forest):
            for r in RHOS:
                assert first_passage(sg, forest, a, b, r) >= sojourn_time(a, sg, r).value


def test_grid_symmetry():
    for cols in (3, 4, 5):
        sg = enumerate_states(gen_grid(2, cols))
        forest = find_traps(sg)
        t1, t2 = [t for t in forest if not t.children]
        for r in RHOS:
            assert first_passage(sg, forest, t1, t2, r) == pytest.approx(
                first_passage(sg, forest, t2, t1, r), rel=1e-10
            )


def test_monotone_in_rho(fixtures):
    grid = np.geomspace(RHO0, 100 * RHO0, 30)
    for sg, forest in fixtures.values():
        for a, b in disjoint_pairs(forest):
            values = [first_passage(sg, forest, a, b, r) for r in grid]
            assert np.all(np.diff(values) > 0)


def test_dip_near_unit_rho_is_real(fixtures):
    # the exact passage time on ring10 falls between rho=1 and rho=2 before rising
    sg, (a, b) = fixtures["ring10"]
    exact = [full_chain_passage(sg, a, b, r) for r in (1.0, 2.0, 5.0)]
    approx = [first_passage(sg, fixtures["ring10"][1], a, b, r) for r in (1.0, 2.0, 5.0)]
    assert exact[0] > exact[1] < exact[2]
    assert approx[0] > approx[1] < approx[2]
    assert approx == pytest.approx(exact, rel=0.02)


def test_grid_scaling():
    values = []
    for cols in (3, 4, 5):
        sg = enumerate_states(gen_grid(2, cols))
        forest = find_traps(sg)
        t1, t2 = [t for t in forest if not t.children]
        values.append(first_passage(sg, forest, t1, t2, 10 * RHO0))
    assert values[0] < values[1] < values[2]


def test_nested_and_same(fig7):
    sg, forest = fig7
    g11, g21, g12, g22 = forest
    assert first_passage(sg, forest, g11, g12, RHO0) == 0.0
    assert first_passage(sg, forest, g22, g11, RHO0) == 0.0
    with pytest.raises(NestedTraps):
        select_trap_set(forest, g11, g12)
    with pytest.raises(InvalidParameter):
        select_trap_set(forest, g12, g12)
    traps = select_trap_set(forest, g12, g22)
    assert g11 not in traps and g21 in traps


def test_overlapping_chain_rejected(fig7):
    sg, (g11, g21, g12, g22) = fig7
    with pytest.raises(InvalidParameter):
        build_simplified_chain(sg, [g11, g12], RHO0)


def test_hitting_times_zero_at_target(grid23):
    sg, (t1, t2) = grid23
    chain = build_simplified_chain(sg, [t1, t2], RHO0)
    e = hitting_times(chain, chain.trap_node(t2))
    assert e[chain.trap_node(t2)] == 0.0
    assert np.all(np.delete(e, chain.trap_node(t2)) > 0)


@pytest.mark.parametrize("r", [0.5, 1.0, RHO0, 10 * RHO0, 1000.0])
def test_fig7_hub_to_big(fig7, r):
    sg, (g11, g21, g12, g22) = fig7
    assert first_passage(sg, fig7[1], g21, g11, r) == pytest.approx(7 * r / 10 + 7 / 5 + 1 / (5 * r), rel=1e-10)


@pytest.mark.parametrize("r", [0.5, 1.0, RHO0, 10 * RHO0, 1000.0])
def test_fig7_big_to_hub(fig7, r):
    # uses T_V(G1^(1)) = 2 rho^2/5 + 6 rho/5 + 1
    sg, (g11, g21, g12, g22) = fig7
    expected = 7 * r**2 / 5 + 21 * r / 5 + 7 / 2 + 1 / (2 * r)
    assert first_passage(sg, fig7[1], g11, g21, r) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("r", [0.5, 1.0, RHO0, 10 * RHO0, 1000.0])
def test_fig7_between_level_two(fig7, r):
    sg, (g11, g21, g12, g22) = fig7
    closed = r + 5 / 2 + 2 / (9 * (2 * r + 3)) + 25 / (18 * r) + 1 / (6 * r**2)
    assert first_passage(sg, fig7[1], g12, g22, r) == pytest.approx(closed, rel=1e-10)
    assert first_passage(sg, fig7[1], g22, g12, r) == pytest.approx(closed, rel=1e-10)


@pytest.mark.parametrize("r", [1.0, RHO0, 10 * RHO0])
def test_fig7_against_full_chain(fig7, r):
    sg, (g11, g21, g12, g22) = fig7
    approx = first_passage(sg, fig7[1], g12, g22, r)
    assert approx == pytest.approx(full_chain_passage(sg, g12, g22, r), rel=0.02)


def test_small_fixtures_close_to_full_chain(fixtures):
    for name in ("grid2x3", "grid2x4", "ring4", "ring6"):
        sg, forest = fixtures[name]
        for a, b in disjoint_pairs(forest):
            for r in (1.0, 10 * RHO0):
                approx = first_passage(sg, forest, a, b, r)
                assert approx == pytest.approx(full_chain_passage(sg, a, b, r), rel=0.05)
