import itertools

import numpy as np
import pytest
from conftest import barbell, blob, is_connected_set, ncut_direct, path_graph, random_connected
from hypothesis import given, settings
from hypothesis import strategies as st

from hmsc.coarse import CoarseGrid
from hmsc.driver import HmscConfig, divide
from hmsc.exceptions import UnsplittableError
from hmsc.graph import Component
from hmsc.ncut import (
    build_eag,
    graph_cut,
    min_ncut_split,
    ncut_of_edge,
    ncut_value,
    repair_connectivity,
    tree_side,
)
from hmsc.skeleton import TreeApprox


def line_tree(node_cells, n_cells=None):
    """Tree of cells ``(i, 0, 0)`` in a straight line; node k lives in cell ``node_cells[k]``."""
    n_cells = n_cells or max(node_cells) + 1
    res = max(n_cells, 2)
    shape = (res,) * 3
    occ = np.zeros(shape, bool)
    occ[:n_cells, 0, 0] = True
    flat = np.array([np.ravel_multi_index((c, 0, 0), shape) for c in node_cells], dtype=np.int64)
    dens = np.bincount(flat, minlength=res**3).reshape(shape).astype(np.int64)
    grid = CoarseGrid(res, occ, dens, flat, "M_tree")
    cells = [(i, 0, 0) for i in range(n_cells)]
    edges = [(i, i + 1) for i in range(n_cells - 1)]
    return TreeApprox(cells, edges, grid)


def test_eag_counts_pair_edges():
    # nodes a=0, b=1 in cell 0; c=2 in cell 1
    comp = Component.from_edges(3, [(0, 2), (1, 2)])
    eag = build_eag(line_tree([0, 0, 1]), comp)
    assert eag.weights == {(0, 1): 2}


def test_eag_single_cell_has_no_edges():
    comp = random_connected(8, np.random.default_rng(0))
    eag = build_eag(line_tree([0] * 8, n_cells=1), comp)
    assert eag.weights == {}


def test_eag_matches_double_loop_recount():
    rng = np.random.default_rng(11)
    comp = random_connected(40, rng, extra=0.1)
    assign = rng.integers(0, 8, 40)
    assign[:8] = np.arange(8)
    tree = line_tree(assign.tolist(), n_cells=8)
    eag = build_eag(tree, comp)
    a = comp.adjacency.toarray()
    for v1, v2 in itertools.combinations(range(8), 2):
        count = sum(
            a[i, j] for i in range(40) for j in range(40) if assign[i] == v1 and assign[j] == v2
        )
        assert eag.weight(v1, v2) == count
    total = sum(eag.weights.values())
    assert total <= comp.n_edges


def test_path_of_four_edge_values():
    comp = path_graph(4)
    tree = line_tree([0, 1, 2, 3])
    eag = build_eag(tree, comp)
    mid = ncut_of_edge(tree, eag, (1, 2))
    assert (mid.cut, mid.vol_w, mid.vol_wc, mid.ncut) == (1, 2, 2, 1.0)
    end = ncut_of_edge(tree, eag, (0, 1))
    assert end.ncut == pytest.approx(4 / 3, abs=1e-15)


def test_not_a_tree_edge():
    tree = line_tree([0, 1, 2, 3])
    eag = build_eag(tree, path_graph(4))
    with pytest.raises(ValueError):
        ncut_of_edge(tree, eag, (0, 2))


def test_zero_volume_side_is_infinite():
    tree = line_tree([0, 0, 0], n_cells=2)
    eag = build_eag(tree, path_graph(3))
    assert ncut_of_edge(tree, eag, (0, 1)).ncut == float("inf")
    assert ncut_value(0, 0, 3) == float("inf")


def test_barbell_bridge():
    comp = barbell(3)
    tree = line_tree([0, 1, 2, 3, 4, 5])
    eag = build_eag(tree, comp)
    bridge = ncut_of_edge(tree, eag, (2, 3))
    assert (bridge.cut, bridge.vol_w, bridge.vol_wc) == (1, 3, 3)
    assert bridge.ncut == pytest.approx(2 / 3, abs=1e-15)
    assert brute_force_min_ncut(comp) == pytest.approx(2 / 3, abs=1e-15)
    result = min_ncut_split(tree, eag, comp)
    assert result.edge == ((2, 0, 0), (3, 0, 0))
    assert result.ncut == pytest.approx(2 / 3, abs=1e-15)


def test_min_split_path_and_balance():
    comp = path_graph(4)
    tree = line_tree([0, 1, 2, 3])
    eag = build_eag(tree, comp)
    for balance in (0.1, 0.4):
        result = min_ncut_split(tree, eag, comp, balance)
        assert result.edge == ((1, 0, 0), (2, 0, 0))
        assert result.ncut == 1.0


def test_balance_falls_back_when_nothing_feasible():
    # 5 nodes, 4 in the first cell: no edge leaves more than 2 nodes per side
    comp = path_graph(5)
    tree = line_tree([0, 0, 0, 0, 1])
    eag = build_eag(tree, comp)
    result = min_ncut_split(tree, eag, comp, balance=0.45)
    assert result.tree_value.vol_wc == 1


def test_single_cell_unsplittable():
    comp = path_graph(3)
    tree = line_tree([0, 0, 0], n_cells=1)
    with pytest.raises(UnsplittableError):
        min_ncut_split(tree, build_eag(tree, comp), comp)


def test_all_cuts_empty_side_unsplittable():
    comp = path_graph(3)
    tree = line_tree([1, 1, 1], n_cells=3)
    with pytest.raises(UnsplittableError):
        min_ncut_split(tree, build_eag(tree, comp), comp)


def test_tie_breaks_to_smallest_edge():
    # symmetric path of 6: edges (0,1) and (4,5) tie, as do (1,2) and (3,4)
    comp = path_graph(6)
    tree = line_tree(list(range(6)))
    result = min_ncut_split(tree, build_eag(tree, comp), comp, balance=0.0)
    assert result.edge == ((2, 0, 0), (3, 0, 0))
    comp = path_graph(2)
    tree = line_tree([0, 1])
    assert min_ncut_split(tree, build_eag(tree, comp), comp).edge == ((0, 0, 0), (1, 0, 0))


def test_repair_connected_is_unchanged():
    comp = path_graph(6)
    in_w = np.array([1, 1, 1, 0, 0, 0], bool)
    assert np.array_equal(repair_connectivity(in_w, comp.adjacency), in_w)


def test_repair_moves_stray_node():
    # W = {x=5} + blob {0,1,2}; x touches only W^C = {3,4}
    comp = Component.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
    in_w = np.array([1, 1, 1, 0, 0, 1], bool)
    out = repair_connectivity(in_w, comp.adjacency)
    assert out.tolist() == [True, True, True, False, False, False]


def test_repair_rejects_degenerate():
    with pytest.raises(UnsplittableError):
        repair_connectivity(np.ones(3, bool), path_graph(3).adjacency)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_repair_properties(seed):
    rng = np.random.default_rng(seed)
    comp = random_connected(15, rng, extra=float(rng.uniform(0, 0.3)))
    in_w = rng.random(15) < 0.5
    if in_w.all() or not in_w.any():
        in_w[0] = not in_w[0]
    out = repair_connectivity(in_w, comp.adjacency)
    assert out.shape == in_w.shape
    assert 0 < out.sum() < 15
    assert is_connected_set(comp.adjacency, np.flatnonzero(out))
    assert is_connected_set(comp.adjacency, np.flatnonzero(~out))
    assert np.array_equal(repair_connectivity(out, comp.adjacency), out)


def test_repair_thousand_cases():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        comp = random_connected(15, rng, extra=0.1)
        in_w = rng.random(15) < 0.5
        in_w[0], in_w[1] = True, False
        out = repair_connectivity(in_w, comp.adjacency)
        assert is_connected_set(comp.adjacency, np.flatnonzero(out))
        assert is_connected_set(comp.adjacency, np.flatnonzero(~out))


def brute_force_min_ncut(comp) -> float:
    """Minimum Ncut over every bipartition with both sides connected."""
    n = comp.size
    best = float("inf")
    for mask in range(1, 2 ** (n - 1)):
        in_w = np.array([(mask >> i) & 1 for i in range(n)], bool)
        if not is_connected_set(comp.adjacency, np.flatnonzero(in_w)):
            continue
        if not is_connected_set(comp.adjacency, np.flatnonzero(~in_w)):
            continue
        best = min(best, ncut_direct(comp.adjacency, in_w))
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 11), st.integers(0, 2**32 - 1))
def test_tree_cut_bounded_by_brute_force(n, seed):
    comp = blob(n, np.random.default_rng(seed), size=8)
    trace = divide(comp, HmscConfig(min_component_size=1), force=True)
    assert trace.split
    assert trace.cut.ncut >= brute_force_min_ncut(comp) - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 50), st.integers(0, 2**32 - 1))
def test_eag_equivalence_on_pipeline(n, seed):
    comp = blob(n, np.random.default_rng(seed), size=14)
    trace = divide(comp, HmscConfig(min_component_size=1), force=True)
    tree, eag = trace.tree, trace.eag
    vertex = tree.node_vertex()
    for edge in tree.edges:
        side = tree_side(tree, edge)
        fast = ncut_of_edge(tree, eag, edge, side)
        direct = graph_cut(comp.adjacency, side[vertex])
        assert fast.cut == direct.cut
        assert (fast.vol_w, fast.vol_wc) == (direct.vol_w, direct.vol_wc)
        assert fast.ncut == direct.ncut or abs(fast.ncut - direct.ncut) <= 1e-12
    if trace.cut is not None:
        assert trace.cut.ncut == pytest.approx(ncut_direct(comp.adjacency, trace.cut.in_w), abs=1e-12)


def test_tree_side_partitions():
    tree = line_tree([0, 1, 2, 3, 4])
    for a, b in tree.edges:
        side = tree_side(tree, (a, b))
        assert side[a] and not side[b]
        assert side.tolist() == [i <= a for i in range(5)]
        flipped = tree_side(tree, (b, a))
        assert np.array_equal(flipped, ~side)
