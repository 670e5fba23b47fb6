"""Shared graph builders and pipeline checkers."""

from __future__ import annotations

import itertools
import threading

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse import csgraph

from hmsc.bpm import BoundaryMap
from hmsc.graph import Component, build_graph, connected_components, pieces


def blob_image(n: int, rng, size: int = 12) -> np.ndarray:
    """Image with a random 8-connected blob of ``n`` zero pixels on a 255 background."""
    img = np.full((size, size), 255, dtype=np.uint8)
    r = c = size // 2
    img[r, c] = 0
    cells = [(r, c)]
    seen = {(r, c)}
    while len(cells) < n:
        r, c = cells[rng.integers(len(cells))]
        dr, dc = rng.integers(-1, 2, 2)
        rr, cc = r + dr, c + dc
        if 0 <= rr < size and 0 <= cc < size and (rr, cc) not in seen:
            seen.add((rr, cc))
            cells.append((rr, cc))
            img[rr, cc] = 0
    return img


def blob(n: int, rng, size: int = 12) -> Component:
    return connected_components(build_graph(blob_image(n, rng, size)))[0]


def barbell(m: int) -> Component:
    """Two ``K_m`` cliques joined by one edge between nodes ``m - 1`` and ``m``."""
    edges = [(i, j) for i, j in itertools.combinations(range(m), 2)]
    edges += [(m + i, m + j) for i, j in itertools.combinations(range(m), 2)]
    edges.append((m - 1, m))
    return Component.from_edges(2 * m, edges)


def path_graph(n: int) -> Component:
    return Component.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Component:
    return Component.from_edges(n, list(itertools.combinations(range(n), 2)))


def random_connected(n: int, rng, extra: float = 0.2) -> Component:
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    edges = [(int(rng.integers(i)), i) for i in range(1, n)]
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < extra:
            edges.append((i, j))
    return Component.from_edges(n, edges)


def is_connected_set(adjacency, members) -> bool:
    return len(members) > 0 and len(pieces(adjacency, np.asarray(members))) == 1


def check_segmentation(bpm: BoundaryMap | np.ndarray, labels: np.ndarray, threshold: int = 60):
    """Assert the structural output contract of a segmentation of ``bpm``.

    Labels are canonical, cover exactly the sub-threshold pixels, each label
    is 8-connected, and the labeling refines the connected components.
    """
    values = np.asarray(getattr(bpm, "values", bpm))
    labels = np.asarray(labels)
    assert labels.shape == values.shape
    assert np.array_equal(labels > 0, values < threshold)
    used = np.unique(labels[labels > 0])
    assert np.array_equal(used, np.arange(1, len(used) + 1))
    g = build_graph(values, threshold)
    node_labels = labels[tuple(g.coords.T)]
    for lab in used:
        members = np.flatnonzero(node_labels == lab)
        assert is_connected_set(g.adjacency, members), f"label {lab} is disconnected"
    _, cc = csgraph.connected_components(g.adjacency, directed=False)
    for lab in used:
        assert len(np.unique(cc[node_labels == lab])) == 1, f"label {lab} spans components"


def check_trace(trace) -> None:
    """Conservation checks on every grid stage recorded in a divide trace."""
    n = trace.component.size
    for grid in (trace.grid, trace.grid_conn, trace.grid_skel, trace.tree and trace.tree.grid):
        if grid is None:
            continue
        grid.check(n)
        assert int(grid.densities().sum()) == n
        assert np.all(grid.occupied.flat[grid.node_cell])
    if trace.tree is not None:
        assert trace.tree.is_tree()
    if trace.cut is not None:
        in_w = trace.cut.in_w
        assert 0 < in_w.sum() < n
        assert is_connected_set(trace.component.adjacency, np.flatnonzero(in_w))
        assert is_connected_set(trace.component.adjacency, np.flatnonzero(~in_w))


def ncut_direct(adjacency, in_w) -> float:
    """Ncut of a bipartition with node-count volumes, from a dense edge scan."""
    a = sp.csr_matrix(adjacency).toarray()
    in_w = np.asarray(in_w, dtype=bool)
    cut = a[np.ix_(in_w, ~in_w)].sum()
    vw, vc = in_w.sum(), (~in_w).sum()
    if vw == 0 or vc == 0:
        return float("inf")
    return cut / vw + cut / vc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class PipelineRecorder:
    """Counts and checks every eigensolve and divide step made during the session."""

    def __init__(self):
        self.lock = threading.Lock()
        self.eigen_calls = 0
        self.worst_residual = 0.0
        self.divide_calls = 0
        self.checked_grids = 0


RECORDER = PipelineRecorder()


@pytest.fixture(scope="session", autouse=True)
def pipeline_invariants():
    """Wrap the pipeline entry points so every call in the suite is checked."""
    import hmsc.diffusion
    import hmsc.driver

    solve, step = hmsc.diffusion.smallest_eigenpairs, hmsc.driver.divide

    def checked_solve(component, m, **kwargs):
        pairs = solve(component, m, **kwargs)
        worst = float(pairs.residuals.max())
        assert worst <= 1e-8, f"eigen residual {worst:.3g}"
        with RECORDER.lock:
            RECORDER.eigen_calls += 1
            RECORDER.worst_residual = max(RECORDER.worst_residual, worst)
        return pairs

    def checked_divide(component, config, **kwargs):
        trace = step(component, config, **kwargs)
        check_trace(trace)
        grids = sum(g is not None for g in (trace.grid, trace.grid_conn, trace.grid_skel, trace.tree))
        with RECORDER.lock:
            RECORDER.divide_calls += 1
            RECORDER.checked_grids += grids
        return trace

    hmsc.diffusion.smallest_eigenpairs = checked_solve
    hmsc.driver.divide = checked_divide
    yield RECORDER
    hmsc.diffusion.smallest_eigenpairs = solve
    hmsc.driver.divide = step


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
