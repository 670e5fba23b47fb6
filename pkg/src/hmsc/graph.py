"""Unweighted pixel graphs over sub-threshold pixels."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


@dataclass(frozen=True)
class PixelGraph:
    """Graph whose nodes are pixels strictly below the threshold.

    Node ids follow row-major pixel order. ``coords[i]`` is the array index
    (``(row, col)`` in 2D) of node ``i`` and ``adjacency`` is a symmetric
    0/1 CSR matrix with sorted column indices.
    """

    shape: tuple
    coords: np.ndarray
    adjacency: sp.csr_matrix
    node_index: np.ndarray  # pixel -> node id, -1 for boundary pixels

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def component(self, nodes) -> "Component":
        nodes = np.asarray(nodes, dtype=np.int64)
        return Component.from_subgraph(self.adjacency, nodes)


@dataclass(frozen=True)
class Component:
    """A node subset of a pixel graph together with its induced adjacency.

    ``nodes`` holds global node ids in increasing order; ``adjacency`` is the
    induced subgraph indexed by position in ``nodes``.
    """

    nodes: np.ndarray
    adjacency: sp.csr_matrix

    @classmethod
    def from_subgraph(cls, adjacency, nodes):
        nodes = np.sort(np.asarray(nodes, dtype=np.int64))
        sub = sp.csr_matrix(adjacency[nodes][:, nodes])
        sub.sort_indices()
        return cls(nodes, sub)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Component":
        """Build a standalone component on nodes ``0..n-1``."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        a = sp.coo_matrix(
            (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
        )
        a = ((a + a.T) > 0).astype(np.float64).tocsr()
        a.sort_indices()
        return cls(np.arange(n, dtype=np.int64), a)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    def edge_list(self) -> np.ndarray:
        """Local ``(i, j)`` pairs with ``i < j``, in lexicographic order."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        pairs = np.column_stack([coo.row, coo.col]).astype(np.int64)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return pairs[order]

    def is_connected(self) -> bool:
        if self.size == 0:
            return False
        n, _ = csgraph.connected_components(self.adjacency, directed=False)
        return n == 1

    def subcomponent(self, local) -> "Component":
        """Induced component on local positions ``local``."""
        local = np.sort(np.asarray(local, dtype=np.int64))
        sub = sp.csr_matrix(self.adjacency[local][:, local])
        sub.sort_indices()
        return Component(self.nodes[local], sub)


def neighborhood_offsets(ndim: int) -> np.ndarray:
    """Half of the full (Chebyshev radius 1) neighborhood: 4 in 2D, 13 in 3D."""
    offsets = []
    for off in itertools.product((-1, 0, 1), repeat=ndim):
        if off > (0,) * ndim:
            offsets.append(off)
    return np.array(offsets, dtype=np.int64)


def build_graph(values, threshold: int = 60, connectivity: int = 8) -> PixelGraph:
    """Pixel graph of ``values < threshold`` with 8- (2D) or 26- (3D) adjacency.

    ``values`` may be a :class:`~hmsc.bpm.BoundaryMap` or a raw 2D/3D array.
    """
    values = np.asarray(getattr(values, "values", values))
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must lie in [0, 255]")
    expected = {8: 2, 26: 3}
    if connectivity not in expected:
        raise ValueError(f"connectivity must be 8 or 26, got {connectivity}")
    if values.ndim != expected[connectivity]:
        raise ValueError(
            f"{connectivity}-connectivity needs a {expected[connectivity]}D image, "
            f"got {values.ndim}D"
        )
    mask = values < threshold
    node_index = np.full(values.shape, -1, dtype=np.int64)
    coords = np.argwhere(mask)
    n = len(coords)
    node_index[mask] = np.arange(n)

    rows, cols = [], []
    shape = np.array(values.shape)
    for off in neighborhood_offsets(values.ndim):
        nb = coords + off
        ok = np.all((nb >= 0) & (nb < shape), axis=1)
        src = np.flatnonzero(ok)
        dst = node_index[tuple(nb[ok].T)]
        keep = dst >= 0
        rows.append(src[keep])
        cols.append(dst[keep])
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    a = sp.coo_matrix(
        (np.ones(2 * len(r)), (np.concatenate([r, c]), np.concatenate([c, r]))),
        shape=(n, n),
    ).tocsr()
    a.sort_indices()
    return PixelGraph(tuple(values.shape), coords, a, node_index)


def connected_components(g: PixelGraph) -> list[Component]:
    """Connected components ordered by their smallest node id."""
    if g.n_nodes == 0:
        return []
    lab = component_labels(g)
    order = np.argsort(lab, kind="stable")
    bounds = np.flatnonzero(np.diff(lab[order])) + 1
    return [g.component(nodes) for nodes in np.split(order, bounds)]


def component_labels(g: PixelGraph) -> np.ndarray:
    """Per-node component index, numbered by smallest contained node id."""
    if g.n_nodes == 0:
        return np.zeros(0, dtype=np.int64)
    _, lab = csgraph.connected_components(g.adjacency, directed=False)
    _, first, inverse = np.unique(lab, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inverse]


def pieces(adjacency, members) -> list[np.ndarray]:
    """Connected pieces of the subgraph induced by ``members`` (local ids).

    Pieces are returned as sorted arrays of the original indices, ordered by
    their smallest element.
    """
    members = np.sort(np.asarray(members, dtype=np.int64))
    if members.size == 0:
        return []
    sub = adjacency[members][:, members]
    _, lab = csgraph.connected_components(sub, directed=False)
    _, first, inverse = np.unique(lab, return_index=True, return_inverse=True)
    return [members[inverse == c] for c in np.argsort(first)]
