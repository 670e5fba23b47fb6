"""Normalized cuts along tree edges, evaluated through cell-to-cell edge counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import UnsplittableError
from .graph import Component, pieces
from .skeleton import TreeApprox


@dataclass(frozen=True)
class ExtendedAdjacencyGraph:
    """Weighted graph on tree vertices.

    ``weights[(a, b)]`` (``a < b``) counts the component edges with one
    endpoint housed in cell ``a`` and the other in cell ``b``. Pairs need
    not be adjacent in the tree.
    """

    n_vertices: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def weights(self) -> dict:
        return {(int(a), int(b)): int(c) for a, b, c in zip(self.u, self.v, self.w)}

    def weight(self, a: int, b: int) -> int:
        a, b = min(a, b), max(a, b)
        hit = np.flatnonzero((self.u == a) & (self.v == b))
        return int(self.w[hit[0]]) if hit.size else 0


@dataclass(frozen=True)
class CutValue:
    cut: int
    vol_w: int
    vol_wc: int
    ncut: float


@dataclass(frozen=True)
class CutResult:
    edge: tuple  # the removed tree edge as a pair of cells
    cell_side: np.ndarray  # bool per tree vertex, True on the side of edge[0]
    in_w: np.ndarray  # bool per local node after connectivity repair
    tree_value: CutValue  # value of the tree cut before repair
    value: CutValue  # value recomputed on the component after repair

    @property
    def w(self) -> np.ndarray:
        return np.flatnonzero(self.in_w)

    @property
    def wc(self) -> np.ndarray:
        return np.flatnonzero(~self.in_w)

    @property
    def ncut(self) -> float:
        return self.value.ncut


def ncut_value(cut, vol_w, vol_wc) -> float:
    if vol_w <= 0 or vol_wc <= 0:
        return math.inf
    return cut / vol_w + cut / vol_wc


def graph_cut(adjacency, in_w) -> CutValue:
    """Cut, volumes (node counts) and Ncut of a bipartition, directly on G."""
    in_w = np.asarray(in_w, dtype=bool)
    coo = sp.triu(sp.csr_matrix(adjacency), k=1).tocoo()
    cut = int(np.count_nonzero(in_w[coo.row] != in_w[coo.col]))
    vol_w = int(in_w.sum())
    vol_wc = len(in_w) - vol_w
    return CutValue(cut, vol_w, vol_wc, ncut_value(cut, vol_w, vol_wc))


def build_eag(tree: TreeApprox, component: Component) -> ExtendedAdjacencyGraph:
    vertex = tree.node_vertex()
    edges = component.edge_list()
    n = len(tree.cells)
    if len(edges) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return ExtendedAdjacencyGraph(n, empty, empty, empty)
    a = vertex[edges[:, 0]]
    b = vertex[edges[:, 1]]
    keep = a != b
    lo = np.minimum(a[keep], b[keep])
    hi = np.maximum(a[keep], b[keep])
    pairs, counts = np.unique(np.column_stack([lo, hi]), axis=0, return_counts=True)
    if len(pairs) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return ExtendedAdjacencyGraph(n, empty, empty, empty)
    return ExtendedAdjacencyGraph(n, pairs[:, 0], pairs[:, 1], counts.astype(np.int64))


def tree_side(tree: TreeApprox, edge) -> np.ndarray:
    """Vertices on the ``edge[0]`` side once ``edge`` is removed."""
    a, b = int(edge[0]), int(edge[1])
    parent, tin, tout = tree.euler
    if parent[b] == a:
        child, flip = b, True
    elif parent[a] == b:
        child, flip = a, False
    else:
        raise ValueError(f"{edge} is not an edge of the tree")
    below = (tin >= tin[child]) & (tin < tout[child])
    return ~below if flip else below


def ncut_of_edge(tree: TreeApprox, eag: ExtendedAdjacencyGraph, edge, side=None) -> CutValue:
    """Cut and Ncut obtained by removing one tree edge, summed over EAG weights."""
    if side is None:
        side = tree_side(tree, edge)
    crossing = side[eag.u] != side[eag.v]
    cut = int(eag.w[crossing].sum())
    dens = tree.density
    vol_w = int(dens[side].sum())
    vol_wc = int(dens[~side].sum())
    return CutValue(cut, vol_w, vol_wc, ncut_value(cut, vol_w, vol_wc))


def _edge_key(tree, edge):
    return tuple(sorted((tree.cells[edge[0]], tree.cells[edge[1]])))


def repair_connectivity(in_w, adjacency, max_iter: int = 10) -> np.ndarray:
    """Make both sides of a bipartition connected in G.

    Every side keeps its largest connected piece (ties go to the piece with
    the smallest node id); each other piece moves to whichever side it
    shares more edges with, the opposite side on ties. After ``max_iter``
    rounds without convergence, the largest piece of ``W`` is kept, the
    largest connected piece of its complement becomes ``W^C`` and all
    remaining nodes join ``W``.
    """
    in_w = np.array(in_w, dtype=bool)
    if in_w.all() or not in_w.any():
        raise UnsplittableError("degenerate partition: one side is empty")
    adjacency = sp.csr_matrix(adjacency)

    def largest(ps):
        return max(range(len(ps)), key=lambda k: (len(ps[k]), -k))

    for _ in range(max_iter):
        flips = []
        for side in (True, False):
            ps = pieces(adjacency, np.flatnonzero(in_w == side))
            if len(ps) <= 1:
                continue
            keep = largest(ps)
            for k, piece in enumerate(ps):
                if k == keep:
                    continue
                row = adjacency[piece]
                to_w = row[:, np.flatnonzero(in_w)].sum()
                to_wc = row.sum() - to_w
                own, other = (to_w, to_wc) if side else (to_wc, to_w)
                # internal edges of the piece count toward its own side
                own -= adjacency[piece][:, piece].sum()
                if other >= own:
                    flips.append(piece)
        if not flips:
            break
        for piece in flips:
            in_w[piece] = ~in_w[piece]
    else:
        ps = pieces(adjacency, np.flatnonzero(in_w))
        core = ps[largest(ps)]
        rest = pieces(adjacency, np.setdiff1d(np.arange(len(in_w)), core))
        in_w = np.ones(len(in_w), dtype=bool)
        in_w[rest[largest(rest)]] = False
    return in_w


def min_ncut_split(
    tree: TreeApprox,
    eag: ExtendedAdjacencyGraph,
    component: Component,
    balance: float = 0.1,
) -> CutResult:
    """Split a component along the tree edge of minimum normalized cut.

    Only edges leaving more than ``balance * n`` nodes on each side are
    considered, unless none qualifies, in which case all edges are. Ties go
    to the lexicographically smallest edge. The chosen node bipartition is
    repaired to connectivity and its Ncut recomputed on the component.
    """
    if len(tree.cells) < 2 or not tree.edges:
        raise UnsplittableError("tree has a single cell")
    n = component.size
    evaluated = []
    for edge in tree.edges:
        side = tree_side(tree, edge)
        value = ncut_of_edge(tree, eag, edge, side)
        evaluated.append((edge, side, value))
    finite = [e for e in evaluated if math.isfinite(e[2].ncut)]
    if not finite:
        raise UnsplittableError("every tree cut leaves one side without nodes")
    feasible = [e for e in finite if min(e[2].vol_w, e[2].vol_wc) > balance * n]
    pool = feasible or finite
    edge, side, value = min(pool, key=lambda e: (e[2].ncut, _edge_key(tree, e[0])))

    vertex = tree.node_vertex()
    in_w = side[vertex]
    in_w = repair_connectivity(in_w, component.adjacency)
    final = graph_cut(component.adjacency, in_w)
    return CutResult(
        (tree.cells[edge[0]], tree.cells[edge[1]]), side, in_w, value, final
    )
