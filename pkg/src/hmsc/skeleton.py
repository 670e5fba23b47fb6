"""Topology-preserving thinning and cycle breaking on coarse grids."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .coarse import CoarseGrid
from .exceptions import InvariantError

# 3x3x3 neighborhood positions, flattened in C order; 13 is the center
_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=3)))
_CENTER = 13
_POWERS = np.array([1 << i for i in range(27)], dtype=np.int64)


def _adjacency_masks(max_cheb, max_manhattan):
    masks = []
    for i in range(27):
        m = 0
        for j in range(27):
            if i == j or j == _CENTER:
                continue
            diff = np.abs(_OFFSETS[i] - _OFFSETS[j])
            if diff.max() <= max_cheb and diff.sum() <= max_manhattan:
                m |= 1 << j
        masks.append(m)
    return masks


_ADJ26 = _adjacency_masks(1, 3)
_ADJ6 = _adjacency_masks(1, 1)
_N18 = sum(1 << i for i in range(27) if i != _CENTER and np.abs(_OFFSETS[i]).sum() <= 2)
_N6 = sum(1 << i for i in range(27) if np.abs(_OFFSETS[i]).sum() == 1)
_ALL = ((1 << 27) - 1) & ~(1 << _CENTER)

DIRECTIONS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def _components(mask, adj, touching=None) -> int:
    """Number of components of ``mask`` under ``adj`` (optionally only those
    intersecting ``touching``)."""
    count = 0
    remaining = mask
    while remaining:
        low = remaining & -remaining
        comp = frontier = low
        while frontier:
            bit = frontier & -frontier
            frontier ^= bit
            new = adj[bit.bit_length() - 1] & remaining & ~comp
            comp |= new
            frontier |= new
        remaining &= ~comp
        if touching is None or comp & touching:
            count += 1
    return count


@functools.lru_cache(maxsize=1 << 16)
def is_simple(neighborhood: int) -> bool:
    """Whether the center of a 3x3x3 pattern is a simple point.

    ``neighborhood`` has bit ``i`` set when position ``i`` is object. The
    object uses 26-connectivity and the background 6-connectivity: the
    center is simple when the object neighbors form exactly one
    26-component and the background within the 18-neighborhood has exactly
    one 6-component adjacent to the center.
    """
    obj = neighborhood & _ALL
    if _components(obj, _ADJ26) != 1:
        return False
    bg = _N18 & ~obj
    return _components(bg, _ADJ6, touching=_N6) == 1


def neighborhood_code(padded: np.ndarray, cell) -> int:
    """Bit pattern of the 3x3x3 block around ``cell`` in a 1-padded volume."""
    x, y, z = cell
    block = padded[x : x + 3, y : y + 3, z : z + 3].ravel()
    return int(_POWERS[block].sum())


def nearest_surviving(occupied: np.ndarray, cell) -> tuple[int, int, int]:
    """Closest occupied cell to ``cell`` (Euclidean; ties -> lexicographic)."""
    occ = np.argwhere(occupied)
    if len(occ) == 0:
        raise InvariantError("no surviving cell to merge into")
    d2 = ((occ - np.asarray(cell)) ** 2).sum(axis=1)
    best = np.flatnonzero(d2 == d2.min())
    # argwhere is already lexicographic
    return tuple(int(v) for v in occ[best[0]])


def _nearest_in_block(padded, cell):
    x, y, z = cell
    block = padded[x : x + 3, y : y + 3, z : z + 3].copy()
    block[1, 1, 1] = False
    occ = np.argwhere(block)
    if len(occ) == 0:
        return None
    d2 = ((occ - 1) ** 2).sum(axis=1)
    best = occ[np.flatnonzero(d2 == d2.min())[0]]
    return (x + int(best[0]) - 1, y + int(best[1]) - 1, z + int(best[2]) - 1)


def skeletonize(grid: CoarseGrid) -> CoarseGrid:
    """Thin a connected grid down to a curve skeleton (stage ``M_skel``).

    Passes sweep the six axis directions; in each sub-iteration the border
    cells facing that direction are visited in lexicographic order and
    deleted when they are simple and not curve endpoints (fewer than two
    object neighbors). Simplicity is re-checked against the current volume
    before each deletion, so topology is preserved. Nodes of a deleted cell
    move to the nearest surviving cell.
    """
    out = grid.copy(stage="M_skel")
    padded = np.pad(out.occupied, 1)
    changed = True
    while changed:
        changed = False
        for dx, dy, dz in DIRECTIONS:
            core = padded[1:-1, 1:-1, 1:-1]
            ahead = padded[1 + dx : padded.shape[0] - 1 + dx,
                           1 + dy : padded.shape[1] - 1 + dy,
                           1 + dz : padded.shape[2] - 1 + dz]
            border = np.argwhere(core & ~ahead)
            for cell in map(tuple, border):
                code = neighborhood_code(padded, cell)
                if bin(code & _ALL).count("1") < 2:
                    continue
                if not is_simple(code):
                    continue
                padded[cell[0] + 1, cell[1] + 1, cell[2] + 1] = False
                near = _nearest_in_block(padded, cell)
                out.absorb(cell, near)
                changed = True
    return out


@dataclass
class TreeApprox:
    """Tree over the surviving cells of a thinned, cycle-free grid.

    The grid must not be modified once the tree is built; per-vertex
    densities and the node -> vertex map are cached.
    """

    cells: list  # lexicographically sorted cell tuples
    edges: list  # (i, j) index pairs into ``cells`` with i < j, sorted
    grid: CoarseGrid

    @functools.cached_property
    def density(self) -> np.ndarray:
        return np.array([self.grid.density[c] for c in self.cells], dtype=np.int64)

    @functools.cached_property
    def _vertex_of_node(self) -> np.ndarray:
        flat = np.array([self.grid.flat(c) for c in self.cells], dtype=np.int64)
        lookup = np.full(self.grid.occupied.size, -1, dtype=np.int64)
        lookup[flat] = np.arange(len(flat))
        return lookup[self.grid.node_cell]

    def node_vertex(self) -> np.ndarray:
        """Tree-vertex index housing each local node."""
        return self._vertex_of_node

    @functools.cached_property
    def euler(self):
        """``(parent, tin, tout)`` of a DFS rooted at vertex 0."""
        n = len(self.cells)
        nbrs = [[] for _ in range(n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        parent = np.full(n, -1, dtype=np.int64)
        tin = np.zeros(n, dtype=np.int64)
        tout = np.zeros(n, dtype=np.int64)
        clock = 0
        seen = np.zeros(n, dtype=bool)
        stack = [(0, iter(nbrs[0]))] if n else []
        if n:
            seen[0] = True
            tin[0] = clock
            clock += 1
        while stack:
            v, it = stack[-1]
            for u in it:
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    tin[u] = clock
                    clock += 1
                    stack.append((u, iter(nbrs[u])))
                    break
            else:
                tout[v] = clock
                stack.pop()
        return parent, tin, tout

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.cells)))
        g.add_edges_from(self.edges)
        return g

    def is_tree(self) -> bool:
        return len(self.cells) >= 1 and nx.is_tree(self.graph())


def cell_graph(occupied: np.ndarray) -> nx.Graph:
    """26-adjacency graph over the occupied cells (nodes are cell tuples)."""
    g = nx.Graph()
    cells = [tuple(int(v) for v in c) for c in np.argwhere(occupied)]
    g.add_nodes_from(cells)
    cellset = set(cells)
    half = [o for o in itertools.product((-1, 0, 1), repeat=3) if o > (0, 0, 0)]
    for c in cells:
        for o in half:
            nb = (c[0] + o[0], c[1] + o[1], c[2] + o[2])
            if nb in cellset:
                g.add_edge(c, nb)
    return g


def random_walk_scores(g: nx.Graph, density, steps: int = 10) -> dict:
    """Distribution after ``steps`` of a uniform random walk started from
    the normalized densities.

    ``density`` maps each node of ``g`` to its weight. Isolated nodes carry
    a self-loop.
    """
    nodes = sorted(g.nodes)
    if not nodes:
        return {}
    index = {c: i for i, c in enumerate(nodes)}
    p = np.array([float(density[c]) for c in nodes])
    total = p.sum()
    if total <= 0:
        raise ValueError("random walk needs at least one cell with positive density")
    p /= total
    n = len(nodes)
    src, dst, w = [], [], []
    for c in nodes:
        nbrs = list(g.neighbors(c))
        i = index[c]
        if not nbrs:
            src.append(i), dst.append(i), w.append(1.0)
            continue
        for nb in nbrs:
            src.append(i), dst.append(index[nb]), w.append(1.0 / len(nbrs))
    src, dst, w = np.array(src), np.array(dst), np.array(w)
    for _ in range(steps):
        # p_{t+1} = P^T p_t
        p = np.bincount(dst, weights=p[src] * w, minlength=n)
    return {c: float(p[index[c]]) for c in nodes}


def _score_key(score: float, cell):
    return (round(score, 14), cell)


def break_cycles(grid: CoarseGrid, steps: int = 10) -> TreeApprox:
    """Remove cycle cells until the cell graph is a tree (stage ``M_tree``).

    Each round scores all cells with :func:`random_walk_scores` and deletes
    the lowest-scoring cell that lies on a cycle and is not a cut vertex,
    merging its nodes into the nearest surviving cell. If every cycle cell
    is a cut vertex, the lowest-scoring cycle edge is dropped instead.
    """
    out = grid.copy(stage="M_tree")
    g = cell_graph(out.occupied)
    if g.number_of_nodes() and not nx.is_connected(g):
        raise InvariantError("cycle breaking needs a connected skeleton")
    while g.number_of_edges() > g.number_of_nodes() - 1:
        # blocks with more than one edge are exactly the union of all cycles
        blocks = list(nx.biconnected_component_edges(g))
        cyclic = [tuple(sorted(e)) for b in blocks if len(b) > 1 for e in b]
        candidates = sorted({c for e in cyclic for c in e})
        block_count = {}
        for b in blocks:
            for c in {c for e in b for c in e}:
                block_count[c] = block_count.get(c, 0) + 1
        scores = random_walk_scores(g, {c: out.density[c] for c in g.nodes}, steps)
        ranked = sorted(candidates, key=lambda c: _score_key(scores[c], c))
        # cut vertices are exactly the vertices shared by several blocks
        victim = next((c for c in ranked if block_count[c] == 1), None)
        if victim is not None:
            g.remove_node(victim)
            out.absorb(victim, nearest_surviving(_without(out.occupied, victim), victim))
            continue
        u, v = min(cyclic, key=lambda e: (round(scores[e[0]] + scores[e[1]], 14), e))
        g.remove_edge(u, v)
    cells = sorted(g.nodes)
    index = {c: i for i, c in enumerate(cells)}
    edges = sorted(tuple(sorted((index[a], index[b]))) for a, b in g.edges)
    return TreeApprox(cells, edges, out)


def _without(occupied, cell):
    occ = occupied.copy()
    occ[cell] = False
    return occ
