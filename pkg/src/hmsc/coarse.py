"""Voxelization of a 3D diffusion map and curve reconstruction.

A :class:`CoarseGrid` stores the occupied cells of an ``r x r x r`` volume,
the per-cell node counts (densities) and, for every node of the component,
the flat index of the cell that currently houses it. The cell -> node-set
mapping is therefore always a partition of the component by construction;
deleting a cell means re-homing its nodes into a surviving cell.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .diffusion import DiffusionMap
from .exceptions import InvariantError
from .graph import Component

STAGES = ("M", "M_conn", "M_skel", "M_tree")
FULL_26 = np.ones((3, 3, 3), dtype=bool)


@dataclass
class CoarseGrid:
    resolution: int
    occupied: np.ndarray  # bool (r, r, r)
    density: np.ndarray  # int64 (r, r, r); zero on cells housing no node
    node_cell: np.ndarray  # flat cell index per local node
    stage: str = "M"

    def copy(self, stage=None) -> "CoarseGrid":
        return CoarseGrid(
            self.resolution,
            self.occupied.copy(),
            self.density.copy(),
            self.node_cell.copy(),
            stage or self.stage,
        )

    @property
    def n_nodes(self) -> int:
        return len(self.node_cell)

    def cells(self) -> list[tuple[int, int, int]]:
        """Occupied cells in lexicographic order."""
        return [tuple(int(v) for v in c) for c in np.argwhere(self.occupied)]

    def flat(self, cell) -> int:
        return int(np.ravel_multi_index(tuple(cell), self.occupied.shape))

    def unflat(self, index) -> tuple[int, int, int]:
        return tuple(int(v) for v in np.unravel_index(index, self.occupied.shape))

    def members(self, cell) -> np.ndarray:
        """Local node ids housed by ``cell`` (the set S of that cell)."""
        return np.flatnonzero(self.node_cell == self.flat(cell))

    def node_cells(self) -> np.ndarray:
        """``(n, 3)`` cell coordinates of every node."""
        return np.column_stack(np.unravel_index(self.node_cell, self.occupied.shape))

    def densities(self) -> np.ndarray:
        """Densities of the occupied cells, in lexicographic cell order."""
        return self.density[self.occupied]

    def absorb(self, cell, into) -> None:
        """Delete ``cell`` and move its nodes into the surviving cell ``into``."""
        src, dst = self.flat(cell), self.flat(into)
        if not self.occupied.flat[dst]:
            raise InvariantError(f"cannot merge into unoccupied cell {into}")
        self.occupied.flat[src] = False
        if self.density.flat[src]:
            self.node_cell[self.node_cell == src] = dst
            self.density.flat[dst] += self.density.flat[src]
            self.density.flat[src] = 0

    def n_components(self) -> int:
        _, n = ndimage.label(self.occupied, structure=FULL_26)
        return n

    def check(self, n_nodes=None) -> None:
        """Raise :class:`InvariantError` if the bookkeeping is inconsistent."""
        n = self.n_nodes if n_nodes is None else n_nodes
        if len(self.node_cell) != n:
            raise InvariantError(f"grid houses {len(self.node_cell)} nodes, expected {n}")
        if not np.all(self.occupied.flat[self.node_cell]):
            raise InvariantError("a node is housed by an unoccupied cell")
        counts = np.bincount(self.node_cell, minlength=self.occupied.size)
        if not np.array_equal(counts, self.density.ravel()):
            raise InvariantError("densities differ from per-cell node counts")
        if int(self.density.sum()) != n:
            raise InvariantError(f"total density {int(self.density.sum())} != {n}")
        if self.stage != "M" and self.n_components() != 1:
            raise InvariantError(f"stage {self.stage} grid is not 26-connected")


def cell_indices(points, resolution: int = 25) -> np.ndarray:
    """Per-axis affine binning of ``points`` into ``[0, resolution - 1]``."""
    points = np.asarray(points, dtype=np.float64)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    idx = np.zeros(points.shape, dtype=np.int64)
    live = span > 0
    if np.any(live):
        scaled = (points[:, live] - lo[live]) / span[live] * resolution
        idx[:, live] = np.minimum(np.floor(scaled).astype(np.int64), resolution - 1)
    return idx


def coarsen(dmap: DiffusionMap | np.ndarray, resolution: int = 25) -> CoarseGrid:
    """Embed a 3D diffusion map into a ``resolution**3`` grid (stage M)."""
    points = np.asarray(getattr(dmap, "points", dmap))
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"coarsening needs 3D points, got shape {points.shape}")
    if len(points) == 0:
        raise ValueError("cannot coarsen an empty diffusion map")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    idx = cell_indices(points, resolution)
    shape = (resolution,) * 3
    node_cell = np.ravel_multi_index(tuple(idx.T), shape).astype(np.int64)
    density = np.bincount(node_cell, minlength=resolution**3).reshape(shape).astype(np.int64)
    return CoarseGrid(resolution, density > 0, density, node_cell, "M")


def bresenham3(p, q) -> list[tuple[int, int, int]]:
    """Integer 3D Bresenham line from cell ``p`` to cell ``q`` inclusive.

    The axis with the largest extent drives the walk; each other axis steps
    once its doubled error term becomes non-negative.
    """
    p = [int(v) for v in p]
    q = [int(v) for v in q]
    delta = [abs(b - a) for a, b in zip(p, q)]
    step = [1 if b >= a else -1 for a, b in zip(p, q)]
    drive = int(np.argmax(delta))
    n = delta[drive]
    cur = list(p)
    err = [2 * delta[a] - n for a in range(3)]
    out = [tuple(cur)]
    for _ in range(n):
        for a in range(3):
            if a == drive:
                continue
            if err[a] >= 0:
                cur[a] += step[a]
                err[a] -= 2 * n
            err[a] += 2 * delta[a]
        cur[drive] += step[drive]
        out.append(tuple(cur))
    return out


def reconstruct(grid: CoarseGrid, component: Component) -> CoarseGrid:
    """Bridge disconnected parts of the grid along edges of the component.

    Repeatedly takes the lexicographically smallest component edge whose
    endpoint cells lie in different 26-connected parts of the grid and
    rasterizes the line between those cells. Returns a new grid at stage
    ``M_conn``; node housing is unchanged and line cells carry no nodes.
    """
    out = grid.copy(stage="M_conn")
    edges = component.edge_list()
    shape = out.occupied.shape
    while True:
        labels, n = ndimage.label(out.occupied, structure=FULL_26)
        if n <= 1:
            break
        part = labels.ravel()[out.node_cell]
        crossing = np.flatnonzero(part[edges[:, 0]] != part[edges[:, 1]]) if len(edges) else []
        if len(crossing) == 0:
            raise InvariantError(
                f"grid has {n} disconnected parts but no component edge bridges them"
            )
        i, j = edges[crossing[0]]
        a = np.unravel_index(out.node_cell[i], shape)
        b = np.unravel_index(out.node_cell[j], shape)
        for cell in bresenham3(a, b):
            out.occupied[cell] = True
    return out


def dump_csv(grid: CoarseGrid, path=None) -> str:
    """Write ``x,y,z,density,stage`` rows for the occupied cells."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "z", "density", "stage"])
    for cell in grid.cells():
        writer.writerow([*cell, int(grid.density[cell]), grid.stage])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
