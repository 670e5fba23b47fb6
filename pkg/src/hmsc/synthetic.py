"""Synthetic boundary maps with known ground truth.

Regions are axis-aligned rectangles on a ``rows x cols`` grid separated by
one-pixel boundary lines. Boundary errors are square gaps punched into those
lines, each of which merges the two regions on either side once the map is
thresholded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bpm import BoundaryMap, Segmentation


@dataclass(frozen=True)
class SynthSpec:
    width: int = 200
    height: int = 200
    regions: int = 3
    errors: int = 5
    gap_width: int = 3
    boundary_value: int = 255
    interior_value: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        if self.regions < 1:
            raise ValueError("regions must be >= 1")
        if self.errors < 0:
            raise ValueError("errors must be >= 0")
        if self.gap_width < 1:
            raise ValueError("gap_width must be >= 1")
        for name in ("boundary_value", "interior_value"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValueError(f"{name} must lie in [0, 255]")


def grid_shape(regions: int) -> tuple[int, int]:
    """Most square ``(rows, cols)`` factorization with ``rows <= cols``."""
    rows = int(math.isqrt(regions))
    while regions % rows:
        rows -= 1
    return rows, regions // rows


def _split(extent: int, parts: int):
    """Positions of ``parts - 1`` separator lines dividing ``extent`` pixels."""
    interior = extent - (parts - 1)
    sizes = [interior // parts + (1 if i < interior % parts else 0) for i in range(parts)]
    lines = []
    pos = 0
    for size in sizes[:-1]:
        pos += size
        lines.append(pos)
        pos += 1
    return lines, sizes


def _layout(spec: SynthSpec):
    rows, cols = grid_shape(spec.regions)
    # put the longer grid axis along the longer image axis
    if spec.height > spec.width:
        rows, cols = cols, rows
    if spec.height < 3 * rows + rows - 1 or spec.width < 3 * cols + cols - 1:
        raise ValueError(
            f"{spec.regions} regions do not fit a {spec.width}x{spec.height} image "
            f"(each region needs at least 3x3 interior pixels)"
        )
    row_lines, _ = _split(spec.height, rows)
    col_lines, _ = _split(spec.width, cols)
    return row_lines, col_lines


def gap_sites(spec: SynthSpec, row_lines, col_lines) -> np.ndarray:
    """Sample gap centers on separator pixels, excluding line crossings.

    Returns an ``(errors, 2)`` array of ``(row, col)`` pixel positions.
    """
    h, w = spec.height, spec.width
    on_line = np.zeros((h, w), dtype=bool)
    on_line[row_lines, :] = True
    on_line[:, col_lines] = True
    crossing = np.zeros((h, w), dtype=bool)
    if row_lines and col_lines:
        crossing[np.ix_(row_lines, col_lines)] = True
    candidates = np.argwhere(on_line & ~crossing)
    if spec.errors > len(candidates):
        raise ValueError(f"cannot place {spec.errors} gaps on {len(candidates)} boundary pixels")
    if spec.errors == 0:
        return np.zeros((0, 2), dtype=np.int64)
    rng = np.random.default_rng(spec.seed)
    pick = rng.choice(len(candidates), size=spec.errors, replace=False)
    return candidates[np.sort(pick)]


def generate_synthetic(spec: SynthSpec) -> tuple[BoundaryMap, Segmentation]:
    """Build a boundary map and its ground-truth segmentation."""
    row_lines, col_lines = _layout(spec)
    h, w = spec.height, spec.width

    values = np.full((h, w), spec.interior_value, dtype=np.uint8)
    values[row_lines, :] = spec.boundary_value
    values[:, col_lines] = spec.boundary_value

    # separator pixels, including punched gaps, belong to no region
    truth = np.zeros((h, w), dtype=np.uint32)
    row_edges = [0] + [r + 1 for r in row_lines] + [h + 1]
    col_edges = [0] + [c + 1 for c in col_lines] + [w + 1]
    label = 1
    for r0, r1 in zip(row_edges[:-1], row_edges[1:]):
        for c0, c1 in zip(col_edges[:-1], col_edges[1:]):
            truth[r0 : r1 - 1, c0 : c1 - 1] = label
            label += 1

    lo = (spec.gap_width - 1) // 2
    hi = spec.gap_width - lo
    for r, c in gap_sites(spec, row_lines, col_lines):
        values[max(r - lo, 0) : r + hi, max(c - lo, 0) : c + hi] = spec.interior_value
    return BoundaryMap(values), Segmentation(truth)
