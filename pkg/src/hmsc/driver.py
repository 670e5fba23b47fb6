"""Divide-and-conquer segmentation driver."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bpm import BoundaryMap, Segmentation, canonical_labels, canonicalize
from .coarse import CoarseGrid, coarsen, reconstruct
from .diffusion import CONVENTIONS, DiffusionMap, embed
from .exceptions import HmscError, UnsplittableError
from .graph import Component, PixelGraph, build_graph, connected_components
from .ncut import CutResult, ExtendedAdjacencyGraph, build_eag, min_ncut_split
from .skeleton import TreeApprox, break_cycles, skeletonize

log = logging.getLogger("hmsc")


@dataclass(frozen=True)
class HmscConfig:
    threshold: int = 60
    connectivity: int = 8
    d: int = 3
    t: float = 1
    spectrum_convention: str = "paper"
    grid: int = 25
    std_threshold: float = 10.0
    balance: float = 0.1
    walk_steps: int = 10
    min_component_size: int = 10
    max_depth: int = 64
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError("threshold must lie in [0, 255]")
        if self.connectivity not in (8, 26):
            raise ValueError("connectivity must be 8 or 26")
        if self.d != 3:
            raise ValueError("the coarse grid is three-dimensional; d must be 3")
        if self.t <= 0:
            raise ValueError("t must be positive")
        if self.spectrum_convention not in CONVENTIONS:
            raise ValueError(f"spectrum_convention must be one of {CONVENTIONS}")
        if self.grid < 2:
            raise ValueError("grid resolution must be >= 2")
        if self.std_threshold < 0:
            raise ValueError("std_threshold must be non-negative")
        if not 0 <= self.balance < 0.5:
            raise ValueError("balance must lie in [0, 0.5)")
        if self.walk_steps < 0:
            raise ValueError("walk_steps must be non-negative")
        if self.min_component_size < 1:
            raise ValueError("min_component_size must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def density_std(grid: CoarseGrid) -> float:
    """Population standard deviation of the occupied-cell densities."""
    dens = grid.densities()
    if dens.size == 0:
        raise ValueError("grid has no occupied cells")
    return float(np.std(dens))


def should_split(grid: CoarseGrid, config: HmscConfig) -> bool:
    return density_std(grid) > config.std_threshold


def sub_seed(seed: int, smallest_node: int) -> int:
    return int(np.random.SeedSequence([seed, smallest_node]).generate_state(1)[0])


@dataclass
class SplitTrace:
    """Every intermediate of one divide step, for inspection and testing."""

    component: Component
    dmap: DiffusionMap | None = None
    grid: CoarseGrid | None = None
    std: float | None = None
    grid_conn: CoarseGrid | None = None
    grid_skel: CoarseGrid | None = None
    tree: TreeApprox | None = None
    eag: ExtendedAdjacencyGraph | None = None
    cut: CutResult | None = None
    reason: str = ""

    @property
    def split(self) -> bool:
        return self.cut is not None


def divide(component: Component, config: HmscConfig, *, force: bool = False) -> SplitTrace:
    """Run one divide step on a connected component.

    Returns a trace whose ``cut`` is set when the component was split. With
    ``force`` the stopping criterion is skipped (the size guard still
    applies).
    """
    trace = SplitTrace(component)
    n = component.size
    if n < config.min_component_size or n < config.d + 2:
        trace.reason = "too small"
        return trace
    seed = sub_seed(config.seed, int(component.nodes[0]))
    trace.dmap = embed(component, config.d, config.t, config.spectrum_convention, seed=seed)
    trace.grid = coarsen(trace.dmap, config.grid)
    trace.grid.check(n)
    trace.std = density_std(trace.grid)
    if not force and trace.std <= config.std_threshold:
        trace.reason = "density std below threshold"
        return trace
    trace.grid_conn = reconstruct(trace.grid, component)
    trace.grid_conn.check(n)
    trace.grid_skel = skeletonize(trace.grid_conn)
    trace.grid_skel.check(n)
    trace.tree = break_cycles(trace.grid_skel, config.walk_steps)
    trace.tree.grid.check(n)
    trace.eag = build_eag(trace.tree, component)
    try:
        trace.cut = min_ncut_split(trace.tree, trace.eag, component, config.balance)
    except UnsplittableError as exc:
        trace.reason = f"unsplittable: {exc}"
    return trace


@dataclass
class _Task:
    component: Component
    depth: int = 0


@dataclass
class HmscResult:
    labels: np.ndarray  # canonical, same shape as the input image
    segments: list = field(default_factory=list)  # global node-id arrays
    n_splits: int = 0

    @property
    def segmentation(self) -> Segmentation:
        return Segmentation(self.labels)


def _process(task: _Task, config: HmscConfig):
    comp = task.component
    if task.depth >= config.max_depth:
        log.warning(
            "max depth %d reached on a component of %d nodes; accepting it",
            config.max_depth, comp.size,
        )
        return None
    try:
        trace = divide(comp, config)
    except HmscError as exc:
        raise type(exc)(
            f"{exc} (component of {comp.size} nodes starting at node {int(comp.nodes[0])})"
        ) from exc
    if not trace.split:
        return None
    cut = trace.cut
    left = comp.subcomponent(cut.w)
    right = comp.subcomponent(cut.wc)
    log.info(
        "split size=%d depth=%d std=%.4f ncut=%.6f children=%d,%d",
        comp.size, task.depth, trace.std, cut.ncut, left.size, right.size,
    )
    return _Task(left, task.depth + 1), _Task(right, task.depth + 1)


def segment_graph(graph: PixelGraph, config: HmscConfig) -> HmscResult:
    pending = [_Task(c) for c in connected_components(graph)]
    done = []
    n_splits = 0
    executor = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        while pending:
            if executor is None:
                outcomes = [_process(t, config) for t in pending]
            else:
                outcomes = list(executor.map(lambda t: _process(t, config), pending))
            nxt = []
            for task, outcome in zip(pending, outcomes):
                if outcome is None:
                    done.append(task.component.nodes)
                else:
                    n_splits += 1
                    nxt.extend(outcome)
            pending = nxt
    finally:
        if executor is not None:
            executor.shutdown()
    done.sort(key=lambda nodes: int(nodes[0]))
    labels = np.zeros(graph.shape, dtype=np.uint32)
    for lab, nodes in enumerate(done, start=1):
        labels[tuple(graph.coords[nodes].T)] = lab
    return HmscResult(canonical_labels(labels), done, n_splits)


def segment(bpm: BoundaryMap, config: HmscConfig | None = None) -> Segmentation:
    """Segment a boundary map by recursive minimum-Ncut splitting."""
    config = config or HmscConfig()
    graph = build_graph(bpm, config.threshold, config.connectivity)
    return segment_graph(graph, config).segmentation


def connected_component_segmentation(bpm: BoundaryMap, threshold: int = 60,
                                     connectivity: int = 8) -> Segmentation:
    """Threshold the map and label each connected component."""
    graph = build_graph(bpm, threshold, connectivity)
    labels = np.zeros(graph.shape, dtype=np.uint32)
    for lab, comp in enumerate(connected_components(graph), start=1):
        labels[tuple(graph.coords[comp.nodes].T)] = lab
    return canonicalize(labels)
