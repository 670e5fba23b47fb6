"""Plain spectral clustering per connected component.

Each component is embedded into ``k - 1`` diffusion dimensions and then
clustered with Lloyd's k-means, seeded by a preliminary run on a random
10% subsample. Clusters produced this way may be disconnected in the pixel
graph; :func:`split_disconnected` breaks them into connected pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bpm import BoundaryMap, Segmentation, canonical_labels
from .diffusion import embed
from .graph import Component, build_graph, connected_components, pieces

MAX_ITER = 300
SUBSAMPLE_FRACTION = 0.1


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray  # cluster index in 1..k per point
    centroids: np.ndarray  # (k, d)
    inertia: float
    n_iter: int
    inertia_history: tuple = ()


def choose_k(n: int) -> int:
    """floor(sqrt(n) / 2) + 1."""
    if n < 1:
        raise ValueError("component size must be >= 1")
    return int(math.floor(math.sqrt(n) / 2)) + 1


def _assign(points, centroids):
    d2 = (
        (points**2).sum(axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + (centroids**2).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return np.argmin(d2, axis=1), d2


def _lloyd(points, centroids, max_iter):
    k = len(centroids)
    centroids = centroids.copy()
    labels = None
    history = []
    for it in range(1, max_iter + 1):
        new, d2 = _assign(points, centroids)
        # reseed empty clusters at the point farthest from its centroid
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            dist = d2[np.arange(len(points)), new]
            far = int(np.argmax(dist))
            centroids[c] = points[far]
            new, d2 = _assign(points, centroids)
            counts = np.bincount(new, minlength=k)
        history.append(float(d2[np.arange(len(points)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    inertia = float(((points - centroids[labels]) ** 2).sum())
    return labels, centroids, inertia, it, tuple(history)


def kmeans(points, k: int, seed: int = 0, max_iter: int = MAX_ITER) -> KMeansResult:
    """Lloyd's k-means seeded from a preliminary run on a 10% subsample.

    The subsample has ``max(k, ceil(0.1 n))`` points drawn without
    replacement; its own run starts from ``k`` of those points chosen at
    random. Iteration stops when assignments no longer change.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = len(points)
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    m = max(k, math.ceil(SUBSAMPLE_FRACTION * n))
    sub = points[np.sort(rng.choice(n, size=m, replace=False))]
    init = sub[np.sort(rng.choice(m, size=k, replace=False))]
    _, seeds, _, _, _ = _lloyd(sub, init, max_iter)
    labels, centroids, inertia, n_iter, history = _lloyd(points, seeds, max_iter)
    return KMeansResult(labels + 1, centroids, inertia, n_iter, history)


def spectral_cluster(
    component: Component, k: int, seed: int = 0, convention: str = "paper", t: float = 1
) -> np.ndarray:
    """Cluster labels in ``1..k`` for each node of ``component``."""
    if k == 1:
        return np.ones(component.size, dtype=np.int64)
    if component.size < k + 1:
        raise ValueError(f"component of {component.size} nodes cannot hold {k} clusters")
    dmap = embed(component, k - 1, t, convention, seed=seed)
    return kmeans(dmap.points, k, seed).assignments


def disconnected_clusters(labels, component: Component) -> list[int]:
    """Cluster labels whose node set is disconnected in the component."""
    labels = np.asarray(labels)
    bad = []
    for lab in np.unique(labels):
        if len(pieces(component.adjacency, np.flatnonzero(labels == lab))) > 1:
            bad.append(int(lab))
    return bad


def split_disconnected(labels, component: Component) -> np.ndarray:
    """Give every connected piece of every cluster its own label.

    Output labels are ``1..L`` numbered by each piece's smallest node.
    """
    labels = np.asarray(labels)
    all_pieces = []
    for lab in np.unique(labels):
        all_pieces.extend(pieces(component.adjacency, np.flatnonzero(labels == lab)))
    all_pieces.sort(key=lambda p: int(p[0]))
    out = np.zeros(len(labels), dtype=np.int64)
    for new, piece in enumerate(all_pieces, start=1):
        out[piece] = new
    return out


@dataclass
class BaselineResult:
    segmentation: Segmentation
    disconnected: int  # clusters found disconnected before any repair


def segment_baseline(
    bpm: BoundaryMap,
    threshold: int = 60,
    seed: int = 0,
    split: bool = False,
    k: int | None = None,
    convention: str = "paper",
    t: float = 1,
) -> BaselineResult:
    """Spectral clustering of every connected component of the thresholded map.

    ``k`` fixes the cluster count of every component (capped at ``n - 1``);
    by default it comes from :func:`choose_k`.
    """
    graph = build_graph(bpm, threshold, 8)
    labels = np.zeros(graph.shape, dtype=np.int64)
    next_label = 1
    n_bad = 0
    for comp in connected_components(graph):
        kk = choose_k(comp.size) if k is None else min(k, max(comp.size - 1, 1))
        local = spectral_cluster(comp, kk, seed, convention, t)
        n_bad += len(disconnected_clusters(local, comp))
        if split:
            local = split_disconnected(local, comp)
        labels[tuple(graph.coords[comp.nodes].T)] = local + next_label - 1
        next_label += int(local.max())
    return BaselineResult(Segmentation(canonical_labels(labels)), n_bad)
