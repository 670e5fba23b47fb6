"""Hierarchical manifold spectral clustering of boundary probability maps."""

from .baseline import choose_k, kmeans, segment_baseline, spectral_cluster, split_disconnected
from .bpm import (
    BoundaryMap,
    Segmentation,
    canonicalize,
    load_bpm,
    load_labels,
    render_labels,
    save_bpm,
    save_labels,
)
from .coarse import CoarseGrid, bresenham3, coarsen, reconstruct
from .diffusion import DiffusionMap, embed, smallest_eigenpairs
from .driver import HmscConfig, connected_component_segmentation, divide, segment
from .exceptions import EigenSolverError, FormatError, HmscError, InvariantError, UnsplittableError
from .graph import Component, PixelGraph, build_graph, connected_components
from .metrics import adapted_rand_error, variation_of_information
from .ncut import build_eag, min_ncut_split, ncut_of_edge, repair_connectivity
from .skeleton import TreeApprox, break_cycles, random_walk_scores, skeletonize
from .synthetic import SynthSpec, generate_synthetic

__version__ = "0.1.0"
