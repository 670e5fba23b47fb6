"""Walk through one divide step on the merged synthetic component, stage by stage."""

import numpy as np

from hmsc.driver import HmscConfig, divide
from hmsc.graph import build_graph, connected_components
from hmsc.synthetic import SynthSpec, generate_synthetic


def main():
    bpm, truth = generate_synthetic(SynthSpec(seed=42))
    graph = build_graph(bpm)
    comp = max(connected_components(graph), key=lambda c: c.size)
    trace = divide(comp, HmscConfig(seed=42))

    print(f"component: {comp.size} pixels")
    print(f"eigenvalues: {np.array2string(trace.dmap.eigenvalues, precision=6)}")
    for grid in (trace.grid, trace.grid_conn, trace.grid_skel, trace.tree.grid):
        dens = grid.densities()
        print(f"{grid.stage:<7} occupied cells {len(dens):>5}, max density {dens.max():>5}")
    print(f"density std {trace.std:.2f}")
    print(f"tree: {len(trace.tree.cells)} cells, {len(trace.tree.edges)} edges")

    cut = trace.cut
    print(f"cut edge {cut.edge}: ncut {cut.ncut:.5f}, sides {cut.in_w.sum()} / {(~cut.in_w).sum()}")
    pixel_truth = truth.labels[tuple(graph.coords[comp.nodes].T)]
    for side, mask in (("W", cut.in_w), ("W^C", ~cut.in_w)):
        regions, counts = np.unique(pixel_truth[mask], return_counts=True)
        print(f"{side:<4} truth regions {dict(zip(regions.tolist(), counts.tolist()))}")


if __name__ == "__main__":
    main()
