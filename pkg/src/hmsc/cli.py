"""Command-line entry point.

Exit codes: 0 on success, 1 on usage errors, 2 on processing errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import bpm as bpm_io
from .baseline import segment_baseline
from .diffusion import CONVENTIONS, embed
from .driver import HmscConfig, connected_component_segmentation, segment
from .exceptions import HmscError
from .graph import build_graph, connected_components
from .metrics import adapted_rand_error, variation_of_information
from .synthetic import SynthSpec, generate_synthetic

log = logging.getLogger("hmsc")
DEFAULTS = HmscConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_config_flags(p):
    p.add_argument("--threshold", type=int, default=DEFAULTS.threshold)
    p.add_argument("--connectivity", type=int, choices=(8, 26), default=DEFAULTS.connectivity)
    p.add_argument("--dims", type=int, default=DEFAULTS.d)
    p.add_argument("--t", type=float, default=DEFAULTS.t)
    p.add_argument("--spectrum", choices=CONVENTIONS, default=DEFAULTS.spectrum_convention)
    p.add_argument("--grid", type=int, default=DEFAULTS.grid)
    p.add_argument("--std-threshold", type=float, default=DEFAULTS.std_threshold)
    p.add_argument("--balance", type=float, default=DEFAULTS.balance)
    p.add_argument("--walk-steps", type=int, default=DEFAULTS.walk_steps)
    p.add_argument("--min-component-size", type=int, default=DEFAULTS.min_component_size)
    p.add_argument("--max-depth", type=int, default=DEFAULTS.max_depth)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    p.add_argument("--threads", type=int, default=DEFAULTS.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hmsc", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    parser.add_argument("--log-file", help="write the run log here instead of stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", help="hierarchical manifold spectral clustering")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_config_flags(p)

    p = sub.add_parser("baseline", help="per-component spectral clustering with k-means")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--threshold", type=int, default=DEFAULTS.threshold)
    p.add_argument("--k", type=int, default=None, help="fixed k (default: per-component heuristic)")
    p.add_argument("--t", type=float, default=DEFAULTS.t)
    p.add_argument("--spectrum", choices=CONVENTIONS, default=DEFAULTS.spectrum_convention)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    p.add_argument("--split-disconnected", action="store_true")

    p = sub.add_parser("cc", help="threshold and label connected components")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--threshold", type=int, default=DEFAULTS.threshold)

    p = sub.add_parser("synth", help="generate a synthetic boundary map and ground truth")
    spec = SynthSpec()
    p.add_argument("--width", type=int, default=spec.width)
    p.add_argument("--height", type=int, default=spec.height)
    p.add_argument("--regions", type=int, default=spec.regions)
    p.add_argument("--errors", type=int, default=spec.errors)
    p.add_argument("--gap-width", type=int, default=spec.gap_width)
    p.add_argument("--boundary-value", type=int, default=spec.boundary_value)
    p.add_argument("--interior-value", type=int, default=spec.interior_value)
    p.add_argument("--seed", type=int, default=spec.seed)
    p.add_argument("--out", required=True, help="boundary map (PGM)")
    p.add_argument("--gt", required=True, help="ground-truth labels (HMSCLBL1)")

    p = sub.add_parser("eval", help="compare a segmentation with ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)

    p = sub.add_parser("render", help="render a label file as PPM")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dump-embedding", help="write the diffusion map of one component as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--component", type=int, default=0, help="component index by smallest pixel")
    p.add_argument("--threshold", type=int, default=DEFAULTS.threshold)
    p.add_argument("--dims", type=int, default=DEFAULTS.d)
    p.add_argument("--t", type=float, default=DEFAULTS.t)
    p.add_argument("--spectrum", choices=CONVENTIONS, default=DEFAULTS.spectrum_convention)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    return parser


def _config(args) -> HmscConfig:
    try:
        return HmscConfig(
            threshold=args.threshold,
            connectivity=args.connectivity,
            d=args.dims,
            t=args.t,
            spectrum_convention=args.spectrum,
            grid=args.grid,
            std_threshold=args.std_threshold,
            balance=args.balance,
            walk_steps=args.walk_steps,
            min_component_size=args.min_component_size,
            max_depth=args.max_depth,
            seed=args.seed,
            threads=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_segment(args):
    config = _config(args)
    seg = segment(bpm_io.load_bpm(args.input), config)
    bpm_io.save_labels(seg, args.output)
    log.info("wrote %d segments to %s", seg.n_labels, args.output)


def _cmd_baseline(args):
    result = segment_baseline(
        bpm_io.load_bpm(args.input),
        threshold=args.threshold,
        seed=args.seed,
        split=args.split_disconnected,
        k=args.k,
        convention=args.spectrum,
        t=args.t,
    )
    if result.disconnected:
        log.warning("k-means produced %d cluster(s) disconnected in the pixel graph%s",
                    result.disconnected,
                    " (split by connectivity)" if args.split_disconnected else "")
    bpm_io.save_labels(result.segmentation, args.output)


def _cmd_cc(args):
    seg = connected_component_segmentation(bpm_io.load_bpm(args.input), args.threshold)
    bpm_io.save_labels(seg, args.output)


def _cmd_synth(args):
    try:
        spec = SynthSpec(
            width=args.width, height=args.height, regions=args.regions, errors=args.errors,
            gap_width=args.gap_width, boundary_value=args.boundary_value,
            interior_value=args.interior_value, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    bpm, truth = generate_synthetic(spec)
    bpm_io.save_bpm(bpm, args.out)
    bpm_io.save_labels(truth, args.gt)


def _cmd_eval(args):
    pred = bpm_io.load_labels(args.pred)
    truth = bpm_io.load_labels(args.gt)
    vi = variation_of_information(pred, truth)
    rand = adapted_rand_error(pred, truth)
    print(f"vi={vi:.6f} rand={rand:.6f}")


def _cmd_render(args):
    bpm_io.save_render(bpm_io.load_labels(args.labels), args.out)


def _cmd_dump_embedding(args):
    graph = build_graph(bpm_io.load_bpm(args.input), args.threshold, 8)
    comps = connected_components(graph)
    if not 0 <= args.component < len(comps):
        raise UsageError(f"component index {args.component} out of range (0..{len(comps) - 1})")
    comp = comps[args.component]
    dmap = embed(comp, args.dims, args.t, args.spectrum, seed=args.seed)
    names = ["x", "y", "z"] if args.dims == 3 else [f"x{i}" for i in range(1, args.dims + 1)]
    lines = ["node," + ",".join(names)]
    for node, row in zip(comp.nodes, dmap.points):
        lines.append(f"{int(node)}," + ",".join(f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


COMMANDS = {
    "segment": _cmd_segment,
    "baseline": _cmd_baseline,
    "cc": _cmd_cc,
    "synth": _cmd_synth,
    "eval": _cmd_eval,
    "render": _cmd_render,
    "dump-embedding": _cmd_dump_embedding,
}


def _setup_logging(args):
    handler = logging.FileHandler(args.log_file) if args.log_file else logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    log.propagate = False


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    _setup_logging(args)
    try:
        COMMANDS[args.command](args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        sys.stderr.close()
        return 0
    except UsageError as exc:
        print(f"hmsc {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (HmscError, ValueError, OSError) as exc:
        print(f"hmsc {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
