"""Boundary probability maps, label maps and their on-disk formats.

Boundary maps are read and written as binary PGM (P5, maxval 255). Label
maps use a small fixed-layout container::

    b"HMSCLBL1" | u32 width | u32 height | width*height u32 labels

with all integers little-endian and labels in row-major order.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np

from .exceptions import FormatError

LABEL_MAGIC = b"HMSCLBL1"
GOLDEN_ANGLE = 137.50776405003785


@dataclass(frozen=True)
class BoundaryMap:
    """A 2D raster of boundary intensities in [0, 255].

    ``values`` has shape ``(height, width)``; high values mark boundaries.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError(f"boundary map must be 2D, got shape {v.shape}")
        if v.size and (v.min() < 0 or v.max() > 255):
            raise ValueError("boundary values must lie in [0, 255]")
        object.__setattr__(self, "values", v.astype(np.uint8, copy=False))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class Segmentation:
    """Pixel labels with 0 reserved for boundary / unlabeled pixels.

    Labels are canonical: nonzero labels are exactly ``1..L``, numbered in
    order of first appearance in a row-major scan.
    """

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ValueError(f"label map must be 2D, got shape {lab.shape}")
        if lab.size and lab.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "labels", lab.astype(np.uint32, copy=False))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self):
        return self.labels.shape

    @property
    def n_labels(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    def is_canonical(self) -> bool:
        return np.array_equal(canonical_labels(self.labels), self.labels)

    def __eq__(self, other):
        if not isinstance(other, Segmentation):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.labels, other.labels)

    __hash__ = None


def canonical_labels(labels):
    """Renumber nonzero labels to 1..L by first row-major appearance."""
    labels = np.asarray(labels)
    flat = labels.ravel()
    out = np.zeros(flat.shape, dtype=np.uint32)
    nz = np.flatnonzero(flat)
    if nz.size == 0:
        return out.reshape(labels.shape)
    values, first = np.unique(flat[nz], return_index=True)
    order = np.argsort(first, kind="stable")
    new = np.empty(values.size, dtype=np.uint32)
    new[order] = np.arange(1, values.size + 1, dtype=np.uint32)
    out[nz] = new[np.searchsorted(values, flat[nz])]
    return out.reshape(labels.shape)


def canonicalize(labels) -> Segmentation:
    return Segmentation(canonical_labels(labels))


# ---------------------------------------------------------------------------
# PGM


def _pgm_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            break
        tokens.append(data[start:pos])
    return tokens, pos


def parse_pgm(data: bytes) -> BoundaryMap:
    names = ("magic", "width", "height", "maxval")
    tokens, pos = _pgm_tokens(data, 4)
    if len(tokens) < 4 or pos >= len(data):
        missing = names[len(tokens)] if len(tokens) < 4 else "header terminator"
        raise FormatError(f"malformed PGM header: missing {missing}")
    if tokens[0] != b"P5":
        raise FormatError(f"malformed PGM header: bad magic {tokens[0]!r}, expected b'P5'")
    fields = {}
    for name, tok in zip(names[1:], tokens[1:]):
        try:
            fields[name] = int(tok)
        except ValueError:
            raise FormatError(f"malformed PGM header: {name} {tok!r} is not an integer") from None
        if fields[name] < 0:
            raise FormatError(f"malformed PGM header: negative {name}")
    if fields["maxval"] != 255:
        raise FormatError(f"unsupported maxval {fields['maxval']} (only 255 is supported)")
    w, h = fields["width"], fields["height"]
    payload = data[pos + 1 :]
    if len(payload) < w * h:
        raise FormatError(
            f"truncated PGM payload: expected {w * h} bytes, got {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=np.uint8, count=w * h).reshape(h, w).copy()
    return BoundaryMap(values)


def format_pgm(bpm: BoundaryMap) -> bytes:
    header = f"P5\n{bpm.width} {bpm.height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(bpm.values, dtype=np.uint8).tobytes()


def load_bpm(path) -> BoundaryMap:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def save_bpm(bpm: BoundaryMap, path) -> None:
    with open(path, "wb") as fh:
        fh.write(format_pgm(bpm))


# ---------------------------------------------------------------------------
# HMSCLBL1 label files


def format_labels(seg: Segmentation) -> bytes:
    head = LABEL_MAGIC + np.array([seg.width, seg.height], dtype="<u4").tobytes()
    return head + np.ascontiguousarray(seg.labels, dtype="<u4").tobytes()


def parse_labels(data: bytes) -> Segmentation:
    if len(data) < 16:
        raise FormatError("truncated label file header")
    if data[:8] != LABEL_MAGIC:
        raise FormatError(f"bad magic {data[:8]!r}, expected {LABEL_MAGIC!r}")
    w, h = (int(x) for x in np.frombuffer(data, dtype="<u4", count=2, offset=8))
    expected = 16 + 4 * w * h
    if len(data) < expected:
        raise FormatError(f"truncated label payload: expected {expected} bytes, got {len(data)}")
    labels = np.frombuffer(data, dtype="<u4", count=w * h, offset=16).reshape(h, w)
    return Segmentation(labels.astype(np.uint32))


def save_labels(seg: Segmentation, path) -> None:
    with open(path, "wb") as fh:
        fh.write(format_labels(seg))


def load_labels(path) -> Segmentation:
    with open(path, "rb") as fh:
        return parse_labels(fh.read())


# ---------------------------------------------------------------------------
# Rendering


def label_palette(n_labels: int) -> np.ndarray:
    """RGB palette of shape ``(n_labels + 1, 3)``; row 0 is black.

    Label ``l`` gets hue ``l * golden_angle``; saturation and value cycle
    slowly so that large label counts stay distinguishable.
    """
    pal = np.zeros((n_labels + 1, 3), dtype=np.uint8)
    for lab in range(1, n_labels + 1):
        hue = (lab * GOLDEN_ANGLE % 360.0) / 360.0
        sat = 0.55 + 0.4 * ((lab // 7) % 2)
        val = 0.95 - 0.25 * ((lab // 14) % 2)
        r, g, b = colorsys.hsv_to_rgb(hue, sat, val)
        pal[lab] = np.round(np.array([r, g, b]) * 255)
    return pal


def render_labels(seg: Segmentation) -> bytes:
    """Render a segmentation as PPM (P6) bytes."""
    rgb = label_palette(seg.n_labels)[seg.labels]
    header = f"P6\n{seg.width} {seg.height}\n255\n".encode("ascii")
    return header + rgb.astype(np.uint8).tobytes()


def save_render(seg: Segmentation, path) -> None:
    with open(path, "wb") as fh:
        fh.write(render_labels(seg))


def parse_ppm(data: bytes) -> np.ndarray:
    """Decode P6 bytes produced by :func:`render_labels` into ``(h, w, 3)``."""
    tokens, pos = _pgm_tokens(data, 4)
    if len(tokens) < 4 or tokens[0] != b"P6":
        raise FormatError("malformed PPM header")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(data[pos + 1 :], dtype=np.uint8, count=w * h * 3).reshape(h, w, 3)
