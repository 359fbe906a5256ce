"""Contour and velocity maps, and silhouette reconstruction from contours.

The contour is the 4-neighbour inner boundary: a foreground pixel is kept
when at least one of its up/down/left/right neighbours is background or
falls outside the frame.  The velocity map between two contours is their
bitwise XOR.
"""

from __future__ import annotations

from collections import deque
from typing import Literal

import numpy as np
from scipy import ndimage

from .grid import BitGrid, SilhouetteSequence, _row_masks

FillMode = Literal["exterior-fill", "parity-fill"]
FILL_MODES = ("exterior-fill", "parity-fill")

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)
_ONE = np.uint64(1)
_TOP = np.uint64(63)


class ContourMap(BitGrid):
    """Boundary pixels of a silhouette."""


class VelocityMap(BitGrid):
    """XOR of two consecutive contour maps."""


# -- word-level kernels; operate on (..., height, words) uint64 arrays ----


def _from_left(w: np.ndarray) -> np.ndarray:
    """Each bit takes the value of its left neighbour (column - 1)."""
    out = w << _ONE
    out[..., 1:] |= w[..., :-1] >> _TOP
    return out


def _from_right(w: np.ndarray) -> np.ndarray:
    """Each bit takes the value of its right neighbour (column + 1)."""
    out = w >> _ONE
    out[..., :-1] |= w[..., 1:] << _TOP
    return out


def contour_words(w: np.ndarray, width: int) -> np.ndarray:
    """Inner 4-boundary of packed silhouettes; leading axes are batched."""
    up = np.zeros_like(w)
    up[..., 1:, :] = w[..., :-1, :]
    down = np.zeros_like(w)
    down[..., :-1, :] = w[..., 1:, :]
    # padding bits are zero, so the right neighbour of the last column reads 0
    interior = up & down & _from_left(w) & _from_right(w)
    return (w & ~interior) & _row_masks(width)


def velocity_words(contours: np.ndarray) -> np.ndarray:
    """Velocity words for a ``(frames, height, words)`` contour stack.

    The first frame has no predecessor and gets the zero map.
    """
    out = np.zeros_like(contours)
    out[1:] = contours[1:] ^ contours[:-1]
    return out


# -- public operations ------------------------------------------------------


def extract_contour(silhouette: BitGrid) -> ContourMap:
    return ContourMap(
        silhouette.height, silhouette.width, contour_words(silhouette.words, silhouette.width)
    )


def extract_velocity(current: BitGrid, previous: BitGrid) -> VelocityMap:
    if current.shape != previous.shape:
        raise ValueError(
            f"cannot take velocity of {current.shape[0]}x{current.shape[1]} and "
            f"{previous.shape[0]}x{previous.shape[1]} contours"
        )
    return VelocityMap(current.height, current.width, current.words ^ previous.words)


def sequence_map_words(seq: SilhouetteSequence) -> tuple[np.ndarray, np.ndarray]:
    """Contour and velocity word stacks for a whole sequence in one pass."""
    contours = contour_words(seq.stacked_words(), seq.width)
    return contours, velocity_words(contours)


def extract_sequence_maps(seq: SilhouetteSequence) -> list[tuple[ContourMap, VelocityMap]]:
    """One ``(contour, velocity)`` pair per frame, in frame order."""
    if len(seq) == 0:
        raise ValueError("empty sequence")
    contours, velocities = sequence_map_words(seq)
    h, w = seq.height, seq.width
    return [(ContourMap(h, w, c), VelocityMap(h, w, v)) for c, v in zip(contours, velocities)]


def reconstruct_silhouette(contour: BitGrid, mode: FillMode = "exterior-fill") -> BitGrid:
    """Fill a contour map back into a silhouette.

    ``exterior-fill`` marks as background everything reachable from outside
    the frame through non-contour pixels.  It is exact when the source
    silhouette has no enclosed background holes.

    ``parity-fill`` labels the non-contour regions, links regions that touch
    a common (8-connected) contour component, and assigns each region its
    breadth-first depth from the outside.  Odd depths are foreground.  This
    also recovers holes as long as each hole is ringed by its own contour
    component.
    """
    # one pixel of background around the frame stands in for "outside"
    free = np.pad(contour.to_array() == 0, 1, constant_values=True)
    regions, _ = ndimage.label(free, structure=_FOUR)
    outside = regions[0, 0]
    if mode == "exterior-fill":
        filled = regions != outside
    elif mode == "parity-fill":
        filled = _parity_fill(free, regions, outside)
    else:
        raise ValueError(f"unknown fill mode {mode!r}; expected one of {FILL_MODES}")
    return BitGrid.from_array(filled[1:-1, 1:-1])


def _parity_fill(free: np.ndarray, regions: np.ndarray, outside: int) -> np.ndarray:
    rings, n_rings = ndimage.label(~free, structure=_EIGHT)
    if n_rings == 0:
        return np.zeros_like(free)
    # region/ring pairs that are 4-adjacent
    pairs = []
    for a, b in (
        (np.s_[:, :-1], np.s_[:, 1:]),
        (np.s_[:, 1:], np.s_[:, :-1]),
        (np.s_[:-1, :], np.s_[1:, :]),
        (np.s_[1:, :], np.s_[:-1, :]),
    ):
        r, k = regions[a], rings[b]
        hit = (r > 0) & (k > 0)
        pairs.append(np.stack([r[hit], k[hit]], axis=1))
    edges = np.unique(np.concatenate(pairs), axis=0)

    ring_to_regions: dict[int, list[int]] = {}
    region_to_rings: dict[int, list[int]] = {}
    for region, ring in edges.tolist():
        ring_to_regions.setdefault(ring, []).append(region)
        region_to_rings.setdefault(region, []).append(ring)

    depth = {outside: 0}
    queue = deque([outside])
    seen_rings = set()
    while queue:
        region = queue.popleft()
        for ring in region_to_rings.get(region, ()):
            if ring in seen_rings:
                continue
            seen_rings.add(ring)
            for nxt in ring_to_regions[ring]:
                if nxt not in depth:
                    depth[nxt] = depth[region] + 1
                    queue.append(nxt)

    n_regions = int(regions.max())
    odd = np.zeros(n_regions + 1, dtype=bool)
    for region, d in depth.items():
        odd[region] = d % 2 == 1
    return ~free | odd[regions]


def enclosed_background(silhouette: BitGrid) -> BitGrid:
    """Background pixels not 4-connected to the outside of the frame."""
    free = np.pad(silhouette.to_array() == 0, 1, constant_values=True)
    regions, _ = ndimage.label(free, structure=_FOUR)
    holes = free & (regions != regions[0, 0])
    return BitGrid.from_array(holes[1:-1, 1:-1])


def is_hole_free(silhouette: BitGrid) -> bool:
    return enclosed_background(silhouette).popcount() == 0
