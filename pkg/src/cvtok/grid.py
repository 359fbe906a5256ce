"""Bit-packed binary rasters and the flatten/decompose primitives.

Pixels are flattened in row-major order, ``index = row * width + col``.
Token IDs are derived from these indices, so the order is part of the
public contract.

Internally each row is packed into ``uint64`` words, least significant bit
first (column ``c`` lives in word ``c // 64`` at bit ``c % 64``).  Padding
bits past ``width`` are always zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64


def words_per_row(width: int) -> int:
    return (width + WORD_BITS - 1) // WORD_BITS


def _row_masks(width: int) -> np.ndarray:
    """Per-word masks with ones on valid columns of a row."""
    n = words_per_row(width)
    masks = np.full(n, np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    tail = width % WORD_BITS
    if tail:
        masks[-1] = np.uint64((1 << tail) - 1)
    return masks


def pack_rows(arr: np.ndarray) -> np.ndarray:
    """Pack a boolean array ``(..., height, width)`` into ``(..., height, words)``."""
    arr = np.asarray(arr, dtype=bool)
    width = arr.shape[-1]
    n = words_per_row(width)
    padded = np.zeros(arr.shape[:-1] + (n * WORD_BITS,), dtype=bool)
    padded[..., :width] = arr
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_rows(words: np.ndarray, width: int) -> np.ndarray:
    """Inverse of :func:`pack_rows`; returns a ``uint8`` array of 0/1."""
    as_bytes = np.ascontiguousarray(words.astype("<u8", copy=False)).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :width]


@dataclass(frozen=True, eq=False)
class BitGrid:
    """Immutable ``height x width`` binary raster (1 = foreground)."""

    height: int
    width: int
    words: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValueError(f"grid dimensions must be positive, got {self.height}x{self.width}")
        words = np.asarray(self.words, dtype=np.uint64)
        expected = (self.height, words_per_row(self.width))
        if words.shape != expected:
            raise ValueError(f"word array has shape {words.shape}, expected {expected}")
        words = words & _row_masks(self.width)
        words.flags.writeable = False
        object.__setattr__(self, "words", words)

    # -- construction -------------------------------------------------

    @classmethod
    def zeros(cls, height: int, width: int) -> BitGrid:
        return cls(height, width, np.zeros((height, words_per_row(width)), dtype=np.uint64))

    @classmethod
    def ones(cls, height: int, width: int) -> BitGrid:
        words = np.broadcast_to(_row_masks(width), (height, words_per_row(width))).copy()
        return cls(height, width, words)

    @classmethod
    def from_array(cls, arr) -> BitGrid:
        """Build from a 2-D array; nonzero entries are foreground."""
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(arr.shape[0], arr.shape[1], pack_rows(arr != 0))

    @classmethod
    def from_flat(cls, bits, height: int, width: int) -> BitGrid:
        bits = np.asarray(bits)
        if bits.shape != (height * width,):
            raise ValueError(f"flat vector has length {bits.size}, expected {height * width}")
        return cls.from_array(bits.reshape(height, width))

    @classmethod
    def from_indices(cls, indices: Iterable[int], height: int, width: int) -> BitGrid:
        return cls.from_flat(recompose(indices, height * width), height, width)

    # -- access -------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def size(self) -> int:
        """Number of pixels, i.e. the flattened length."""
        return self.height * self.width

    def to_array(self) -> np.ndarray:
        """Dense ``uint8`` copy of shape ``(height, width)``."""
        return unpack_rows(self.words, self.width)

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __getitem__(self, pos: tuple[int, int]) -> int:
        row, col = pos
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise IndexError(f"pixel ({row}, {col}) outside {self.height}x{self.width} grid")
        word = int(self.words[row, col // WORD_BITS])
        return (word >> (col % WORD_BITS)) & 1

    def _check_same_shape(self, other: BitGrid) -> None:
        if self.shape != other.shape:
            raise ValueError(f"dimension mismatch: {self.shape} vs {other.shape}")

    def __and__(self, other: BitGrid) -> BitGrid:
        self._check_same_shape(other)
        return BitGrid(self.height, self.width, self.words & other.words)

    def __or__(self, other: BitGrid) -> BitGrid:
        self._check_same_shape(other)
        return BitGrid(self.height, self.width, self.words | other.words)

    def __xor__(self, other: BitGrid) -> BitGrid:
        self._check_same_shape(other)
        return BitGrid(self.height, self.width, self.words ^ other.words)

    def __invert__(self) -> BitGrid:
        # padding is re-masked in __post_init__
        return BitGrid(self.height, self.width, ~self.words)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitGrid):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.height, self.width, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.height}x{self.width}, popcount={self.popcount()})"


@dataclass(frozen=True)
class SilhouetteSequence:
    """Ordered frames of one walking sequence, all of the same size."""

    frames: tuple[BitGrid, ...]
    label: str = ""
    source: str = ""

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a silhouette sequence needs at least one frame")
        shape = frames[0].shape
        for t, frame in enumerate(frames):
            if frame.shape != shape:
                raise ValueError(
                    f"frame {t} of sequence {self.label!r} is {frame.shape[0]}x{frame.shape[1]}, "
                    f"expected {shape[0]}x{shape[1]}"
                )
        object.__setattr__(self, "frames", frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def stacked_words(self) -> np.ndarray:
        """All frames as one ``(frames, height, words)`` array."""
        return np.stack([f.words for f in self.frames])


def flatten(grid: BitGrid) -> np.ndarray:
    """Row-major 0/1 vector of length ``height * width``."""
    return grid.to_array().reshape(-1)


def decompose(bits: Sequence[int] | np.ndarray) -> np.ndarray:
    """Ascending indices of the set bits of a flat vector."""
    return np.flatnonzero(np.asarray(bits)).astype(np.int64)


def recompose(indices: Iterable[int], length: int) -> np.ndarray:
    """Rebuild the 0/1 vector of ``length`` whose set bits are ``indices``."""
    idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
    out = np.zeros(length, dtype=np.uint8)
    if idx.size:
        bad = idx[(idx < 0) | (idx >= length)]
        if bad.size:
            raise IndexError(f"index {int(bad[0])} out of range for vector of length {length}")
        out[idx] = 1
    return out
