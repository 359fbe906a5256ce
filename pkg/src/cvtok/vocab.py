"""Vocabulary expansion, token-frequency coefficients and frame encoding.

Every (channel, pixel) slot is assigned a distinct token ID below the
vocabulary size ``N``.  Slot ``channel * S_L + pixel`` maps to itself for
seed 0; other seeds shuffle those ``2 * S_L`` IDs with a SplitMix64-driven
Fisher-Yates permutation.  Channel 0 is the contour map, channel 1 the
velocity map.

Each token carries a coefficient ``w_k = ref / max(f_k, f_min)`` where
``f_k`` is the fraction of training frames in which the token is active and
``ref`` is the mean frequency of the active contour tokens.  Frequent
tokens are scaled down and rare ones up, so ``w_k * f_k`` is the same for
every token seen at least ``f_min`` of the time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .extractors import sequence_map_words
from .grid import BitGrid, SilhouetteSequence, unpack_rows
from .rng import counter_mix, permutation

DEFAULT_VOCAB_SIZE = 151_642
DEFAULT_PROJECTION_DIM = 256
CHANNELS = ("contour", "velocity")
VOCAB_FILE_VERSION = 1

Normalization = Literal["mean", "median"]


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VocabularyMap:
    pixels: int
    size: int
    seed: int
    mapping: np.ndarray = field(repr=False)
    height: int | None = None
    width: int | None = None

    @property
    def channel_offsets(self) -> tuple[int, int]:
        return (0, self.pixels)

    def token_id(self, channel: int | str, pixel: int) -> int:
        if isinstance(channel, str):
            channel = CHANNELS.index(channel)
        if not 0 <= pixel < self.pixels:
            raise IndexError(f"pixel {pixel} outside 0..{self.pixels - 1}")
        return int(self.mapping[channel * self.pixels + pixel])

    def check_frame(self, height: int, width: int) -> None:
        if height * width != self.pixels or (
            self.height is not None and (height, width) != (self.height, self.width)
        ):
            want = f"{self.height}x{self.width}" if self.height is not None else f"{self.pixels} pixels"
            raise VocabularyError(f"frame is {height}x{width} but the vocabulary expects {want}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, VocabularyMap):
            return NotImplemented
        return (self.pixels, self.size, self.seed, self.height, self.width) == (
            other.pixels, other.size, other.seed, other.height, other.width,
        ) and np.array_equal(self.mapping, other.mapping)


def build_vocabulary(
    pixels: int,
    size: int = DEFAULT_VOCAB_SIZE,
    seed: int = 0,
    *,
    height: int | None = None,
    width: int | None = None,
) -> VocabularyMap:
    if pixels <= 0:
        raise VocabularyError(f"pixel count must be positive, got {pixels}")
    if (height is None) != (width is None) or (height is not None and height * width != pixels):
        raise VocabularyError(f"frame shape {height}x{width} does not match {pixels} pixels")
    slots = 2 * pixels
    if slots > size:
        raise VocabularyError(
            f"vocabulary too small: contour and velocity channels of {pixels} pixels need "
            f"N >= {slots}, got N = {size}"
        )
    mapping = np.arange(slots, dtype=np.int64) if seed == 0 else permutation(slots, seed)
    mapping.flags.writeable = False
    return VocabularyMap(pixels, size, seed, mapping, height, width)


# -- frequencies ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Per-token frequencies and coefficients, indexed by ascending token ID."""

    token_ids: np.ndarray
    frequencies: np.ndarray
    coefficients: np.ndarray
    channels: np.ndarray
    frame_count: int
    f_min: float
    mean_contour_frequency: float
    mean_velocity_frequency: float
    normalization: str = "mean"

    def _positions(self, tokens) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.int64)
        pos = np.searchsorted(self.token_ids, tokens)
        pos_ok = np.minimum(pos, len(self.token_ids) - 1)
        if tokens.size and not np.array_equal(self.token_ids[pos_ok], tokens):
            missing = tokens[self.token_ids[pos_ok] != tokens][0]
            raise KeyError(f"token {int(missing)} is not a silhouette token")
        return pos

    def frequency(self, tokens) -> np.ndarray:
        return self.frequencies[self._positions(tokens)]

    def weights(self, tokens) -> np.ndarray:
        return self.coefficients[self._positions(tokens)]

    def slot_coefficients(self, vocab: VocabularyMap) -> np.ndarray:
        """Coefficient of every (channel, pixel) slot, in slot order."""
        return self.weights(vocab.mapping)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        return (
            (self.frame_count, self.f_min, self.mean_contour_frequency, self.normalization)
            == (other.frame_count, other.f_min, other.mean_contour_frequency, other.normalization)
            and np.array_equal(self.token_ids, other.token_ids)
            and np.array_equal(self.frequencies, other.frequencies)
            and np.array_equal(self.coefficients, other.coefficients)
        )


class FrequencyCounter:
    """Mergeable per-slot activation counts.

    Partial counters built on disjoint parts of a corpus can be merged in
    any order; the result equals counting the whole corpus at once.
    """

    def __init__(self, pixels: int):
        self.pixels = pixels
        self.counts = np.zeros(2 * pixels, dtype=np.int64)
        self.frames = 0

    def update(self, seq: SilhouetteSequence) -> FrequencyCounter:
        if seq.height * seq.width != self.pixels:
            raise VocabularyError(
                f"sequence {seq.label!r} has {seq.height * seq.width} pixels per frame, "
                f"expected {self.pixels}"
            )
        contours, velocities = sequence_map_words(seq)
        n = len(seq)
        self.counts[: self.pixels] += unpack_rows(contours, seq.width).reshape(n, -1).sum(axis=0, dtype=np.int64)
        self.counts[self.pixels :] += unpack_rows(velocities, seq.width).reshape(n, -1).sum(axis=0, dtype=np.int64)
        self.frames += n
        return self

    def merge(self, other: FrequencyCounter) -> FrequencyCounter:
        if other.pixels != self.pixels:
            raise VocabularyError("cannot merge counters over different frame sizes")
        merged = FrequencyCounter(self.pixels)
        merged.counts = self.counts + other.counts
        merged.frames = self.frames + other.frames
        return merged

    def table(
        self,
        vocab: VocabularyMap,
        f_min: float | None = None,
        normalization: Normalization = "mean",
    ) -> FrequencyTable:
        if self.frames == 0:
            raise VocabularyError("cannot estimate frequencies from an empty corpus")
        if vocab.pixels != self.pixels:
            raise VocabularyError(f"vocabulary has {vocab.pixels} pixels, counts have {self.pixels}")
        if f_min is None:
            f_min = 1.0 / self.frames
        if not 0.0 < f_min <= 1.0:
            raise VocabularyError(f"f_min must lie in (0, 1], got {f_min}")

        slot_freq = self.counts / self.frames
        contour_counts = self.counts[: self.pixels]
        velocity_counts = self.counts[self.pixels :]
        if normalization == "mean":
            # exact integer sum, one rounding: identical in any implementation
            ref = _mean_active(contour_counts, self.frames)
        elif normalization == "median":
            active = contour_counts[contour_counts > 0] / self.frames
            ref = float(np.median(active)) if active.size else 0.0
        else:
            raise VocabularyError(f"unknown normalization {normalization!r}")
        if ref == 0.0:
            # no contour pixel ever fired: fall back to unit weights at the floor
            ref = f_min
        slot_coef = ref / np.maximum(slot_freq, f_min)

        order = np.argsort(vocab.mapping, kind="stable")
        return FrequencyTable(
            token_ids=vocab.mapping[order],
            frequencies=slot_freq[order],
            coefficients=slot_coef[order],
            channels=order // self.pixels,
            frame_count=self.frames,
            f_min=float(f_min),
            mean_contour_frequency=ref,
            mean_velocity_frequency=_mean_active(velocity_counts, self.frames),
            normalization=normalization,
        )


def _mean_active(counts: np.ndarray, frames: int) -> float:
    """Mean of ``count / frames`` over nonzero counts."""
    active = counts[counts > 0]
    if not active.size:
        return 0.0
    return int(active.sum()) / (frames * int(active.size))


def estimate_frequencies(
    corpus: Iterable[SilhouetteSequence],
    vocab: VocabularyMap,
    f_min: float | None = None,
    normalization: Normalization = "mean",
) -> FrequencyTable:
    counter = FrequencyCounter(vocab.pixels)
    for seq in corpus:
        counter.update(seq)
    return counter.table(vocab, f_min, normalization)


# -- encoding -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TokenFrame:
    """Token IDs (ascending) active in one frame, with their coefficients."""

    index: int
    tokens: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenFrame):
            return NotImplemented
        return (
            self.index == other.index
            and np.array_equal(self.tokens, other.tokens)
            and np.array_equal(self.weights, other.weights)
        )


def encode_words(
    contours: np.ndarray,
    velocities: np.ndarray,
    width: int,
    vocab: VocabularyMap,
    slot_coef: np.ndarray,
    start: int = 0,
) -> list[TokenFrame]:
    """Batch encoder over ``(frames, height, words)`` contour/velocity stacks."""
    n = contours.shape[0]
    bits = np.concatenate(
        [unpack_rows(contours, width).reshape(n, -1), unpack_rows(velocities, width).reshape(n, -1)],
        axis=1,
    )
    frame_idx, slots = np.nonzero(bits)
    tokens = vocab.mapping[slots]
    if vocab.seed != 0:
        order = np.lexsort((tokens, frame_idx))
        tokens, slots = tokens[order], slots[order]
    weights = slot_coef[slots]
    bounds = np.cumsum(np.bincount(frame_idx, minlength=n))[:-1]
    return [
        TokenFrame(start + t, tok, w)
        for t, (tok, w) in enumerate(zip(np.split(tokens, bounds), np.split(weights, bounds)))
    ]


def encode_frame(
    contour: BitGrid,
    velocity: BitGrid,
    vocab: VocabularyMap,
    freq: FrequencyTable,
    index: int = 0,
) -> TokenFrame:
    if contour.shape != velocity.shape:
        raise VocabularyError(f"contour {contour.shape} and velocity {velocity.shape} differ in size")
    vocab.check_frame(contour.height, contour.width)
    return encode_words(
        contour.words[None],
        velocity.words[None],
        contour.width,
        vocab,
        freq.slot_coefficients(vocab),
        start=index,
    )[0]


def encode_sequence(
    seq: SilhouetteSequence,
    vocab: VocabularyMap,
    freq: FrequencyTable,
    slot_coef: np.ndarray | None = None,
) -> list[TokenFrame]:
    """One :class:`TokenFrame` per frame, in order.

    ``slot_coef`` may be passed in to skip recomputing
    :meth:`FrequencyTable.slot_coefficients` for every sequence.
    """
    vocab.check_frame(seq.height, seq.width)
    if slot_coef is None:
        slot_coef = freq.slot_coefficients(vocab)
    contours, velocities = sequence_map_words(seq)
    return encode_words(contours, velocities, seq.width, vocab, slot_coef)


# -- projection stub --------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionStub:
    """Deterministic stand-in for a frozen embedding table.

    Entry ``(token, j)`` is the ``token * dim + j``-th SplitMix64 output for
    ``seed``, mapped to ``[-1, 1)`` as ``(z >> 11) * 2**-52 - 1``.
    """

    size: int = DEFAULT_VOCAB_SIZE
    dim: int = DEFAULT_PROJECTION_DIM
    seed: int = 0

    def rows(self, tokens) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=np.uint64)
        if tokens.size and int(tokens.max()) >= self.size:
            raise IndexError(f"token {int(tokens.max())} outside vocabulary of size {self.size}")
        counters = tokens[:, None] * np.uint64(self.dim) + np.arange(self.dim, dtype=np.uint64)
        z = counter_mix(self.seed, counters) >> np.uint64(11)
        return z.astype(np.float64) * 2.0**-52 - 1.0


def project_frame(tf: TokenFrame, stub: ProjectionStub) -> np.ndarray:
    """L2-normalised weighted sum of the stub rows; zero vector when empty."""
    if len(tf) == 0:
        return np.zeros(stub.dim)
    v = tf.weights @ stub.rows(tf.tokens)
    return v / np.linalg.norm(v)


# -- vocabulary file -------------------------------------------------------------------------


def _num(x: float) -> str:
    return format(float(x), ".17g")


def dump_vocabulary(vocab: VocabularyMap, freq: FrequencyTable) -> str:
    """Vocabulary JSON with fixed key order and 17-significant-digit reals.

    The token mapping itself is not stored: it is rebuilt from
    ``(S_L, N, seed)``.
    """
    nz = np.flatnonzero(freq.frequencies)
    freq_rows = ",\n".join(
        f"    [{int(freq.token_ids[i])}, {_num(freq.frequencies[i])}]" for i in nz
    )
    coef_rows = ",\n".join(
        f"    [{int(k)}, {_num(w)}]" for k, w in zip(freq.token_ids, freq.coefficients)
    )
    scalar = json.dumps
    lines = [
        "{",
        f'  "version": {VOCAB_FILE_VERSION},',
        f'  "S_L": {vocab.pixels},',
        f'  "height": {scalar(vocab.height)},',
        f'  "width": {scalar(vocab.width)},',
        f'  "N": {vocab.size},',
        f'  "seed": {vocab.seed},',
        f'  "channel_offsets": [{vocab.channel_offsets[0]}, {vocab.channel_offsets[1]}],',
        f'  "frequencies": [\n{freq_rows}\n  ],' if freq_rows else '  "frequencies": [],',
        f'  "coefficients": [\n{coef_rows}\n  ],',
        f'  "f_min": {_num(freq.f_min)},',
        f'  "mean_contour_frequency": {_num(freq.mean_contour_frequency)},',
        f'  "mean_velocity_frequency": {_num(freq.mean_velocity_frequency)},',
        f'  "frame_count": {freq.frame_count},',
        f'  "normalization": {scalar(freq.normalization)}',
        "}",
    ]
    return "\n".join(lines) + "\n"


def parse_vocabulary(text: str) -> tuple[VocabularyMap, FrequencyTable]:
    doc = json.loads(text)
    if doc.get("version") != VOCAB_FILE_VERSION:
        raise VocabularyError(f"unsupported vocabulary file version {doc.get('version')!r}")
    vocab = build_vocabulary(
        doc["S_L"], doc["N"], doc["seed"], height=doc.get("height"), width=doc.get("width")
    )
    order = np.argsort(vocab.mapping, kind="stable")
    token_ids = vocab.mapping[order]
    coef = np.array(doc["coefficients"], dtype=np.float64).reshape(-1, 2)
    if not np.array_equal(coef[:, 0].astype(np.int64), token_ids):
        raise VocabularyError("coefficient table does not cover exactly the mapped tokens")
    frequencies = np.zeros(len(token_ids))
    if doc["frequencies"]:
        fr = np.array(doc["frequencies"], dtype=np.float64).reshape(-1, 2)
        pos = np.searchsorted(token_ids, fr[:, 0].astype(np.int64))
        frequencies[pos] = fr[:, 1]
    freq = FrequencyTable(
        token_ids=token_ids,
        frequencies=frequencies,
        coefficients=coef[:, 1].copy(),
        channels=order // vocab.pixels,
        frame_count=doc["frame_count"],
        f_min=doc["f_min"],
        mean_contour_frequency=doc["mean_contour_frequency"],
        mean_velocity_frequency=doc["mean_velocity_frequency"],
        normalization=doc["normalization"],
    )
    return vocab, freq


def overlay_frequencies(text: str) -> np.ndarray:
    """Nonzero frequencies from any vocabulary-format file (e.g. text-token counts)."""
    doc = json.loads(text)
    rows = doc.get("frequencies", [])
    return np.array([f for _, f in rows], dtype=np.float64)
