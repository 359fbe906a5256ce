"""Corpus statistics: token densities, compression rates, frequency
histograms and heatmaps, and the contour round-trip check."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .corpus import encode_pgm
from .extractors import FillMode, reconstruct_silhouette, sequence_map_words
from .grid import SilhouetteSequence, unpack_rows
from .vocab import CHANNELS, FrequencyTable

MapType = Literal["silhouette", "contour", "velocity"]
MAP_TYPES = ("silhouette", "contour", "velocity")
FIRST_FRAME_RULE = "first-frame velocity is the zero map and is counted"


class EmptyCorpusError(ValueError):
    pass


def _require(corpus) -> list[SilhouetteSequence]:
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpusError("corpus is empty")
    return corpus


def _map_stack(seq: SilhouetteSequence, map_type: str) -> np.ndarray:
    """``(frames, height, width)`` 0/1 array of one map type."""
    if map_type == "silhouette":
        return unpack_rows(seq.stacked_words(), seq.width)
    contours, velocities = sequence_map_words(seq)
    if map_type == "contour":
        return unpack_rows(contours, seq.width)
    if map_type == "velocity":
        return unpack_rows(velocities, seq.width)
    raise ValueError(f"unknown map type {map_type!r}; expected one of {MAP_TYPES}")


# -- densities ---------------------------------------------------------------


@dataclass
class DensityCounts:
    """Mergeable active-pixel counts for all three map types."""

    pixels: int = 0
    frames: int = 0
    # velocity frames that have a predecessor
    later_frames: int = 0
    active: dict = field(default_factory=lambda: dict.fromkeys(MAP_TYPES, 0))
    per_sequence: list = field(default_factory=list)

    @classmethod
    def of_sequence(cls, seq: SilhouetteSequence) -> DensityCounts:
        silhouettes = seq.stacked_words()
        contours, velocities = sequence_map_words(seq)
        active = {
            "silhouette": int(np.bitwise_count(silhouettes).sum()),
            "contour": int(np.bitwise_count(contours).sum()),
            "velocity": int(np.bitwise_count(velocities).sum()),
        }
        pixels = seq.height * seq.width
        n = len(seq)
        return cls(pixels, n, n - 1, active, [(seq.label, n, dict(active))])

    def merge(self, other: DensityCounts) -> DensityCounts:
        if self.frames and other.frames and self.pixels != other.pixels:
            raise ValueError(f"frame sizes differ: {self.pixels} vs {other.pixels} pixels")
        return DensityCounts(
            self.pixels or other.pixels,
            self.frames + other.frames,
            self.later_frames + other.later_frames,
            {k: self.active[k] + other.active[k] for k in MAP_TYPES},
            self.per_sequence + other.per_sequence,
        )


@dataclass(frozen=True)
class DensityEntry:
    map_type: str
    density: float
    active: int
    frames: int
    per_sequence: tuple[tuple[str, float], ...]
    # velocity only: density over frames 2..f of each sequence
    density_excluding_first: float | None = None

    def to_dict(self) -> dict:
        out = {
            "map_type": self.map_type,
            "density": self.density,
            "active_pixels": self.active,
            "frames": self.frames,
        }
        if self.map_type == "velocity":
            out["first_frame_rule"] = FIRST_FRAME_RULE
            out["density_excluding_first_frame"] = self.density_excluding_first
        out["per_sequence"] = [{"label": lab, "density": d} for lab, d in self.per_sequence]
        return out


def _entry(counts: DensityCounts, map_type: str) -> DensityEntry:
    if map_type not in MAP_TYPES:
        raise ValueError(f"unknown map type {map_type!r}; expected one of {MAP_TYPES}")
    total = counts.frames * counts.pixels
    per_seq = tuple(
        (label, active[map_type] / (n * counts.pixels)) for label, n, active in counts.per_sequence
    )
    excl = None
    if map_type == "velocity" and counts.later_frames:
        # first-frame velocities are all zero, so the active count is unchanged
        excl = counts.active["velocity"] / (counts.later_frames * counts.pixels)
    return DensityEntry(map_type, counts.active[map_type] / total, counts.active[map_type],
                        counts.frames, per_seq, excl)


def count_corpus(corpus: Iterable[SilhouetteSequence]) -> DensityCounts:
    counts = DensityCounts()
    for seq in _require(corpus):
        counts = counts.merge(DensityCounts.of_sequence(seq))
    return counts


def compute_density(corpus: Iterable[SilhouetteSequence], map_type: MapType) -> DensityEntry:
    """Fraction of active pixels of one map type over all frames and pixels."""
    return _entry(count_corpus(corpus), map_type)


@dataclass(frozen=True)
class DensityReport:
    silhouette: DensityEntry
    contour: DensityEntry
    velocity: DensityEntry
    frames: int

    @property
    def acr_contour(self) -> float:
        return compute_acr([(self.silhouette.density, self.contour.density)])

    @property
    def acr_velocity(self) -> float:
        return compute_acr([(self.silhouette.density, self.velocity.density)])

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "silhouette": self.silhouette.to_dict(),
            "contour": self.contour.to_dict(),
            "velocity": self.velocity.to_dict(),
        }


def density_report(corpus: Iterable[SilhouetteSequence]) -> DensityReport:
    counts = count_corpus(corpus)
    return DensityReport(*(_entry(counts, m) for m in MAP_TYPES), frames=counts.frames)


def compute_acr(densities: Sequence[tuple[float, float]]) -> float:
    """Mean over datasets of ``map density / silhouette density``.

    ``densities`` holds one ``(silhouette, map)`` pair per dataset.
    """
    if not densities:
        raise ValueError("need at least one dataset")
    ratios = []
    for p_s, p_x in densities:
        if p_s <= 0:
            raise ValueError(f"silhouette density must be positive, got {p_s}")
        ratios.append(p_x / p_s)
    return sum(ratios) / len(ratios)


def acr_table(reference: dict[str, dict[str, float]]) -> dict:
    """ACR rows for per-dataset densities ``{name: {silhouette, contour, velocity}}``."""
    rows = list(reference.values())
    return {
        "datasets": list(reference),
        "silhouette": 1.0,
        "contour": compute_acr([(r["silhouette"], r["contour"]) for r in rows]),
        "velocity": compute_acr([(r["silhouette"], r["velocity"]) for r in rows]),
    }


# -- token-frequency histograms ----------------------------------------------------


@dataclass(frozen=True)
class FrequencyHistogram:
    edges: np.ndarray
    counts: np.ndarray
    zero_count: int
    tag: str

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("tag,lower,upper,count\n")
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            buf.write(f"{self.tag},{lo:.17g},{hi:.17g},{int(c)}\n")
        buf.write(f"{self.tag},0,0,{self.zero_count}\n")
        return buf.getvalue()


def histogram_from_values(values, bins: int = 20, tag: str = "values", low: float | None = None) -> FrequencyHistogram:
    """Log-spaced histogram of frequencies on ``[low, 1]``; zeros counted aside.

    ``low`` defaults to one decade below the smallest nonzero value.
    """
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    values = np.asarray(values, dtype=np.float64)
    nonzero = values[values > 0]
    if low is None:
        smallest = nonzero.min() if nonzero.size else 0.1
        low = 10.0 ** (np.floor(np.log10(smallest)) - 1)
    edges = np.logspace(np.log10(low), 0.0, bins + 1)
    counts, _ = np.histogram(np.clip(nonzero, low, 1.0), bins=edges)
    return FrequencyHistogram(edges, counts, int(values.size - nonzero.size), tag)


def compute_histogram(
    freq: FrequencyTable, channel: str = "all", bins: int = 20, low: float | None = None
) -> FrequencyHistogram:
    """Histogram of token frequencies for one channel (or ``"all"``).

    ``low`` defaults to one decade below ``1 / frame_count``, the smallest
    frequency a token can have in the corpus.
    """
    if channel == "all":
        values = freq.frequencies
    elif channel in CHANNELS:
        values = freq.frequencies[freq.channels == CHANNELS.index(channel)]
    else:
        raise ValueError(f"unknown channel {channel!r}")
    if low is None:
        low = 10.0 ** (np.floor(np.log10(1.0 / freq.frame_count)) - 1)
    return histogram_from_values(values, bins, channel, low)


# -- heatmaps ---------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyHeatmap:
    values: np.ndarray
    map_type: str
    normalization: str

    def to_csv(self) -> str:
        return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in self.values)

    def to_pgm(self, bits: int = 8) -> bytes:
        """Linear scaling: 0 -> 0, 1 -> 255 (8-bit) or 65535 (16-bit)."""
        if bits not in (8, 16):
            raise ValueError("PGM heatmaps are 8- or 16-bit")
        maxval = (1 << bits) - 1
        return encode_pgm(np.rint(np.clip(self.values, 0.0, 1.0) * maxval).astype(np.int64), maxval)


def _activation_frequency(corpus: list[SilhouetteSequence], map_type: str) -> np.ndarray:
    total = None
    frames = 0
    for seq in corpus:
        part = _map_stack(seq, map_type).sum(axis=0, dtype=np.int64)
        if total is not None and part.shape != total.shape:
            raise ValueError("heatmap corpus mixes frame sizes")
        total = part if total is None else total + part
        frames += len(seq)
    return total / frames


def compute_heatmap(
    corpus: Iterable[SilhouetteSequence],
    map_type: MapType,
    normalization: Literal["raw", "contour-range"] = "raw",
) -> FrequencyHeatmap:
    """Per-pixel activation frequency of a map type.

    ``contour-range`` divides by the largest contour-pixel frequency of the
    same corpus and clamps to ``[0, 1]``; silhouettes saturate, velocities
    stay dim.
    """
    corpus = _require(corpus)
    values = _activation_frequency(corpus, map_type)
    if normalization == "contour-range":
        scale = values.max() if map_type == "contour" else _activation_frequency(corpus, "contour").max()
        if scale > 0:
            values = np.clip(values / scale, 0.0, 1.0)
    elif normalization != "raw":
        raise ValueError(f"unknown normalization {normalization!r}")
    return FrequencyHeatmap(values, map_type, normalization)


# -- round trip ---------------------------------------------------------------------


@dataclass(frozen=True)
class RoundtripReport:
    mode: str
    frames: int
    mismatched_frames: int
    mismatched_pixels: int
    worst: tuple[str, int, int] | None  # (sequence label, frame index, pixels)

    def to_dict(self) -> dict:
        worst = None
        if self.worst is not None:
            worst = {"sequence": self.worst[0], "t": self.worst[1], "mismatched_pixels": self.worst[2]}
        return {
            "mode": self.mode,
            "frames": self.frames,
            "mismatched_frames": self.mismatched_frames,
            "mismatched_pixels": self.mismatched_pixels,
            "worst_frame": worst,
        }


def frame_mismatches(seq: SilhouetteSequence, mode: FillMode = "exterior-fill") -> list[int]:
    """Hamming distance between each frame and its contour reconstruction."""
    contours, _ = sequence_map_words(seq)
    out = []
    for frame, words in zip(seq.frames, contours):
        rebuilt = reconstruct_silhouette(type(frame)(frame.height, frame.width, words), mode)
        out.append((rebuilt ^ frame).popcount())
    return out


def roundtrip_report(corpus: Iterable[SilhouetteSequence], mode: FillMode = "exterior-fill") -> RoundtripReport:
    frames = bad_frames = bad_pixels = 0
    worst = None
    for seq in corpus:
        for t, d in enumerate(frame_mismatches(seq, mode)):
            frames += 1
            if d:
                bad_frames += 1
                bad_pixels += d
                if worst is None or d > worst[2]:
                    worst = (seq.label, t, d)
    return RoundtripReport(mode, frames, bad_frames, bad_pixels, worst)
