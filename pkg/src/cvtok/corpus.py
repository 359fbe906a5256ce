"""Silhouette corpus files: PGM frames, packed SILB sequences, directory trees.

SILB layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"SILB"
    4       1     format version (1)
    5       2     height
    7       2     width
    9       4     frame count
    13      ...   frames in order; each row packed MSB-first, padded to a byte

A corpus directory holds one entry per sequence, visited in lexicographic
order: either ``<id>.silb`` or a directory ``<id>/`` of numbered frames
(``1.pgm``, ``002.pgm``, ...) sorted by their numeric value.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .grid import BitGrid, SilhouetteSequence

SILB_MAGIC = b"SILB"
SILB_VERSION = 1
_SILB_HEADER = struct.Struct("<4sBHHI")

_WHITESPACE = b" \t\n\r\v\f"


class CorpusFormatError(ValueError):
    """Malformed or inconsistent corpus input."""


# -- PGM --------------------------------------------------------------------


def _pgm_header(data: bytes) -> tuple[bytes, list[int], int]:
    """Parse magic, width, height, maxval; return them and the payload offset."""
    if len(data) < 2:
        raise CorpusFormatError(f"offset 0: file too short for a PGM magic number ({len(data)} bytes)")
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise CorpusFormatError(f"offset 0: unsupported magic {magic!r}, expected b'P2' or b'P5'")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos] in _WHITESPACE:
            pos += 1
        if pos < len(data) and data[pos] == ord("#"):
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        token = data[start:pos]
        if not token:
            raise CorpusFormatError(f"offset {start}: header ended before width, height and maxval")
        if not token.isdigit():
            raise CorpusFormatError(f"offset {start}: expected a decimal header field, got {token!r}")
        fields.append(int(token))
    width, height, maxval = fields
    if width == 0 or height == 0:
        raise CorpusFormatError(f"offset {start}: zero image dimension {width}x{height}")
    if not 0 < maxval <= 65535:
        raise CorpusFormatError(f"offset {start}: maxval {maxval} outside 1..65535")
    return magic, fields, pos


def read_pgm(data: bytes) -> BitGrid:
    """Decode a P2 or P5 PGM; a pixel is foreground when ``value > maxval / 2``."""
    magic, (width, height, maxval), pos = _pgm_header(data)
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise CorpusFormatError(f"offset {pos}: missing whitespace after maxval")
        pos += 1
        depth = 1 if maxval < 256 else 2
        expected = count * depth
        actual = len(data) - pos
        if actual < expected:
            raise CorpusFormatError(
                f"offset {pos}: truncated P5 payload, expected {expected} bytes, got {actual}"
            )
        dtype = np.uint8 if depth == 1 else np.dtype(">u2")
        values = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    else:
        tokens = data[pos:].split()
        if len(tokens) < count:
            raise CorpusFormatError(
                f"offset {len(data)}: truncated P2 payload, expected {count} samples, got {len(tokens)}"
            )
        try:
            values = np.array([int(tok) for tok in tokens[:count]], dtype=np.int64)
        except ValueError as exc:
            raise CorpusFormatError(f"offset {pos}: non-numeric P2 sample ({exc})") from None
    values = values.astype(np.int64)
    if values.size and int(values.max()) > maxval:
        raise CorpusFormatError(f"sample value {int(values.max())} exceeds maxval {maxval}")
    return BitGrid.from_array((2 * values > maxval).reshape(height, width))


def encode_pgm(values: np.ndarray, maxval: int = 255) -> bytes:
    """Binary PGM of a 2-D integer array; 16-bit samples are big-endian."""
    values = np.asarray(values)
    height, width = values.shape
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + values.astype(dtype).tobytes()


def write_pgm(grid: BitGrid) -> bytes:
    """P5, maxval 255, samples 0 and 255."""
    return encode_pgm(grid.to_array() * 255, 255)


# -- SILB -------------------------------------------------------------------


def write_packed(seq: SilhouetteSequence) -> bytes:
    if len(seq) == 0:
        raise CorpusFormatError("cannot pack an empty sequence")
    if seq.height > 0xFFFF or seq.width > 0xFFFF:
        raise CorpusFormatError(f"frame size {seq.height}x{seq.width} overflows the 16-bit SILB fields")
    if len(seq) > 0xFFFFFFFF:
        raise CorpusFormatError("frame count overflows the 32-bit SILB field")
    header = _SILB_HEADER.pack(SILB_MAGIC, SILB_VERSION, seq.height, seq.width, len(seq))
    bits = np.stack([f.to_array() for f in seq.frames])
    return header + np.packbits(bits, axis=-1).tobytes()


def read_packed(data: bytes, label: str = "", source: str = "") -> SilhouetteSequence:
    if len(data) < _SILB_HEADER.size:
        raise CorpusFormatError(
            f"offset 0: SILB header needs {_SILB_HEADER.size} bytes, got {len(data)}"
        )
    magic, version, height, width, count = _SILB_HEADER.unpack_from(data)
    if magic != SILB_MAGIC:
        raise CorpusFormatError(f"offset 0: bad magic {magic!r}, expected {SILB_MAGIC!r}")
    if version != SILB_VERSION:
        raise CorpusFormatError(f"offset 4: unsupported SILB version {version}")
    if height == 0 or width == 0:
        raise CorpusFormatError(f"offset 5: zero frame dimension {height}x{width}")
    if count == 0:
        raise CorpusFormatError("offset 9: SILB file holds no frames")
    row_bytes = (width + 7) // 8
    expected = count * height * row_bytes
    actual = len(data) - _SILB_HEADER.size
    if actual != expected:
        kind = "truncated" if actual < expected else "oversized"
        raise CorpusFormatError(
            f"offset {_SILB_HEADER.size}: {kind} SILB payload, expected {expected} bytes, got {actual}"
        )
    payload = np.frombuffer(data, dtype=np.uint8, offset=_SILB_HEADER.size)
    bits = np.unpackbits(payload.reshape(count, height, row_bytes), axis=-1)
    if bits[..., width:].any():
        raise CorpusFormatError("nonzero padding bits in SILB payload")
    frames = tuple(BitGrid.from_array(frame) for frame in bits[..., :width])
    return SilhouetteSequence(frames, label=label, source=source)


# -- directory corpora --------------------------------------------------------


def _frame_number(path: Path) -> int:
    try:
        return int(path.stem)
    except ValueError:
        raise CorpusFormatError(f"{path}: frame file name is not a number") from None


def load_sequence_dir(path: str | os.PathLike) -> SilhouetteSequence:
    path = Path(path)
    files = sorted((p for p in path.iterdir() if p.suffix.lower() == ".pgm"), key=_frame_number)
    if not files:
        raise CorpusFormatError(f"{path}: sequence directory has no .pgm frames")
    frames = []
    for f in files:
        try:
            grid = read_pgm(f.read_bytes())
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"{f}: {exc}") from None
        if frames and grid.shape != frames[0].shape:
            raise CorpusFormatError(
                f"{f}: frame is {grid.height}x{grid.width} but the sequence is "
                f"{frames[0].height}x{frames[0].width}"
            )
        frames.append(grid)
    return SilhouetteSequence(tuple(frames), label=path.name, source=str(path))


def load_packed(path: str | os.PathLike) -> SilhouetteSequence:
    path = Path(path)
    try:
        return read_packed(path.read_bytes(), label=path.stem, source=str(path))
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"{path}: {exc}") from None


def load_corpus(path: str | os.PathLike) -> list[SilhouetteSequence]:
    """Read every sequence under ``path`` (or a single ``.silb`` file)."""
    path = Path(path)
    if path.is_file():
        return [load_packed(path)]
    if not path.is_dir():
        raise FileNotFoundError(f"{path}: no such corpus file or directory")
    corpus = []
    for entry in sorted(path.iterdir(), key=lambda p: p.name):
        if entry.is_dir():
            corpus.append(load_sequence_dir(entry))
        elif entry.suffix.lower() == ".silb":
            corpus.append(load_packed(entry))
    return corpus


def save_corpus(corpus: list[SilhouetteSequence], path: str | os.PathLike, fmt: str = "silb") -> None:
    """Write a corpus as ``<label>.silb`` files or ``<label>/<NNN>.pgm`` trees."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for seq in corpus:
        if not seq.label or os.sep in seq.label:
            raise CorpusFormatError(f"sequence label {seq.label!r} is not usable as a file name")
        if fmt == "silb":
            (path / f"{seq.label}.silb").write_bytes(write_packed(seq))
        elif fmt == "pgm":
            seq_dir = path / seq.label
            seq_dir.mkdir(exist_ok=True)
            digits = max(3, len(str(len(seq))))
            for t, frame in enumerate(seq.frames, start=1):
                (seq_dir / f"{t:0{digits}d}.pgm").write_bytes(write_pgm(frame))
        else:
            raise ValueError(f"unknown corpus format {fmt!r}")
