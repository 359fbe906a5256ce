"""Token stream serialization.

JSONL: one object per frame, ``{"seq": label, "t": index, "tokens": [...],
"weights": [...]}``, frames in corpus order, ``t`` counting from 0.

SILT binary (little-endian)::

    b"SILT"  u8 version (1)  u32 sequence count
    per sequence:  u16 label byte length, UTF-8 label, u32 frame count
        per frame:  u32 token count n, n x u32 token IDs, n x f64 weights
"""

from __future__ import annotations

import json
import struct
from typing import IO, Iterable, Iterator

import numpy as np

from .vocab import TokenFrame

SILT_MAGIC = b"SILT"
SILT_VERSION = 1


class StreamFormatError(ValueError):
    pass


def jsonl_line(label: str, tf: TokenFrame) -> str:
    return json.dumps(
        {"seq": label, "t": tf.index, "tokens": tf.tokens.tolist(), "weights": tf.weights.tolist()}
    )


def write_jsonl(stream: Iterable[tuple[str, list[TokenFrame]]], out: IO[str]) -> int:
    n = 0
    for label, frames in stream:
        for tf in frames:
            out.write(jsonl_line(label, tf))
            out.write("\n")
            n += 1
    return n


def read_jsonl(lines: Iterable[str]) -> Iterator[tuple[str, TokenFrame]]:
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            tf = TokenFrame(
                obj["t"],
                np.array(obj["tokens"], dtype=np.int64),
                np.array(obj["weights"], dtype=np.float64),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise StreamFormatError(f"line {lineno}: {exc}") from None
        yield obj["seq"], tf


def write_binary(stream: Iterable[tuple[str, list[TokenFrame]]], out: IO[bytes]) -> int:
    stream = list(stream)
    out.write(SILT_MAGIC + struct.pack("<BI", SILT_VERSION, len(stream)))
    n = 0
    for label, frames in stream:
        raw = label.encode("utf-8")
        out.write(struct.pack("<H", len(raw)) + raw + struct.pack("<I", len(frames)))
        for tf in frames:
            out.write(struct.pack("<I", len(tf)))
            out.write(tf.tokens.astype("<u4").tobytes())
            out.write(tf.weights.astype("<f8").tobytes())
            n += 1
    return n


def read_binary(data: bytes) -> list[tuple[str, list[TokenFrame]]]:
    pos = 0

    def take(size: int) -> bytes:
        nonlocal pos
        if pos + size > len(data):
            raise StreamFormatError(f"offset {pos}: truncated stream, need {size} more bytes")
        chunk = data[pos : pos + size]
        pos += size
        return chunk

    if take(4) != SILT_MAGIC:
        raise StreamFormatError("offset 0: bad magic, expected b'SILT'")
    version, n_seq = struct.unpack("<BI", take(5))
    if version != SILT_VERSION:
        raise StreamFormatError(f"offset 4: unsupported version {version}")
    out = []
    for _ in range(n_seq):
        (length,) = struct.unpack("<H", take(2))
        label = take(length).decode("utf-8")
        (n_frames,) = struct.unpack("<I", take(4))
        frames = []
        for t in range(n_frames):
            (n,) = struct.unpack("<I", take(4))
            tokens = np.frombuffer(take(4 * n), dtype="<u4").astype(np.int64)
            weights = np.frombuffer(take(8 * n), dtype="<f8").astype(np.float64)
            frames.append(TokenFrame(t, tokens, weights))
        out.append((label, frames))
    if pos != len(data):
        raise StreamFormatError(f"offset {pos}: {len(data) - pos} trailing bytes")
    return out
