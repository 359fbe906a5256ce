import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cvtok.corpus import (
    CorpusFormatError,
    load_corpus,
    read_packed,
    read_pgm,
    save_corpus,
    write_packed,
    write_pgm,
)
from cvtok.grid import BitGrid, SilhouetteSequence

from .oracles import dense, silb_bytes

sequences = st.tuples(st.integers(1, 4), st.integers(1, 9), st.integers(1, 70)).flatmap(
    lambda shape: arrays(np.bool_, shape)
)


def test_p5_threshold():
    data = b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0])
    assert read_pgm(data).to_array().ravel().tolist() == [0, 1, 1, 0]


def test_p2_equivalent():
    p2 = b"P2\n# comment\n2 2\n255\n0 255\n255 0\n"
    p5 = b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0])
    assert read_pgm(p2) == read_pgm(p5)


def test_threshold_is_strictly_above_half():
    # maxval 255: 127 is background, 128 foreground
    assert read_pgm(b"P5 2 1 255 " + bytes([127, 128])).to_array().tolist() == [[0, 1]]
    # maxval 4: 2 is exactly half -> background
    assert read_pgm(b"P2 2 1 4 2 3").to_array().tolist() == [[0, 1]]


def test_sixteen_bit_p5():
    data = b"P5\n3 1\n65535\n" + struct.pack(">3H", 0, 32768, 65535)
    assert read_pgm(data).to_array().tolist() == [[0, 1, 1]]


def test_truncated_p5_names_byte_counts():
    with pytest.raises(CorpusFormatError, match="expected 4 bytes, got 3"):
        read_pgm(b"P5\n2 2\n255\n" + bytes(3))


@pytest.mark.parametrize(
    "data, pattern",
    [
        (b"P6\n2 2\n255\n", "unsupported magic"),
        (b"P5\n2\n", "header ended"),
        (b"P5\n2 x 255\n", "decimal header"),
        (b"P5\n2 2 70000\n", "maxval"),
        (b"P2\n2 2\n255\n0 1 2\n", "truncated P2"),
        (b"P2\n1 1\n10\n11\n", "exceeds maxval"),
        (b"P", "too short"),
    ],
)
def test_malformed_pgm(data, pattern):
    with pytest.raises(CorpusFormatError, match=pattern):
        read_pgm(data)


def test_write_pgm_values():
    data = write_pgm(BitGrid.from_array([[1, 0]]))
    assert data == b"P5\n2 1\n255\n" + bytes([255, 0])


def test_pgm_round_trip_random(rng):
    for _ in range(100):
        h, w = rng.integers(1, 70, size=2)
        g = BitGrid.from_array(rng.random((h, w)) < 0.5)
        assert read_pgm(write_pgm(g)) == g


@given(sequences)
@settings(max_examples=80)
def test_silb_round_trip(frames):
    seq = SilhouetteSequence(tuple(BitGrid.from_array(f) for f in frames))
    data = write_packed(seq)
    assert data == silb_bytes(frames.astype(np.uint8))
    back = read_packed(data)
    assert back.frames == seq.frames
    assert write_packed(back) == data


def test_silb_payload_length(small_corpus):
    data = write_packed(small_corpus[0])
    assert len(data) == 13 + 30 * 64 * 6


@pytest.mark.parametrize(
    "mutate, pattern",
    [
        (lambda d: b"SILX" + d[4:], "bad magic"),
        (lambda d: d[:4] + b"\x02" + d[5:], "version"),
        (lambda d: d[:-1], "truncated"),
        (lambda d: d + b"\x00", "oversized"),
        (lambda d: d[:8], "header"),
        (lambda d: d[:9] + struct.pack("<I", 0) + d[13:], "no frames"),
    ],
)
def test_malformed_silb(mutate, pattern):
    seq = SilhouetteSequence((BitGrid.ones(3, 5),))
    with pytest.raises(CorpusFormatError, match=pattern):
        read_packed(mutate(write_packed(seq)))


def test_silb_rejects_padding_bits():
    data = bytearray(write_packed(SilhouetteSequence((BitGrid.zeros(1, 5),))))
    data[-1] = 0b00000100
    with pytest.raises(CorpusFormatError, match="padding"):
        read_packed(bytes(data))


def test_silb_rejects_oversized_dimensions():
    seq = SilhouetteSequence((BitGrid.zeros(1, 70000),))
    with pytest.raises(CorpusFormatError, match="16-bit"):
        write_packed(seq)


def test_load_numeric_frame_order(tmp_path):
    seq_dir = tmp_path / "a"
    seq_dir.mkdir()
    (seq_dir / "10.pgm").write_bytes(write_pgm(BitGrid.ones(4, 4)))
    (seq_dir / "2.pgm").write_bytes(write_pgm(BitGrid.zeros(4, 4)))
    [seq] = load_corpus(tmp_path)
    assert [f.popcount() for f in seq] == [0, 16]


def test_load_thirty_frames(tmp_path, small_corpus):
    save_corpus(small_corpus[:1], tmp_path, "pgm")
    names = sorted(p.name for p in (tmp_path / "0000").iterdir())
    assert names[0] == "001.pgm" and names[-1] == "030.pgm"
    [seq] = load_corpus(tmp_path)
    assert len(seq) == 30
    assert seq.frames == small_corpus[0].frames


def test_mixed_dimensions_rejected(tmp_path):
    seq_dir = tmp_path / "walk"
    seq_dir.mkdir()
    (seq_dir / "1.pgm").write_bytes(write_pgm(BitGrid.zeros(64, 44)))
    (seq_dir / "2.pgm").write_bytes(write_pgm(BitGrid.zeros(64, 32)))
    with pytest.raises(CorpusFormatError, match="2.pgm"):
        load_corpus(tmp_path)


def test_bad_frame_file_named(tmp_path):
    seq_dir = tmp_path / "walk"
    seq_dir.mkdir()
    (seq_dir / "1.pgm").write_bytes(b"P7 junk")
    with pytest.raises(CorpusFormatError, match="1.pgm"):
        load_corpus(tmp_path)


def test_non_numeric_frame_name(tmp_path):
    seq_dir = tmp_path / "walk"
    seq_dir.mkdir()
    (seq_dir / "first.pgm").write_bytes(write_pgm(BitGrid.zeros(4, 4)))
    with pytest.raises(CorpusFormatError, match="not a number"):
        load_corpus(tmp_path)


def test_silb_corpus_sorted_by_name(tmp_path, small_corpus):
    save_corpus(small_corpus[::-1], tmp_path)
    loaded = load_corpus(tmp_path)
    assert [s.label for s in loaded] == ["0000", "0001", "0002", "0003"]
    assert all(a.frames == b.frames for a, b in zip(loaded, small_corpus))
    assert np.array_equal(dense(loaded[0]), dense(small_corpus[0]))


def test_missing_corpus(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nope")
