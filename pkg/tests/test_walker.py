import numpy as np
import pytest

from cvtok.extractors import extract_sequence_maps, is_hole_free
from cvtok.walker import TURN, WalkerConfig, WalkerConfigError, generate_walker, isin


def test_integer_sine_landmarks():
    assert isin(0) == 0
    assert isin(TURN // 4) == 1 << 14
    assert isin(3 * TURN // 4) == -(1 << 14)
    assert isin(TURN // 2) == 0
    # Bhaskara approximation stays within 0.2% of the true sine
    phases = np.arange(0, TURN, 97)
    approx = np.array([isin(int(p)) for p in phases]) / (1 << 14)
    assert np.max(np.abs(approx - np.sin(2 * np.pi * phases / TURN))) < 2e-3


def test_deterministic():
    cfg = WalkerConfig(seed=99, frames=20)
    assert generate_walker(cfg).frames == generate_walker(cfg).frames


def test_different_seeds_differ():
    a = generate_walker(WalkerConfig(seed=1, frames=3))
    b = generate_walker(WalkerConfig(seed=2, frames=3))
    assert a.frames != b.frames


def test_periodic():
    cfg = WalkerConfig(seed=4, frames=40, period=16)
    seq = generate_walker(cfg)
    assert seq.frames[3] == seq.frames[19]
    maps = extract_sequence_maps(seq)
    assert (maps[19][0] ^ maps[3][0]).popcount() == 0


def test_hole_free_flag(corpus_1000):
    assert all(is_hole_free(f) for seq in corpus_1000 for f in seq)


def test_density_range(corpus_1000):
    frames = [f for seq in corpus_1000 for f in seq]
    assert len(frames) == 1000
    density = sum(f.popcount() for f in frames) / (1000 * 2816)
    assert 0.12 <= density <= 0.30


def test_other_frame_sizes():
    seq = generate_walker(WalkerConfig(seed=1, frames=4, height=128, width=88, stride=14))
    assert (seq.height, seq.width) == (128, 88)
    assert 0.12 <= sum(f.popcount() for f in seq) / (4 * 128 * 88) <= 0.30


@pytest.mark.parametrize(
    "kwargs, pattern",
    [
        (dict(height=8, width=8), "minimum"),
        (dict(period=1), "period"),
        (dict(stride=30), "does not fit"),
        (dict(head=0.5, torso=0.5), "no room"),
        (dict(frames=0), "frame"),
    ],
)
def test_unsatisfiable_configs(kwargs, pattern):
    with pytest.raises(WalkerConfigError, match=pattern):
        generate_walker(WalkerConfig(**kwargs))
