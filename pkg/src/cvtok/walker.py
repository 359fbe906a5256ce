"""Seeded synthetic side-view walker silhouettes.

The figure is a head disc, a torso capsule, two legs swinging in
opposite phase and two arms swinging against the legs.  All geometry is
integer fixed-point (1/16 pixel) and the sine is an integer Bhaskara
approximation, so the same config rasterizes to the same bits on every
platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extractors import enclosed_background, is_hole_free
from .grid import BitGrid, SilhouetteSequence
from .rng import SplitMix64

SUB = 16  # sub-pixel units per pixel
TURN = 1 << 16  # phase units per gait cycle
SINE_ONE = 1 << 14
MIN_SIZE = 16
MAX_RETRIES = 8


class WalkerConfigError(ValueError):
    """The requested figure cannot be drawn in the requested frame."""


def isin(phase: int) -> int:
    """Integer sine of ``phase / TURN`` turns, scaled by ``SINE_ONE``."""
    phase %= TURN
    half = TURN // 2
    u = phase % half
    num = 4 * u * (half - u)
    den = 5 * half * half // 4 - u * (half - u)
    value = SINE_ONE * num // den
    return value if phase < half else -value


@dataclass(frozen=True)
class WalkerConfig:
    seed: int = 0
    frames: int = 30
    height: int = 64
    width: int = 44
    period: int = 24
    stride: int = 7
    head: float = 0.13
    torso: float = 0.34
    hole_free: bool = True

    def validate(self) -> None:
        if self.height < MIN_SIZE or self.width < MIN_SIZE:
            raise WalkerConfigError(
                f"frame {self.height}x{self.width} is below the {MIN_SIZE}x{MIN_SIZE} minimum"
            )
        if self.height > 0xFFFF or self.width > 0xFFFF:
            raise WalkerConfigError("frame dimensions must fit in 16 bits")
        if self.period < 2:
            raise WalkerConfigError(f"gait period must be at least 2 frames, got {self.period}")
        if self.frames < 1:
            raise WalkerConfigError("need at least one frame")
        if self.stride < 0:
            raise WalkerConfigError("stride amplitude must be non-negative")
        if not (0 < self.head and 0 < self.torso and self.head + self.torso < 0.8):
            raise WalkerConfigError(
                f"head ({self.head}) and torso ({self.torso}) fractions leave no room for legs"
            )
        # feet at full swing, plus leg thickness and the largest centre jitter
        reach = self.stride + 2 + self.height * 45 // 1000 + 1
        if 2 * reach >= self.width:
            raise WalkerConfigError(
                f"stride {self.stride} does not fit in a frame {self.width} pixels wide"
            )


@dataclass(frozen=True)
class _Body:
    """Per-sequence body shape, drawn from the seed; lengths in sub-pixels."""

    cx: int
    top: int
    span: int
    head_r: int
    torso_r: int
    torso_len: int
    leg_r: int
    arm_r: int
    arm_len: int
    stride: int
    arm_swing: int
    bob: int
    phase0: int


def _draw_body(cfg: WalkerConfig) -> _Body:
    rng = SplitMix64(cfg.seed)
    head_pm = round(cfg.head * 1000)
    torso_pm = round(cfg.torso * 1000)
    # body height and vertical placement vary by up to a pixel or two
    span = cfg.height * SUB * rng.between(900, 940) // 1000
    top = (cfg.height * SUB - span) // 2 + rng.between(-SUB // 2, SUB // 2)
    scale = rng.between(92, 108)  # percent
    stride = cfg.stride * SUB * rng.between(85, 115) // 100
    return _Body(
        cx=cfg.width * SUB // 2 + rng.between(-SUB, SUB),
        top=top,
        span=span,
        head_r=span * head_pm // 2000,
        torso_r=span * 75 * scale // 100_000,
        torso_len=span * torso_pm // 1000,
        leg_r=span * 42 * scale // 100_000,
        arm_r=span * 28 * scale // 100_000,
        arm_len=span * 300 // 1000,
        stride=stride,
        arm_swing=stride * 2 // 3,
        bob=rng.between(0, SUB // 2),
        phase0=rng.below(TURN),
    )


def _capsule(xs: np.ndarray, ys: np.ndarray, a: tuple[int, int], b: tuple[int, int], r: int):
    """Pixels whose centres lie within ``r`` of segment ``ab`` (exact integers)."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    px, py = xs - ax, ys - ay
    near_a = px * px + py * py <= r * r
    length2 = dx * dx + dy * dy
    if length2 == 0:
        return near_a
    qx, qy = xs - bx, ys - by
    near_b = qx * qx + qy * qy <= r * r
    dot = px * dx + py * dy
    cross = px * dy - py * dx
    near_mid = cross * cross <= r * r * length2
    return np.where(dot <= 0, near_a, np.where(dot >= length2, near_b, near_mid))


def _render(cfg: WalkerConfig, body: _Body, t: int, arm_trim: int) -> np.ndarray:
    phase = body.phase0 + (t % cfg.period) * TURN // cfg.period
    swing = isin(phase)
    ys, xs = np.mgrid[0 : cfg.height, 0 : cfg.width].astype(np.int64)
    xs = xs * SUB + SUB // 2
    ys = ys * SUB + SUB // 2

    # body dips twice per cycle
    lift = body.bob * abs(isin(2 * phase)) // SINE_ONE
    cx = body.cx
    head_y = body.top + body.head_r + lift
    shoulder_y = head_y + body.head_r + body.span * 25 // 1000
    hip_y = shoulder_y + body.torso_len
    ground = body.top + body.span - body.leg_r
    foot = body.stride * swing // SINE_ONE
    hand = body.arm_swing * swing // SINE_ONE
    arm_len = body.arm_len - arm_trim * SUB

    mask = _capsule(xs, ys, (cx, head_y), (cx, head_y), body.head_r)
    mask |= _capsule(xs, ys, (cx, shoulder_y + body.torso_r // 2), (cx, hip_y), body.torso_r)
    for sign in (1, -1):
        mask |= _capsule(xs, ys, (cx, hip_y), (cx + sign * foot, ground), body.leg_r)
        mask |= _capsule(
            xs, ys, (cx, shoulder_y + body.arm_r), (cx - sign * hand, shoulder_y + arm_len), body.arm_r
        )
    return mask


def generate_walker(config: WalkerConfig) -> SilhouetteSequence:
    """Rasterize ``config.frames`` frames of a walking figure.

    With ``hole_free`` set, a frame that encloses background is redrawn with
    progressively shorter arms; if that still fails the holes are filled.
    """
    config.validate()
    body = _draw_body(config)
    frames = []
    for t in range(config.frames):
        mask = _render(config, body, t, 0)
        if config.hole_free:
            grid = BitGrid.from_array(mask)
            trim = 0
            while trim < MAX_RETRIES and not is_hole_free(grid):
                trim += 1
                grid = BitGrid.from_array(_render(config, body, t, trim))
            if not is_hole_free(grid):
                grid = grid | enclosed_background(grid)
            frames.append(grid)
        else:
            frames.append(BitGrid.from_array(mask))
    return SilhouetteSequence(
        tuple(frames), label=f"walker-{config.seed}", source=f"walker:seed={config.seed}"
    )


def sequence_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th sequence of a generated corpus."""
    rng = SplitMix64(seed)
    value = 0
    for _ in range(index + 1):
        value = rng.next()
    return value


def generate_corpus(
    seed: int, sequences: int, frames: int, **overrides
) -> list[SilhouetteSequence]:
    """``sequences`` walkers, each with its own seed derived from ``seed``."""
    corpus = []
    for i in range(sequences):
        cfg = WalkerConfig(seed=sequence_seed(seed, i), frames=frames, **overrides)
        seq = generate_walker(cfg)
        corpus.append(
            SilhouetteSequence(seq.frames, label=f"{i:04d}", source=f"walker:seed={seed}:index={i}")
        )
    return corpus
