"""Efficient channel attention (ECA) block, inference only.

ECA re-weights feature-map channels without dimensionality reduction: global
average pooling produces one descriptor per channel, a short 1-D convolution
mixes neighbouring channels, and a sigmoid gate scales each channel of the
input.  The kernel length adapts to the channel count, k ~ odd(log2(C)/gamma
+ b/gamma), so cross-channel interaction stays local and cheap.

This implementation exists for correctness and placement checks, not
training: kernels are loaded from a file or seeded at random, and the block
runs on plain numpy arrays shaped (C, H, W).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d
from scipy.special import expit

from .errors import DomainError, ShapeError


def eca_kernel_size(channels: int, gamma: float = 2.0, b: float = 1.0) -> int:
    """Adaptive kernel length: nearest odd integer to (log2(C) + b) / gamma.

    Ties between two odd neighbours round down; the result is clamped to at
    least 1 and is non-decreasing in the channel count.
    """
    if channels < 1:
        raise DomainError(f"channel count must be >= 1, got {channels}")
    t = (math.log2(channels) + b) / gamma
    if t <= 1.0:
        return 1
    lower = int(math.floor(t))
    if lower % 2 == 0:
        lower -= 1
    upper = lower + 2
    return lower if (t - lower) <= (upper - t) else upper


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Channel descriptors: mean over the spatial extent of each channel."""
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"feature map must be (C, H, W), got shape {x.shape}")
    return x.mean(axis=(1, 2), dtype=np.float64)


@dataclass(frozen=True)
class EcaBlock:
    """One attention block: channel count plus the 1-D kernel coefficients."""

    channels: int
    kernel: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.ndim != 1 or k.size < 1 or k.size % 2 == 0:
            raise DomainError(f"kernel must be 1-D with odd length, got {k.shape}")
        if self.channels < 1:
            raise DomainError(f"channel count must be >= 1, got {self.channels}")
        if k.size > self.channels:
            raise DomainError(
                f"kernel length {k.size} exceeds channel count {self.channels}")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def kernel_size(self) -> int:
        return int(self.kernel.size)

    @classmethod
    def random(cls, channels: int, seed: int = 0, gamma: float = 2.0,
               b: float = 1.0) -> "EcaBlock":
        """Seeded random kernel at the adaptive size (stand-in for training)."""
        k = eca_kernel_size(channels, gamma=gamma, b=b)
        rng = np.random.default_rng(seed)
        return cls(channels=channels, kernel=rng.normal(0.0, 1.0 / k, size=k))


def eca_gate(block: EcaBlock, x: np.ndarray) -> np.ndarray:
    """Per-channel attention weights: sigmoid(corr1d(gap(x), kernel)).

    The channel convolution is zero padded by (k-1)/2 so the gate has exactly
    one entry per channel, and follows conv-layer (cross-correlation)
    orientation.  The gate depends on x only through the channel means.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"feature map must be (C, H, W), got shape {x.shape}")
    if x.shape[0] != block.channels:
        raise ShapeError(
            f"block expects {block.channels} channels, feature map has {x.shape[0]}")
    g = global_avg_pool(x)
    mixed = correlate1d(g, block.kernel, mode="constant", cval=0.0)
    return expit(mixed)


def eca_forward(block: EcaBlock, x: np.ndarray) -> np.ndarray:
    """Weight each channel of x by its attention gate.

    Output shape equals input shape and out[c] is exactly gate[c] * x[c];
    there is no dimensionality reduction anywhere.
    """
    x = np.asarray(x)
    gate = eca_gate(block, x)
    if x.dtype.kind == "f":
        gate = gate.astype(x.dtype)
    return x * gate[:, None, None]


def save_kernel(path, kernel: np.ndarray) -> None:
    """Text file, one coefficient per line."""
    with open(path, "w", encoding="ascii") as fh:
        for w in np.asarray(kernel, dtype=np.float64):
            fh.write(f"{w!r}\n")


def load_kernel(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        values = [float(ln) for ln in fh if ln.strip()]
    return np.asarray(values, dtype=np.float64)


ECA_POSITIONS = ("pre_conv1", "pre_conv2")


@dataclass(frozen=True)
class StageAttention:
    """Attention placement for one encoder/decoder stage."""

    index: int
    channels: int
    kernel_size: int
    positions: tuple[str, str] = ECA_POSITIONS


@dataclass(frozen=True)
class AttentionUnetManifest:
    """Where the ECA blocks sit in the segmentation network.

    Every stage carries exactly two blocks, one ahead of each of its two
    convolutional blocks, so both shallow and deep features get re-weighted.
    """

    stages: tuple[StageAttention, ...]

    def block_count(self) -> int:
        return sum(len(s.positions) for s in self.stages)

    def to_csv(self) -> str:
        lines = ["stage,position,channels,kernel_size"]
        for s in self.stages:
            for pos in s.positions:
                lines.append(f"{s.index},{pos},{s.channels},{s.kernel_size}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"attention manifest: {len(self.stages)} stages, "
                 f"{self.block_count()} eca blocks"]
        for s in self.stages:
            blocks = ", ".join(f"eca(k={s.kernel_size}) @ {pos}"
                               for pos in s.positions)
            lines.append(f"  stage {s.index} (channels={s.channels}): {blocks}")
        return "\n".join(lines) + "\n"


def build_attention_manifest(stage_channels, gamma: float = 2.0,
                             b: float = 1.0) -> AttentionUnetManifest:
    """Two ECA blocks per stage, kernel sizes from the adaptive rule."""
    channels = list(stage_channels)
    if not channels:
        raise DomainError("stage channel list must not be empty")
    stages = tuple(
        StageAttention(index=i, channels=int(c),
                       kernel_size=eca_kernel_size(int(c), gamma=gamma, b=b))
        for i, c in enumerate(channels))
    return AttentionUnetManifest(stages=stages)
