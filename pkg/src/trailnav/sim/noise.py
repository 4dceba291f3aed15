"""Seeded segmentation-failure injection.

Every frame draws from its own generator keyed by ``(seed, frame.sequence)``,
so the noise a frame receives does not depend on which frames ran before it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trailnav.mask_core import FrameStamp, SegClass, SegMask

# T <-> U swap; a flipped void pixel reads as obstacle
_FLIP = np.array([SegClass.UNTRAVERSABLE, SegClass.UNTRAVERSABLE, SegClass.TRAVERSABLE], dtype=np.uint8)


@dataclass(frozen=True)
class NoiseModel:
    blob_failure_prob: float = 0.0
    blob_size: float = 30.0  # blob radius, render pixels
    pixel_flip_prob: float = 0.0
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("blob_failure_prob", "pixel_flip_prob", "dropout_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if self.blob_size < 0:
            raise ValueError("blob_size must be >= 0")

    def rng(self, frame: FrameStamp) -> np.random.Generator:
        return np.random.default_rng([self.seed & 0xFFFFFFFF, frame.sequence])


def paint_blob(data: np.ndarray, rng: np.random.Generator, radius: float) -> bool:
    """Paint a Traversable disk centered on a random grass pixel, in place."""
    grass = np.flatnonzero(data == SegClass.UNTRAVERSABLE)
    if grass.size == 0:
        return False
    r, c = divmod(int(grass[rng.integers(grass.size)]), data.shape[1])
    rows, cols = np.ogrid[: data.shape[0], : data.shape[1]]
    disk = (rows - r) ** 2 + (cols - c) ** 2 <= radius * radius
    data[disk & (data != SegClass.VOID)] = SegClass.TRAVERSABLE
    return True


def inject_noise(mask: SegMask, noise: NoiseModel, frame: FrameStamp) -> SegMask:
    rng = noise.rng(frame)
    # fixed draw order keeps streams comparable across parameter settings
    u_drop, u_blob = rng.random(2)
    if u_drop < noise.dropout_prob:
        return SegMask.filled(mask.width, mask.height, SegClass.VOID)
    data = mask.data.copy()
    if u_blob < noise.blob_failure_prob:
        paint_blob(data, rng, noise.blob_size)
    if noise.pixel_flip_prob > 0:
        flip = rng.random(data.shape) < noise.pixel_flip_prob
        data[flip] = _FLIP[data[flip]]
    return SegMask(data)
