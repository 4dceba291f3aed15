"""Mask types, mask file I/O and block-majority downsampling."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from trailnav.errors import IllegalClassValue, IoFailure, MalformedImage, MissingFile, ZeroFactor

DEFAULT_DOWNSAMPLE = 8


class SegClass(enum.IntEnum):
    VOID = 0
    TRAVERSABLE = 1
    UNTRAVERSABLE = 2


N_CLASSES = len(SegClass)


@dataclass(frozen=True, eq=False)
class SegMask:
    """Row-major grid of class codes, shape (height, width), dtype uint8.

    The array is copied and frozen on construction, so a SegMask can be
    handed between threads without defensive copies.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.uint8, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2-D grid, got shape {arr.shape}")
        if arr.max() >= N_CLASSES:
            bad = int(arr.max())
            raise IllegalClassValue(f"class value {bad} outside {{0,1,2}}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def filled(cls, width: int, height: int, cls_value: SegClass) -> SegMask:
        return cls(np.full((height, width), int(cls_value), dtype=np.uint8))

    def __eq__(self, other):
        if not isinstance(other, SegMask):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.shape, self.data.tobytes()))

    def count(self, cls_value: SegClass) -> int:
        return int(np.count_nonzero(self.data == int(cls_value)))

    def fliplr(self) -> SegMask:
        return SegMask(self.data[:, ::-1])


@dataclass(frozen=True, order=True)
class FrameStamp:
    sequence: int
    time: float


def load_mask(path) -> SegMask:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such mask file: {path}")
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "P"):
                raise MalformedImage(f"{path}: expected 8-bit single-channel image, got mode {img.mode}")
            # palette images still carry raw indices; we read those, not colors
            arr = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MalformedImage(f"{path}: {exc}") from exc
    if arr.ndim != 2:
        raise MalformedImage(f"{path}: expected a single channel")
    if arr.max(initial=0) >= N_CLASSES:
        raise IllegalClassValue(f"{path}: pixel value {int(arr.max())} outside {{0,1,2}}")
    return SegMask(arr)


def save_mask(mask: SegMask, path) -> None:
    """Write ``mask`` as PGM (``.pgm``) or PNG (anything else)."""
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".pgm", ".pnm") else "PNG"
    try:
        Image.fromarray(np.ascontiguousarray(mask.data), mode="L").save(path, format=fmt)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def downsample(mask: SegMask, factor: int = DEFAULT_DOWNSAMPLE) -> SegMask:
    """Block-majority downsampling.

    Output dims are ``ceil(dim / factor)``; partial edge blocks vote with the
    pixels they have. Ties go Untraversable > Traversable > Void so thin
    obstacle borders survive.
    """
    if int(factor) != factor or factor < 1:
        raise ZeroFactor(f"downsample factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return mask
    h, w = mask.shape
    oh, ow = -(-h // factor), -(-w // factor)
    padded = np.full((oh * factor, ow * factor), 255, dtype=np.uint8)
    padded[:h, :w] = mask.data
    blocks = padded.reshape(oh, factor, ow, factor)
    counts = np.stack([(blocks == c).sum(axis=(1, 3)) for c in range(N_CLASSES)], axis=-1)
    # count dominates; class code breaks ties because codes are ordered V < T < U
    score = counts * N_CLASSES + np.arange(N_CLASSES)
    return SegMask(np.argmax(score, axis=-1).astype(np.uint8))
