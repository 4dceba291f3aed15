"""Offline scoring of segmentation masks against ground truth.

Void ground-truth pixels are unlabeled, not negatives, so every metric here
ignores them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from trailnav.errors import DimensionMismatch, NoEvaluablePixels
from trailnav.mask_core import N_CLASSES, SegClass, SegMask

PROB_FLOOR = 1e-12
SCORED_CLASSES = (SegClass.TRAVERSABLE, SegClass.UNTRAVERSABLE)


@dataclass(frozen=True, eq=False)
class ProbMask:
    """Per-pixel class probabilities, shape (height, width, n_classes)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 3 or p.shape[0] < 1 or p.shape[1] < 1 or p.shape[2] < 1:
            raise ValueError(f"expected (H, W, C) probabilities, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if np.any(np.abs(p.sum(axis=-1) - 1.0) > 1e-6):
            raise ValueError("per-pixel probabilities must sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def height(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def one_hot(cls, mask: SegMask, n_classes: int = N_CLASSES) -> ProbMask:
        return cls(np.eye(n_classes)[mask.data])

    @classmethod
    def uniform(cls, width: int, height: int, n_classes: int = N_CLASSES) -> ProbMask:
        return cls(np.full((height, width, n_classes), 1.0 / n_classes))

    def argmax(self) -> SegMask:
        return SegMask(np.argmax(self.probs, axis=-1).astype(np.uint8))


@dataclass(frozen=True)
class EvalReport:
    cross_entropy: float | None
    per_class_iou: dict
    pixel_accuracy: float
    evaluated_pixels: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_dims(gt: SegMask, shape):
    if tuple(gt.shape) != tuple(shape[:2]):
        raise DimensionMismatch(f"ground truth is {gt.shape}, prediction is {tuple(shape[:2])}")


def cross_entropy(gt: SegMask, pred: ProbMask) -> float:
    """Mean -log p(true class) over non-void ground-truth pixels, in nats."""
    _check_dims(gt, pred.probs.shape)
    keep = gt.data != SegClass.VOID
    n = int(np.count_nonzero(keep))
    if n == 0:
        raise NoEvaluablePixels("ground truth is entirely void")
    labels = gt.data[keep].astype(np.intp)
    if labels.max() >= pred.probs.shape[2]:
        raise DimensionMismatch("prediction has fewer classes than the ground truth uses")
    p_true = pred.probs[keep][np.arange(n), labels]
    return float(-np.log(np.maximum(p_true, PROB_FLOOR)).mean()) + 0.0  # no negative zero


def overlap_metrics(gt: SegMask, pred_hard: SegMask) -> dict:
    """Per-class IoU and pixel accuracy over non-void ground-truth pixels.

    IoU is None for a class absent from both ground truth and prediction.
    """
    _check_dims(gt, pred_hard.shape)
    keep = gt.data != SegClass.VOID
    g, p = gt.data[keep], pred_hard.data[keep]
    n = int(g.size)
    ious = {}
    for c in SCORED_CLASSES:
        inter = int(np.count_nonzero((g == c) & (p == c)))
        union = int(np.count_nonzero((g == c) | (p == c)))
        ious[c.name.lower()] = inter / union if union else None
    acc = float(np.count_nonzero(g == p)) / n if n else 0.0
    return {"per_class_iou": ious, "pixel_accuracy": acc, "evaluated_pixels": n}


def evaluate(gt: SegMask, pred) -> EvalReport:
    """Score a hard (SegMask) or soft (ProbMask) prediction."""
    if isinstance(pred, ProbMask):
        ce = cross_entropy(gt, pred)
        hard = pred.argmax()
    else:
        ce, hard = None, pred
    return EvalReport(cross_entropy=ce, **overlap_metrics(gt, hard))
