"""Dataset preparation: relabeling to three classes, box labels, augmentation
and garden/urban weighted sampling."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import ndimage

from trailnav.errors import BoxOutOfBounds, EmptyDataset, UnmappedId
from trailnav.mask_core import SegClass, SegMask

T, U, V = SegClass.TRAVERSABLE, SegClass.UNTRAVERSABLE, SegClass.VOID

# Cityscapes label ids 0..33. Flat drivable/walkable ground is traversable;
# people and natural ground cover (the human and nature categories) are the
# untraversable examples; everything else carries no trail information and
# stays Void, so it is excluded from training loss and evaluation.
_CITYSCAPES_NAMES = (
    "unlabeled", "ego vehicle", "rectification border", "out of roi", "static",
    "dynamic", "ground", "road", "sidewalk", "parking", "rail track", "building",
    "wall", "fence", "guard rail", "bridge", "tunnel", "pole", "polegroup",
    "traffic light", "traffic sign", "vegetation", "terrain", "sky", "person",
    "rider", "car", "truck", "bus", "caravan", "trailer", "train", "motorcycle",
    "bicycle",
)
_TRAVERSABLE_IDS = {7, 8, 9}  # road, sidewalk, parking
_UNTRAVERSABLE_IDS = {21, 22, 24, 25}  # vegetation, terrain, person, rider
CITYSCAPES_IDS = {
    i: (name, T if i in _TRAVERSABLE_IDS else U if i in _UNTRAVERSABLE_IDS else V)
    for i, name in enumerate(_CITYSCAPES_NAMES)
}

FLIP_PROB = 0.5
MAX_ROTATION_DEG = 5.0


@dataclass(frozen=True)
class LabelMap:
    mapping: dict
    name: str = "custom"

    @classmethod
    def cityscapes(cls) -> LabelMap:
        return cls({k: c for k, (_, c) in CITYSCAPES_IDS.items()}, "cityscapes-3class")

    @classmethod
    def load(cls, path) -> LabelMap:
        """JSON: ``{"name": ..., "mapping": {"7": "traversable", "21": 2, ...}}``."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        mapping = {}
        for key, val in raw["mapping"].items():
            if isinstance(val, str):
                val = SegClass[val.upper()]
            mapping[int(key)] = SegClass(int(val))
        return cls(mapping, raw.get("name", Path(path).stem))

    def lut(self) -> np.ndarray:
        """256-entry lookup table; unmapped ids hold 255."""
        table = np.full(256, 255, dtype=np.uint8)
        for k, c in self.mapping.items():
            table[int(k)] = int(c)
        return table


def relabel(source_ids, label_map: LabelMap) -> SegMask:
    ids = np.asarray(source_ids)
    if ids.size and (ids.min() < 0 or ids.max() > 255):
        raise UnmappedId(f"source ids out of 8-bit range: {ids.min()}..{ids.max()}")
    out = label_map.lut()[ids.astype(np.intp)]
    if np.any(out == 255):
        missing = sorted(set(np.unique(ids[out == 255]).tolist()))
        raise UnmappedId(f"ids {missing} not in label map {label_map.name!r}")
    return SegMask(out)


@dataclass(frozen=True)
class BoxLabel:
    x: int
    y: int
    w: int
    h: int
    cls: SegClass = SegClass.TRAVERSABLE


def boxes_to_mask(boxes, size) -> SegMask:
    """Rasterize rectangle labels; everything outside the boxes stays Void."""
    width, height = size
    out = np.zeros((height, width), dtype=np.uint8)
    for b in boxes:
        if b.w < 1 or b.h < 1 or b.x < 0 or b.y < 0 or b.x + b.w > width or b.y + b.h > height:
            raise BoxOutOfBounds(f"{b} does not fit in {width}x{height}")
        out[b.y : b.y + b.h, b.x : b.x + b.w] = int(b.cls)
    return SegMask(out)


def read_box_csv(path) -> dict[str, list[BoxLabel]]:
    """CSV with header ``image,x,y,w,h``; grouped by image name, file order kept."""
    groups: dict[str, list[BoxLabel]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            box = BoxLabel(int(row["x"]), int(row["y"]), int(row["w"]), int(row["h"]))
            groups.setdefault(row["image"], []).append(box)
    return groups


@dataclass(frozen=True)
class AugmentRecord:
    flip: bool
    angle_deg: float
    # RGB inputs are scaled to [0, 1]; class masks have no intensities, so
    # this is carried as metadata only
    normalize: tuple = (0.0, 1.0)

    def to_dict(self) -> dict:
        return {"flip": self.flip, "angle_deg": self.angle_deg, "normalize": list(self.normalize)}


def draw_augment(rng: np.random.Generator) -> AugmentRecord:
    flip = bool(rng.random() < FLIP_PROB)
    angle = float(rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG))
    return AugmentRecord(flip, angle)


def apply_augment(mask: SegMask, rec: AugmentRecord) -> SegMask:
    data = mask.data[:, ::-1] if rec.flip else mask.data
    if rec.angle_deg != 0.0:
        # nearest neighbour keeps class codes intact; uncovered pixels become Void
        data = ndimage.rotate(data, rec.angle_deg, reshape=False, order=0, mode="constant", cval=int(SegClass.VOID))
    return SegMask(data)


def augment(mask: SegMask, rng: np.random.Generator) -> tuple[SegMask, AugmentRecord]:
    rec = draw_augment(rng)
    return apply_augment(mask, rec), rec


@dataclass(frozen=True)
class SampleWeights:
    garden_weight: Fraction = field(default=Fraction(2))
    cityscape_weight: Fraction = field(default=Fraction(1))

    def __post_init__(self):
        object.__setattr__(self, "garden_weight", Fraction(self.garden_weight))
        object.__setattr__(self, "cityscape_weight", Fraction(self.cityscape_weight))
        if self.garden_weight <= 0 or self.cityscape_weight <= 0:
            raise ValueError("weights must be positive")

    @property
    def ratio(self) -> Fraction:
        return self.garden_weight / self.cityscape_weight


def item_probabilities(n_garden: int, n_city: int, w: SampleWeights) -> np.ndarray:
    if n_garden < 0 or n_city < 0 or n_garden + n_city == 0:
        raise EmptyDataset("need at least one item to sample from")
    mass = np.concatenate([
        np.full(n_garden, float(w.garden_weight)),
        np.full(n_city, float(w.cityscape_weight)),
    ])
    return mass / mass.sum()


def weighted_indices(n_garden: int, n_city: int, w: SampleWeights, epoch_len: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Draw ``epoch_len`` indices with replacement.

    Indices ``0 .. n_garden-1`` are garden images, the rest urban. Each
    garden item carries ``w.ratio`` times the mass of each urban item.
    """
    p = item_probabilities(n_garden, n_city, w)
    return rng.choice(p.size, size=epoch_len, replace=True, p=p)
