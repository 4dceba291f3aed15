"""Per-row trail midpoints and the start-point yaw angle.

Coordinates: ``x`` is the image column (lateral, positive to the right) and
``y`` counts rows above the bottom row (forward). The start point sits at the
bottom-center of the image, so a yaw of 0 means "straight ahead" and a
positive yaw means the trail bends to the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from trailnav.errors import DegenerateGeometry, InvalidMidline
from trailnav.mask_core import DEFAULT_DOWNSAMPLE, SegClass, SegMask


@dataclass(frozen=True)
class MidlineConfig:
    min_run_width: int = 3
    min_rows: int = 5
    downsample_factor: int = DEFAULT_DOWNSAMPLE

    def __post_init__(self):
        if self.min_run_width < 1:
            raise ValueError("min_run_width must be >= 1")
        if self.min_rows < 2:
            raise ValueError("min_rows must be >= 2")
        if self.downsample_factor < 1:
            raise ValueError("downsample_factor must be >= 1")


@dataclass(frozen=True)
class MidRow:
    row_index: int  # rows above the bottom row
    mid_x: float
    run_width: int


@dataclass(frozen=True)
class MidlineEstimate:
    rows: tuple[MidRow, ...]
    start_point: tuple[float, float]
    valid: bool
    width: int
    height: int

    def offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """(dx, dy) of every midpoint relative to the start point."""
        x0, y0 = self.start_point
        dx = np.array([r.mid_x for r in self.rows], dtype=float) - x0
        dy = np.array([r.row_index for r in self.rows], dtype=float) - y0
        return dx, dy


@dataclass(frozen=True)
class YawEstimate:
    alpha: float


def image_center_x(width: int) -> float:
    # column-index coordinate of the image's vertical center line
    return (width - 1) / 2.0


def row_runs(row: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (left, right) column spans of contiguous Traversable pixels."""
    return runs_by_row(row[np.newaxis, :])[0]


def runs_by_row(grid: np.ndarray) -> list[list[tuple[int, int]]]:
    """``row_runs`` for every row of a 2-D grid, in one pass."""
    h = grid.shape[0]
    on = np.zeros((h, grid.shape[1] + 2), dtype=np.int8)
    on[:, 1:-1] = grid == SegClass.TRAVERSABLE
    d = np.diff(on, axis=1)
    rs, starts = np.nonzero(d == 1)
    _, stops = np.nonzero(d == -1)  # row-major order pairs each start with its stop
    out = [[] for _ in range(h)]
    for r, a, b in zip(rs.tolist(), starts.tolist(), stops.tolist()):
        out[r].append((a, b - 1))
    return out


def _pick_run(runs, ref_x):
    # nearest center, then wider, then leftmost
    return min(runs, key=lambda r: (abs((r[0] + r[1]) / 2.0 - ref_x), -(r[1] - r[0]), r[0]))


def extract_midline(mask: SegMask, cfg: MidlineConfig | None = None) -> MidlineEstimate:
    cfg = cfg or MidlineConfig()
    h, w = mask.shape
    ref_x = image_center_x(w)
    rows = []
    all_runs = runs_by_row(mask.data)
    for k in range(h):
        runs = [r for r in all_runs[h - 1 - k] if r[1] - r[0] + 1 >= cfg.min_run_width]
        if not runs:
            continue
        left, right = _pick_run(runs, ref_x)
        ref_x = (left + right) / 2.0
        rows.append(MidRow(k, ref_x, right - left + 1))
    return MidlineEstimate(
        rows=tuple(rows),
        start_point=(image_center_x(w), 0.0),
        valid=len(rows) >= cfg.min_rows,
        width=w,
        height=h,
    )


def compute_yaw(midline: MidlineEstimate) -> YawEstimate:
    if not midline.valid:
        raise InvalidMidline("midline estimate is not valid")
    dx, dy = midline.offsets()
    forward = float(dy.sum())
    if forward <= 0:
        raise DegenerateGeometry("midpoints have no forward extent from the start point")
    return YawEstimate(math.atan(float(dx.sum()) / forward))
