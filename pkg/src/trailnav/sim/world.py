"""Synthetic trail worlds built from line and arc segments.

The planar frame is x forward/north, y right/east, heading measured
clockwise from +x. With this handedness a positive yaw rate turns the robot
to its right and a positive lateral velocity moves it right, which matches
the image convention (positive column offset = right) used by the planner.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from trailnav.errors import InvalidWorld

DEFAULT_TRAIL_WIDTH = 0.6


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    if np.ndim(a) == 0:
        w = math.remainder(float(a), 2 * math.pi)
        return math.pi if w == -math.pi else w
    w = np.mod(np.asarray(a, dtype=float) + math.pi, 2 * math.pi) - math.pi
    return np.where(w == -math.pi, math.pi, w)


@dataclass(frozen=True)
class Segment:
    kind: str  # "line" | "arc"
    length: float
    radius: float = 0.0
    turn: int = 0  # +1 right (clockwise), -1 left
    # placement, filled in by TrailWorld
    s0: float = 0.0
    x0: float = 0.0
    y0: float = 0.0
    heading0: float = 0.0

    @property
    def end_heading(self) -> float:
        if self.kind == "line":
            return self.heading0
        return self.heading0 + self.turn * self.length / self.radius

    def point(self, s_local):
        s = np.asarray(s_local, dtype=float)
        if self.kind == "line":
            return self.x0 + s * math.cos(self.heading0), self.y0 + s * math.sin(self.heading0)
        cx, cy = self._center()
        th = self.heading0 + self.turn * s / self.radius
        # right turn: point = c + R(sin th, -cos th); left turn is the mirror
        return cx + self.turn * self.radius * np.sin(th), cy - self.turn * self.radius * np.cos(th)

    def _center(self):
        # robot's right-hand normal at heading h is (-sin h, cos h)
        nx, ny = -math.sin(self.heading0), math.cos(self.heading0)
        return self.x0 + self.turn * self.radius * nx, self.y0 + self.turn * self.radius * ny

    def closest(self, qx, qy):
        """Vectorized projection: (s_local, signed offset (+ = right), distance)."""
        qx = np.asarray(qx, dtype=float)
        qy = np.asarray(qy, dtype=float)
        if self.kind == "line":
            ux, uy = math.cos(self.heading0), math.sin(self.heading0)
            dx, dy = qx - self.x0, qy - self.y0
            along = dx * ux + dy * uy
            offset = -dx * uy + dy * ux
            s = np.clip(along, 0.0, self.length)
        else:
            cx, cy = self._center()
            dx, dy = qx - cx, qy - cy
            r = np.hypot(dx, dy)
            # angle parameter th such that point(th) lies on the ray from c through q
            th = np.arctan2(self.turn * dx, -self.turn * dy)
            sweep = self.length / self.radius
            delta = self.turn * (th - self.heading0)
            delta = np.mod(delta - sweep / 2 + math.pi, 2 * math.pi) - math.pi + sweep / 2
            s = np.clip(delta, 0.0, sweep) * self.radius
            offset = self.turn * (self.radius - r)
        px, py = self.point(s)
        dist = np.hypot(qx - px, qy - py)
        interior = (s > 0.0) & (s < self.length)
        dist = np.where(interior, np.abs(offset), dist)
        signed = np.where(interior, offset, np.copysign(dist, offset))
        return s, signed, dist


@dataclass(frozen=True)
class Projection:
    s: float
    offset: float
    distance: float


class TrailWorld:
    """A trail centerline plus its width. Everything off the trail is grass."""

    def __init__(self, segments, trail_width: float = DEFAULT_TRAIL_WIDTH, start=(0.0, 0.0, 0.0)):
        if trail_width <= 0:
            raise InvalidWorld("trail_width must be > 0")
        if not segments:
            raise InvalidWorld("a world needs at least one segment")
        placed = []
        s0, (x, y, h) = 0.0, start
        for seg in segments:
            if seg.length <= 0:
                raise InvalidWorld("segment length must be > 0")
            if seg.kind == "arc" and (seg.radius <= 0 or seg.turn not in (-1, 1)):
                raise InvalidWorld("arc needs radius > 0 and turn direction left/right")
            if seg.kind not in ("line", "arc"):
                raise InvalidWorld(f"unknown segment type {seg.kind!r}")
            seg = Segment(seg.kind, seg.length, seg.radius, seg.turn, s0, x, y, h)
            ex, ey = seg.point(seg.length)
            x, y, h = float(ex), float(ey), seg.end_heading
            s0 += seg.length
            placed.append(seg)
        self.segments = tuple(placed)
        self.trail_width = float(trail_width)
        self.length = s0
        self.start = tuple(float(v) for v in start)

    @classmethod
    def straight(cls, length: float = 20.0, trail_width: float = DEFAULT_TRAIL_WIDTH) -> TrailWorld:
        return cls([Segment("line", length)], trail_width)

    @classmethod
    def from_dict(cls, desc: dict) -> TrailWorld:
        try:
            segs = []
            for item in desc["segments"]:
                kind = item["type"]
                turn = 0
                radius = 0.0
                if kind == "arc":
                    radius = float(item["radius_m"])
                    turn = {"right": 1, "left": -1}[item["turn_dir"]]
                segs.append(Segment(kind, float(item["length_m"]), radius, turn))
            width = float(desc.get("trail_width_m", DEFAULT_TRAIL_WIDTH))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidWorld(f"bad world description: {exc!r}") from exc
        return cls(segs, width)

    @classmethod
    def load(cls, path) -> TrailWorld:
        try:
            desc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidWorld(f"cannot read world file {path}: {exc}") from exc
        return cls.from_dict(desc)

    def to_dict(self) -> dict:
        segs = []
        for seg in self.segments:
            d = {"type": seg.kind, "length_m": seg.length}
            if seg.kind == "arc":
                d["radius_m"] = seg.radius
                d["turn_dir"] = "right" if seg.turn > 0 else "left"
            segs.append(d)
        return {"trail_width_m": self.trail_width, "segments": segs}

    def distance(self, qx, qy):
        """Unsigned distance from points to the centerline."""
        best = None
        for seg in self.segments:
            _, _, d = seg.closest(qx, qy)
            best = d if best is None else np.minimum(best, d)
        return best

    def on_trail(self, qx, qy):
        return self.distance(qx, qy) <= self.trail_width / 2

    def project(self, x: float, y: float) -> Projection:
        s, off, d = self.project_many(x, y)
        return Projection(float(s), float(off), float(d))

    def project_many(self, qx, qy):
        """Nearest-segment projection for arrays of points: (s, signed offset, distance)."""
        best_s = best_off = best_d = None
        for seg in self.segments:
            s, off, d = seg.closest(qx, qy)
            s = s + seg.s0
            if best_d is None:
                best_s, best_off, best_d = s, off, d
                continue
            closer = d < best_d
            best_s = np.where(closer, s, best_s)
            best_off = np.where(closer, off, best_off)
            best_d = np.where(closer, d, best_d)
        return best_s, best_off, best_d

    def pose_at(self, s: float):
        """(x, y, heading) on the centerline at arclength ``s``."""
        s = min(max(s, 0.0), self.length)
        for seg in self.segments:
            if s <= seg.s0 + seg.length or seg is self.segments[-1]:
                local = s - seg.s0
                x, y = seg.point(local)
                h = seg.heading0 if seg.kind == "line" else seg.heading0 + seg.turn * local / seg.radius
                return float(x), float(y), float(h)
        raise AssertionError("unreachable")
