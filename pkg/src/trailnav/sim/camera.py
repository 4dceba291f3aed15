"""Pinhole camera looking down at a flat ground plane, and mask rendering."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from trailnav.mask_core import SegClass, SegMask

CAMERA_HEIGHT = 0.26  # m, camera mount height on the robot


@dataclass(frozen=True)
class CameraModel:
    height_above_ground: float = CAMERA_HEIGHT
    pitch: float = 0.35  # rad, downward
    horizontal_fov: float = 1.2  # rad
    image_width: int = 160
    image_height: int = 120

    def __post_init__(self):
        if self.height_above_ground <= 0:
            raise ValueError("camera height must be > 0")
        if not 0 < self.pitch < math.pi / 2:
            raise ValueError("pitch must lie in (0, pi/2)")
        if not 0 < self.horizontal_fov < math.pi:
            raise ValueError("horizontal_fov must lie in (0, pi)")
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image size must be positive")

    @property
    def focal(self) -> float:
        return (self.image_width / 2) / math.tan(self.horizontal_fov / 2)

    def ground_points(self):
        """Body-frame ground hits for every pixel center.

        Returns ``(forward, right, hits_ground)`` arrays of shape (H, W).
        Pixels whose ray does not point below the horizon have NaN coordinates.
        """
        return self._ground_points

    @cached_property
    def _ground_points(self):
        w, h = self.image_width, self.image_height
        f = self.focal
        u = (np.arange(w) + 0.5 - w / 2) / f
        v = (np.arange(h) + 0.5 - h / 2) / f
        uu, vv = np.meshgrid(u, v)
        sp, cp = math.sin(self.pitch), math.cos(self.pitch)
        down = sp + cp * vv
        fwd = cp - sp * vv
        hits = down > 1e-9
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(hits, self.height_above_ground / down, np.nan)
        out = (t * fwd, t * uu, hits)
        for a in out:
            a.flags.writeable = False
        return out

    def project_ground(self, forward, right):
        """Inverse of ``ground_points``: continuous pixel coords (col, row) of a ground point."""
        sp, cp = math.sin(self.pitch), math.cos(self.pitch)
        hgt = self.height_above_ground
        # camera frame: z along optical axis, y down, x right
        zc = forward * cp + hgt * sp
        yc = -forward * sp + hgt * cp
        col = self.focal * right / zc + self.image_width / 2 - 0.5
        row = self.focal * yc / zc + self.image_height / 2 - 0.5
        return col, row


def render_mask(world, pose, cam: CameraModel) -> SegMask:
    """Ground-truth segmentation of what the camera sees from ``pose``."""
    fwd, right, hits = cam.ground_points()
    fwd, right = fwd[hits], right[hits]
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    gx = pose.x + fwd * c - right * s
    gy = pose.y + fwd * s + right * c
    out = np.full(hits.shape, int(SegClass.VOID), dtype=np.uint8)
    on = world.on_trail(gx, gy)
    out[hits] = np.where(on, int(SegClass.TRAVERSABLE), int(SegClass.UNTRAVERSABLE))
    return SegMask(out)
