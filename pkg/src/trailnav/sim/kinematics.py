"""Idealized planar kinematics standing in for the gait controller."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from trailnav.sim.world import wrap_angle


@dataclass(frozen=True)
class RobotPose:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading)):
            raise ValueError(f"non-finite pose {self}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))


def step_kinematics(pose: RobotPose, cmd, dt: float) -> RobotPose:
    """Rotate by ``yaw_rate*dt`` first, then translate along the new heading.

    ``cmd`` needs ``yaw_rate``, ``forward_velocity`` and ``lateral_velocity``
    (positive = right).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    th = pose.heading + cmd.yaw_rate * dt
    c, s = math.cos(th), math.sin(th)
    v, vl = cmd.forward_velocity, cmd.lateral_velocity
    return RobotPose(pose.x + (v * c - vl * s) * dt, pose.y + (v * s + vl * c) * dt, th)


def integrate_constant(pose: RobotPose, cmd, dt: float, n: int):
    """Apply ``step_kinematics`` ``n`` times under one command, vectorized.

    Returns arrays ``(x, y, heading)`` of the ``n`` poses after each step
    (heading unwrapped).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    th = pose.heading + cmd.yaw_rate * dt * np.arange(1, n + 1)
    c, s = np.cos(th), np.sin(th)
    v, vl = cmd.forward_velocity, cmd.lateral_velocity
    x = pose.x + np.cumsum((v * c - vl * s) * dt)
    y = pose.y + np.cumsum((v * s + vl * c) * dt)
    return x, y, th
