"""Closed-loop 2-D trail world for exercising the navigation pipeline."""

from trailnav.sim.camera import CameraModel, render_mask
from trailnav.sim.episode import EpisodeResult, RunMetrics, auto_duration, run_episode
from trailnav.sim.kinematics import RobotPose, integrate_constant, step_kinematics
from trailnav.sim.noise import NoiseModel, inject_noise
from trailnav.sim.world import Segment, TrailWorld

__all__ = [
    "CameraModel",
    "EpisodeResult",
    "NoiseModel",
    "RobotPose",
    "RunMetrics",
    "Segment",
    "TrailWorld",
    "auto_duration",
    "inject_noise",
    "integrate_constant",
    "render_mask",
    "run_episode",
    "step_kinematics",
]
