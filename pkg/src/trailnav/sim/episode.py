"""Closed-loop episodes: render -> inject noise -> pipeline -> integrate."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from trailnav.errors import ConfigInvalid
from trailnav.mask_core import FrameStamp
from trailnav.planner import PipelineConfig, PipelineState, StepResult, pipeline_step
from trailnav.sim.camera import CameraModel, render_mask
from trailnav.sim.kinematics import RobotPose, integrate_constant
from trailnav.sim.noise import NoiseModel, inject_noise
from trailnav.sim.world import TrailWorld, wrap_angle

SUBSTEP_S = 0.002
TRACE_HEADER = ("time_s", "x", "y", "heading", "lat_dev")


@dataclass(frozen=True)
class RunMetrics:
    completed: bool
    distance_covered: float
    max_lateral_dev: float
    rms_lateral_dev: float
    off_trail_events: int
    safety_stops: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpisodeResult:
    metrics: RunMetrics
    steps: list[StepResult] = field(default_factory=list)
    trace: list[tuple[float, float, float, float, float]] = field(default_factory=list)

    def write_commands(self, fh, record_latency: bool = False) -> None:
        from trailnav.planner import CommandLog

        out = CommandLog(fh, record_latency=record_latency)
        for res in self.steps:
            out.write(res)

    def write_trace(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in self.trace:
            w.writerow([repr(float(v)) for v in row])


def auto_duration(world: TrailWorld, speed: float) -> float:
    if speed <= 0:
        return 10.0
    return 1.5 * world.length / speed + 5.0


def run_episode(world: TrailWorld, noise: NoiseModel, cfg: PipelineConfig, camera: CameraModel | None = None,
                duration: float | None = None, substep: float = SUBSTEP_S, start: RobotPose | None = None,
                stop_on_exit: bool = True) -> EpisodeResult:
    """Drive the robot along ``world`` until it reaches the end or time runs out.

    The lateral deviation is the distance from the body center to the
    centerline, sampled every kinematics substep. An off-trail event is each
    entry into ``deviation > trail_width / 2``; with ``stop_on_exit`` the
    episode ends at the first one, since the run can no longer complete.
    """
    camera = camera or CameraModel()
    rate = cfg.planner.rate_hz
    if duration is None:
        duration = auto_duration(world, cfg.planner.forward_speed)
    if duration < 0 or substep <= 0 or rate <= 0:
        raise ConfigInvalid("duration must be >= 0, substep and rate > 0")
    frame_dt = 1.0 / rate
    n_sub = max(1, int(round(frame_dt / substep)))
    substep = frame_dt / n_sub
    total_sub = int(round(duration / substep))

    pose = start or RobotPose(*world.start)
    state = PipelineState.initial(cfg)
    half = world.trail_width / 2
    result = EpisodeResult(metrics=None)

    sq_sum, n_samples, max_dev = 0.0, 0, 0.0
    progress = 0.0
    off_events, stops = 0, 0
    off, stopped = False, False
    completed = False
    done_sub = 0
    k = 0
    exited = False
    while done_sub < total_sub and not completed and not exited:
        stamp = FrameStamp(k, k * frame_dt)
        mask = inject_noise(render_mask(world, pose, camera), noise, stamp)
        res = pipeline_step(mask, state, cfg, stamp)
        state = res.state
        result.steps.append(res)
        if res.command.safety_stop and not stopped:
            stops += 1
        stopped = res.command.safety_stop
        proj = world.project(pose.x, pose.y)
        result.trace.append((stamp.time, pose.x, pose.y, pose.heading, proj.offset))

        n = min(n_sub, total_sub - done_sub)
        xs, ys, hs = integrate_constant(pose, res.command, substep, n)
        s, _, dev = world.project_many(xs, ys)
        reached = np.flatnonzero(s >= world.length)
        if reached.size:
            n = int(reached[0]) + 1
            xs, ys, hs, s, dev = xs[:n], ys[:n], hs[:n], s[:n], dev[:n]
            completed = True
        outside = dev > half
        if stop_on_exit and outside.any():
            n = int(np.argmax(outside)) + 1
            xs, ys, hs, s, dev, outside = xs[:n], ys[:n], hs[:n], s[:n], dev[:n], outside[:n]
            completed = False
        # count rising edges of the off-trail indicator
        edges = np.count_nonzero(outside[1:] & ~outside[:-1]) + int(outside[0] and not off)
        off_events += int(edges)
        off = bool(outside[-1])
        exited = stop_on_exit and off
        sq_sum += float(np.dot(dev, dev))
        n_samples += dev.size
        max_dev = max(max_dev, float(dev.max()))
        progress = max(progress, float(s.max()))
        pose = RobotPose(float(xs[-1]), float(ys[-1]), wrap_angle(float(hs[-1])))
        done_sub += n
        k += 1

    if result.steps:
        proj = world.project(pose.x, pose.y)
        result.trace.append((done_sub * substep, pose.x, pose.y, pose.heading, proj.offset))
    rms = math.sqrt(sq_sum / n_samples) if n_samples else 0.0
    result.metrics = RunMetrics(
        completed=completed and off_events == 0,
        distance_covered=progress,
        max_lateral_dev=max_dev,
        rms_lateral_dev=rms,
        off_trail_events=off_events,
        safety_stops=stops,
    )
    return result
