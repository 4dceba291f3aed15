"""Command generation and the per-frame perception pipeline.

``pipeline_step`` chains downsample -> midline -> yaw -> fit -> compensate ->
command and never raises on bad input: an unusable frame becomes a held
plan, and too many in a row become a latched safety stop.
"""

from __future__ import annotations

import csv
import logging
import math
import threading
import time
from dataclasses import dataclass, field, replace

from trailnav import compensator as comp
from trailnav.errors import TrailNavError
from trailnav.mask_core import FrameStamp, SegMask, downsample
from trailnav.midline import MidlineConfig, compute_yaw, extract_midline, image_center_x
from trailnav.pathfit import DEFAULT_DEGREE, eval_poly, fit_poly

log = logging.getLogger(__name__)

LATENCY_BUDGET_S = 0.25
STALE_AFTER_S = 0.5
COMMAND_LOG_HEADER = (
    "seq", "time_s", "yaw_rate", "lat_vel", "fwd_vel", "safety_stop", "applied_w1", "alpha", "latency_ms",
)


@dataclass(frozen=True)
class PlannerConfig:
    k_yaw: float = 1.5
    k_lat: float = 0.5
    yaw_rate_limit: float = 1.0
    lat_vel_limit: float = 0.3
    forward_speed: float = 0.7
    rate_hz: float = 4.0

    def __post_init__(self):
        if self.k_yaw < 0 or self.k_lat < 0:
            raise ValueError("gains must be >= 0")
        if self.yaw_rate_limit < 0 or self.lat_vel_limit < 0:
            raise ValueError("limits must be >= 0")
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be > 0")
        if not 0.0 <= self.forward_speed <= 1.0:
            raise ValueError("forward_speed must lie in [0, 1.0] m/s")


@dataclass(frozen=True)
class NavCommand:
    yaw_rate: float
    lateral_velocity: float
    forward_velocity: float
    stamp: FrameStamp
    safety_stop: bool = False

    @classmethod
    def stop(cls, stamp: FrameStamp) -> NavCommand:
        return cls(0.0, 0.0, 0.0, stamp, safety_stop=True)


def _clamp(v, limit):
    return max(-limit, min(limit, v))


def lateral_offset(beta, mask_width: int) -> float:
    """Normalized offset of the fitted path at the robot (bottom row), in [-1, 1]."""
    half = mask_width / 2.0
    return _clamp((eval_poly(beta, 0.0) - image_center_x(mask_width)) / half, 1.0)


def make_command(plan, mask_width: int, cfg: PlannerConfig, stamp: FrameStamp,
                 consecutive_rejects: int = 0, max_consecutive_rejects: int = 8) -> NavCommand:
    if plan is None or consecutive_rejects > max_consecutive_rejects:
        return NavCommand.stop(stamp)
    yaw_rate = _clamp(cfg.k_yaw * plan.alpha, cfg.yaw_rate_limit)
    lat_vel = _clamp(cfg.k_lat * lateral_offset(plan.beta, mask_width), cfg.lat_vel_limit)
    return NavCommand(yaw_rate, lat_vel, cfg.forward_speed, stamp)


@dataclass(frozen=True)
class PipelineConfig:
    midline: MidlineConfig = field(default_factory=MidlineConfig)
    degree: int = DEFAULT_DEGREE
    compensator: comp.CompensatorState = field(default_factory=comp.CompensatorState)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    max_consecutive_rejects: int = 8


@dataclass(frozen=True)
class PipelineState:
    compensator: comp.CompensatorState
    consecutive_rejects: int = 0
    plan: comp.CompensatedPlan | None = None
    mask_width: int | None = None  # downsampled width the held plan lives in

    @classmethod
    def initial(cls, cfg: PipelineConfig) -> PipelineState:
        return cls(compensator=cfg.compensator.reset())


@dataclass(frozen=True)
class StepResult:
    command: NavCommand
    state: PipelineState
    plan: comp.CompensatedPlan | None
    valid_frame: bool
    latency_s: float


def _perceive(mask, cfg):
    small = downsample(mask, cfg.midline.downsample_factor)
    mid = extract_midline(small, cfg.midline)
    if not mid.valid:
        return small, None, None
    try:
        alpha = compute_yaw(mid).alpha
        beta = fit_poly(mid, cfg.degree)
    except TrailNavError as exc:
        log.debug("frame unusable: %s", exc)
        return small, None, None
    return small, beta, alpha


def pipeline_step(mask: SegMask | None, state: PipelineState, cfg: PipelineConfig,
                  stamp: FrameStamp) -> StepResult:
    """One perception tick. ``mask=None`` stands for a frame that failed to load."""
    t0 = time.perf_counter()
    if mask is None:
        width, beta, alpha = state.mask_width, None, None
    else:
        small, beta, alpha = _perceive(mask, cfg)
        width = small.width
    valid = beta is not None

    plan, cstate = comp.step(beta, alpha, state.compensator)
    rejects = 0 if valid else state.consecutive_rejects + 1
    cmd = make_command(plan, width or 1, cfg.planner, stamp, rejects, cfg.max_consecutive_rejects)
    new_state = replace(state, compensator=cstate, consecutive_rejects=rejects, plan=plan, mask_width=width)

    latency = time.perf_counter() - t0
    if latency >= LATENCY_BUDGET_S:
        log.warning("frame %d took %.1f ms, over the %.0f ms budget",
                    stamp.sequence, latency * 1e3, LATENCY_BUDGET_S * 1e3)
    else:
        log.debug("frame %d latency %.2f ms", stamp.sequence, latency * 1e3)
    return StepResult(cmd, new_state, plan, valid, latency)


class Pipeline:
    """Stateful convenience wrapper around ``pipeline_step``."""

    def __init__(self, cfg: PipelineConfig | None = None):
        self.cfg = cfg or PipelineConfig()
        self.state = PipelineState.initial(self.cfg)
        self.seq = 0

    def __call__(self, mask: SegMask | None, time_s: float | None = None) -> StepResult:
        if time_s is None:
            time_s = self.seq / self.cfg.planner.rate_hz
        stamp = FrameStamp(self.seq, time_s)
        self.seq += 1
        res = pipeline_step(mask, self.state, self.cfg, stamp)
        self.state = res.state
        return res


class CommandMailbox:
    """Single-slot, last-writer-wins command hand-off.

    The perception thread ``put``s at its own rate; a fast consumer ``get``s
    whatever is newest. Anything older than ``stale_after`` seconds reads as a
    stop, so a stalled producer halts the robot.
    """

    def __init__(self, stale_after: float = STALE_AFTER_S, clock=time.monotonic):
        self._lock = threading.Lock()
        self._slot = None
        self._stale_after = stale_after
        self._clock = clock

    def put(self, cmd: NavCommand) -> None:
        with self._lock:
            self._slot = (cmd, self._clock())

    def get(self) -> NavCommand:
        with self._lock:
            slot = self._slot
        now = self._clock()
        if slot is None:
            return NavCommand(0.0, 0.0, 0.0, FrameStamp(-1, 0.0), safety_stop=True)
        cmd, written = slot
        if now - written > self._stale_after:
            return replace(cmd, yaw_rate=0.0, lateral_velocity=0.0, forward_velocity=0.0, safety_stop=True)
        return cmd


class CommandLog:
    """CSV writer for the command stream."""

    def __init__(self, fh, record_latency: bool = False):
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(COMMAND_LOG_HEADER)
        self.record_latency = record_latency

    def write(self, res: StepResult) -> None:
        c, plan = res.command, res.plan
        self._w.writerow([
            c.stamp.sequence,
            _fmt(c.stamp.time),
            _fmt(c.yaw_rate),
            _fmt(c.lateral_velocity),
            _fmt(c.forward_velocity),
            int(c.safety_stop),
            _fmt(plan.applied_w1) if plan is not None else "",
            _fmt(plan.alpha) if plan is not None else "",
            f"{res.latency_s * 1e3:.3f}" if self.record_latency else "",
        ])


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return repr(float(x))
