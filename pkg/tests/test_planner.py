import io

import pytest

from trailnav.compensator import CompensatedPlan
from trailnav.mask_core import FrameStamp, SegClass, SegMask
from trailnav.pathfit import PolyCoeffs
from trailnav.planner import (COMMAND_LOG_HEADER, CommandLog, CommandMailbox, NavCommand, Pipeline, PipelineConfig,
                              PipelineState, PlannerConfig, lateral_offset, make_command, pipeline_step)

from conftest import band_mask

STAMP = FrameStamp(0, 0.0)


def _plan(alpha=0.0, beta=(31.5,)):
    return CompensatedPlan(PolyCoeffs(beta), alpha, 1.0, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(forward_speed=1.5)
    with pytest.raises(ValueError):
        PlannerConfig(k_yaw=-1)
    with pytest.raises(ValueError):
        PlannerConfig(rate_hz=0)


def test_yaw_gain_arithmetic():
    cmd = make_command(_plan(alpha=0.1), 64, PlannerConfig(), STAMP)
    assert cmd.yaw_rate == pytest.approx(0.15, abs=1e-15)
    assert cmd.forward_velocity == 0.7 and not cmd.safety_stop


def test_yaw_rate_clamped():
    cmd = make_command(_plan(alpha=1.4), 64, PlannerConfig(), STAMP)
    assert cmd.yaw_rate == 1.0
    assert make_command(_plan(alpha=-1.4), 64, PlannerConfig(), STAMP).yaw_rate == -1.0


def test_lateral_offset():
    assert lateral_offset(PolyCoeffs([31.5]), 64) == 0.0
    assert lateral_offset(PolyCoeffs([47.5]), 64) == pytest.approx(0.5)
    assert lateral_offset(PolyCoeffs([500.0]), 64) == 1.0
    cmd = make_command(_plan(beta=(47.5,)), 64, PlannerConfig(k_lat=0.5), STAMP)
    assert cmd.lateral_velocity == pytest.approx(0.25)
    cmd = make_command(_plan(beta=(-500.0,)), 64, PlannerConfig(k_lat=0.5), STAMP)
    assert cmd.lateral_velocity == -0.3


def test_safety_stop_conditions():
    assert make_command(None, 64, PlannerConfig(), STAMP).safety_stop
    assert not make_command(_plan(), 64, PlannerConfig(), STAMP, 8, 8).safety_stop
    stop = make_command(_plan(), 64, PlannerConfig(), STAMP, 9, 8)
    assert stop.safety_stop and stop.forward_velocity == 0.0


def test_pipeline_centered_band_goes_straight():
    pipe = Pipeline(PipelineConfig())
    for _ in range(4):
        res = pipe(band_mask(320, 240, 128, 192))
    assert res.valid_frame and abs(res.command.yaw_rate) < 1e-9 and abs(res.command.lateral_velocity) < 1e-9


def test_pipeline_holds_plan_then_stops():
    cfg = PipelineConfig(max_consecutive_rejects=2)
    state = PipelineState.initial(cfg)
    res = pipeline_step(band_mask(320, 240, 128, 192), state, cfg, FrameStamp(0, 0.0))
    state = res.state
    stops = []
    for k in range(1, 5):
        res = pipeline_step(None, state, cfg, FrameStamp(k, k * 0.25))
        state = res.state
        assert not res.valid_frame and res.plan.rejected
        stops.append(res.command.safety_stop)
    assert stops == [False, False, True, True]
    res = pipeline_step(band_mask(320, 240, 128, 192), state, cfg, FrameStamp(5, 1.25))
    assert res.valid_frame and not res.command.safety_stop


def test_pipeline_no_plan_before_first_valid_frame():
    cfg = PipelineConfig()
    res = pipeline_step(SegMask.filled(64, 48, SegClass.UNTRAVERSABLE), PipelineState.initial(cfg), cfg, STAMP)
    assert res.plan is None and res.command.safety_stop


def test_mailbox_staleness():
    now = [0.0]
    box = CommandMailbox(stale_after=0.5, clock=lambda: now[0])
    assert box.get().safety_stop  # nothing posted yet
    cmd = NavCommand(0.2, 0.1, 0.7, FrameStamp(3, 0.75))
    box.put(cmd)
    now[0] = 0.4
    assert box.get() == cmd
    now[0] = 0.6
    stale = box.get()
    assert stale.safety_stop and stale.forward_velocity == 0.0 and stale.stamp == cmd.stamp


def test_mailbox_last_writer_wins():
    box = CommandMailbox(clock=lambda: 0.0)
    box.put(NavCommand(0.1, 0, 0.5, FrameStamp(1, 0.25)))
    box.put(NavCommand(0.2, 0, 0.5, FrameStamp(2, 0.5)))
    assert box.get().stamp.sequence == 2


def test_command_log_format():
    pipe = Pipeline()
    buf = io.StringIO()
    out = CommandLog(buf)
    out.write(pipe(band_mask(320, 240, 128, 192)))
    out.write(pipe(None))
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(COMMAND_LOG_HEADER)
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "0.0" and first[-1] == ""
    assert len(first) == len(COMMAND_LOG_HEADER)
    buf = io.StringIO()
    CommandLog(buf, record_latency=True).write(pipe(band_mask(320, 240, 128, 192)))
    assert float(buf.getvalue().splitlines()[1].split(",")[-1]) >= 0
