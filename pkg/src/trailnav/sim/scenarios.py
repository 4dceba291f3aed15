"""Named test worlds and scenario settings shared by the CLI, tests and docs."""

from __future__ import annotations

from trailnav.sim.world import TrailWorld

# Grass-as-trail stress test. Both arms of a comparison use these settings;
# only ``comp.enabled`` differs. Higher gains and a narrow trail make a single
# mis-segmented frame costly, which is the regime the compensator targets.
COMPENSATION_SCENARIO = {
    "sim.blob_failure_prob": 0.2,
    "sim.blob_size": 80.0,
    "planner.k_yaw": 2.5,
    "planner.k_lat": 2.0,
    "planner.forward_speed": 0.8,
}
COMPENSATION_TRAIL_WIDTH = 0.4

SWEEP_SPEEDS = (0.2, 0.4, 0.6, 0.8, 1.0)


def curved_trail(trail_width: float = 0.6) -> TrailWorld:
    """30 m S-shaped trail: straight, right bend, straight, left bend, straight."""
    return TrailWorld.from_dict({
        "trail_width_m": trail_width,
        "segments": [
            {"type": "line", "length_m": 5.0},
            {"type": "arc", "length_m": 6.0, "radius_m": 5.0, "turn_dir": "right"},
            {"type": "line", "length_m": 4.0},
            {"type": "arc", "length_m": 8.0, "radius_m": 5.0, "turn_dir": "left"},
            {"type": "line", "length_m": 7.0},
        ],
    })


def straight_trail(length: float = 20.0, trail_width: float = 0.6) -> TrailWorld:
    return TrailWorld.straight(length, trail_width)
