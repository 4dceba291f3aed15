"""Flat run configuration shared by every subcommand.

Keys are dotted (``comp.base_w1``). Files are either JSON objects or
``key = value`` lines with ``#`` comments; ``--set key=value`` overrides are
applied last. Unknown keys are an error.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from trailnav.compensator import CompensatorState
from trailnav.errors import ConfigInvalid
from trailnav.midline import MidlineConfig
from trailnav.planner import PipelineConfig, PlannerConfig

# key: (default, help)
DEFAULTS: dict[str, tuple[object, str]] = {
    "midline.min_run_width": (3, "narrowest accepted traversable run, downsampled px"),
    "midline.min_rows": (5, "rows needed for a valid midline"),
    "midline.downsample_factor": (8, "block size for majority downsampling of input masks"),
    "pathfit.degree": (3, "polynomial degree of the path fit"),
    "comp.enabled": (True, "false = adopt every frame wholesale (no compensation)"),
    "comp.base_w1": (0.7, "weight of a consistent new path fit"),
    "comp.base_w_alpha_hat": (0.7, "weight of a consistent new yaw"),
    "comp.lambda_beta": (0.01, "attenuation per pixel of RMS path deviation"),
    "comp.lambda_alpha": (0.5, "attenuation per radian of yaw change"),
    "comp.w_min": (0.4, "floor for attenuated weights"),
    "comp.history_len": (3, "raw estimates the deviation is measured against; 0 = blended plan"),
    "comp.max_consecutive_rejects": (8, "unusable frames tolerated before safety stop"),
    "planner.k_yaw": (1.5, "yaw-rate gain, 1/s"),
    "planner.k_lat": (0.5, "lateral-velocity gain, m/s per normalized offset"),
    "planner.yaw_rate_limit": (1.0, "rad/s"),
    "planner.lat_vel_limit": (0.3, "m/s"),
    "planner.forward_speed": (0.7, "forward setpoint, m/s"),
    "planner.rate_hz": (4.0, "perception / planning rate"),
    "sim.camera_height": (0.26, "m"),
    "sim.camera_pitch": (0.35, "rad below horizontal"),
    "sim.camera_hfov": (1.2, "rad"),
    "sim.image_width": (160, "rendered mask width, px"),
    "sim.image_height": (120, "rendered mask height, px"),
    "sim.downsample_factor": (2, "downsample factor applied to rendered masks"),
    "sim.substep_s": (0.002, "kinematics integration step, s"),
    "sim.duration_s": ("auto", "episode length in s; auto = 1.5 x nominal traversal time + 5 s"),
    "sim.blob_failure_prob": (0.0, "per-frame probability of a grass-as-trail blob"),
    "sim.blob_size": (30.0, "blob radius, rendered px"),
    "sim.pixel_flip_prob": (0.0, "per-pixel class flip probability"),
    "sim.dropout_prob": (0.0, "per-frame probability of an all-void frame"),
    "seed": (0, "RNG seed"),
}


def _coerce(key: str, raw):
    default = DEFAULTS[key][0]
    if key == "sim.duration_s" and str(raw).strip().lower() == "auto":
        return "auto"
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw)
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(raw)
        return value
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{key}: cannot interpret {raw!r}") from exc


class RunConfig:
    def __init__(self, values: dict | None = None):
        self.values = {k: v for k, (v, _) in DEFAULTS.items()}
        if values:
            self.update(values)

    def update(self, values: dict) -> RunConfig:
        for key, raw in values.items():
            if key not in DEFAULTS:
                raise ConfigInvalid(f"unknown config key {key!r}")
            self.values[key] = _coerce(key, raw)
        return self

    def set(self, assignment: str) -> RunConfig:
        key, sep, value = assignment.partition("=")
        if not sep:
            raise ConfigInvalid(f"expected key=value, got {assignment!r}")
        return self.update({key.strip(): value.strip()})

    def __getitem__(self, key):
        return self.values[key]

    def copy(self) -> RunConfig:
        return RunConfig(dict(self.values))

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        if text.lstrip().startswith("{"):
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigInvalid(f"{path}: {exc}") from exc
            return cls(data)
        cfg = cls()
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigInvalid(f"{path}:{n}: expected key = value")
            cfg.set(line)
        return cfg

    def as_dict(self) -> dict:
        return dict(sorted(self.values.items()))

    # --- typed views -----------------------------------------------------

    def compensator_state(self) -> CompensatorState:
        if not self["comp.enabled"]:
            return CompensatorState.disabled()
        try:
            return CompensatorState(
                base_w1=self["comp.base_w1"],
                base_w_alpha_hat=self["comp.base_w_alpha_hat"],
                lambda_beta=self["comp.lambda_beta"],
                lambda_alpha=self["comp.lambda_alpha"],
                w_min=self["comp.w_min"],
                history_len=self["comp.history_len"],
            )
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def pipeline_config(self, downsample_factor: int | None = None) -> PipelineConfig:
        try:
            midline = MidlineConfig(
                min_run_width=self["midline.min_run_width"],
                min_rows=self["midline.min_rows"],
                downsample_factor=downsample_factor or self["midline.downsample_factor"],
            )
            planner = PlannerConfig(
                k_yaw=self["planner.k_yaw"],
                k_lat=self["planner.k_lat"],
                yaw_rate_limit=self["planner.yaw_rate_limit"],
                lat_vel_limit=self["planner.lat_vel_limit"],
                forward_speed=self["planner.forward_speed"],
                rate_hz=self["planner.rate_hz"],
            )
            if self["pathfit.degree"] < 0:
                raise ValueError("pathfit.degree must be >= 0")
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc
        return PipelineConfig(
            midline=midline,
            degree=self["pathfit.degree"],
            compensator=self.compensator_state(),
            planner=planner,
            max_consecutive_rejects=self["comp.max_consecutive_rejects"],
        )

    def sim_pipeline_config(self) -> PipelineConfig:
        return self.pipeline_config(downsample_factor=self["sim.downsample_factor"])

    def camera(self):
        from trailnav.sim.camera import CameraModel

        try:
            return CameraModel(
                height_above_ground=self["sim.camera_height"],
                pitch=self["sim.camera_pitch"],
                horizontal_fov=self["sim.camera_hfov"],
                image_width=self["sim.image_width"],
                image_height=self["sim.image_height"],
            )
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def noise(self, seed: int | None = None):
        from trailnav.sim.noise import NoiseModel

        try:
            return NoiseModel(
                blob_failure_prob=self["sim.blob_failure_prob"],
                blob_size=self["sim.blob_size"],
                pixel_flip_prob=self["sim.pixel_flip_prob"],
                dropout_prob=self["sim.dropout_prob"],
                seed=self["seed"] if seed is None else seed,
            )
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def with_speed(self, speed: float) -> RunConfig:
        return self.copy().update({"planner.forward_speed": speed})

    def without_compensation(self) -> RunConfig:
        return self.copy().update({"comp.enabled": False})


def describe() -> str:
    width = max(map(len, DEFAULTS))
    return "\n".join(f"{k:<{width}}  {v!r:<8}  {h}" for k, (v, h) in DEFAULTS.items())

