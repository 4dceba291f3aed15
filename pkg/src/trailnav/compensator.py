"""Temporal trajectory compensation.

Each frame's fitted path coefficients and yaw are blended with the previous
blended values. The weight given to the new frame shrinks exponentially with
how far it strays from the history, down to a floor ``w_min``, so a single
mis-segmented frame can only nudge the plan.

"History" is the last ``history_len`` raw estimates, and the deviation is the
median distance to them. Comparing against raw records rather than the
blended plan matters in closed loop: once the plan lags a real change, every
correct frame disagrees with it, gets floored, and the plan never catches up.
``history_len=0`` compares against the blended plan instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from trailnav.errors import WeightOutOfRange
from trailnav.pathfit import PolyCoeffs, eval_poly

DEVIATION_SAMPLES = 16
DEVIATION_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class CompensatorState:
    prev_beta: PolyCoeffs | None = None
    prev_alpha: float = 0.0
    base_w1: float = 0.7
    base_w_alpha_hat: float = 0.7
    lambda_beta: float = 0.01  # per pixel of RMS curve deviation
    lambda_alpha: float = 0.5  # per radian of yaw change
    w_min: float = 0.4
    initialized: bool = False
    history_len: int = 3
    history: tuple = ()  # recent raw (beta, alpha) estimates, oldest first

    def __post_init__(self):
        for name in ("base_w1", "base_w_alpha_hat", "w_min"):
            _check_weight(getattr(self, name), name)
        if self.w_min > min(self.base_w1, self.base_w_alpha_hat):
            raise WeightOutOfRange("w_min must not exceed the base weights")
        if self.lambda_beta < 0 or self.lambda_alpha < 0:
            raise ValueError("attenuation rates must be >= 0")
        if self.initialized and self.prev_beta is None:
            raise ValueError("initialized state needs prev_beta")
        if self.history_len < 0:
            raise ValueError("history_len must be >= 0")

    @classmethod
    def disabled(cls) -> CompensatorState:
        """Pass-through: every new frame is adopted wholesale."""
        return cls(base_w1=1.0, base_w_alpha_hat=1.0, lambda_beta=0.0, lambda_alpha=0.0)

    def reset(self) -> CompensatorState:
        return replace(self, prev_beta=None, prev_alpha=0.0, initialized=False, history=())

    def references(self):
        """(betas, alphas) that a new estimate is compared against."""
        if self.history_len == 0 or not self.history:
            return [self.prev_beta], [self.prev_alpha]
        return [b for b, _ in self.history], [a for _, a in self.history]

    def remember(self, beta: PolyCoeffs, alpha: float) -> tuple:
        if self.history_len == 0:
            return ()
        return (self.history + ((beta, alpha),))[-self.history_len:]


@dataclass(frozen=True)
class CompensatedPlan:
    beta: PolyCoeffs
    alpha: float
    applied_w1: float
    applied_w_alpha_hat: float
    rejected: bool = False


def _check_weight(w, name="weight"):
    if not (0.0 <= w <= 1.0) or math.isnan(w):
        raise WeightOutOfRange(f"{name}={w} outside [0, 1]")


def deviation_metric(new_beta: PolyCoeffs, prev_beta: PolyCoeffs, samples: int = DEVIATION_SAMPLES,
                     p_range: tuple[float, float] | None = None) -> float:
    """RMS lateral distance (pixels) between two fitted curves, sampled
    uniformly over ``p_range`` (default [0, 1])."""
    lo, hi = p_range or DEVIATION_RANGE
    p = np.linspace(lo, hi, samples)
    diff = eval_poly(new_beta, p) - eval_poly(prev_beta, p)
    return float(np.sqrt(np.mean(diff * diff)))


def blend_coeffs(new_beta: PolyCoeffs, state: CompensatorState, w1: float) -> PolyCoeffs:
    _check_weight(w1, "w1")
    n = max(new_beta.beta.size, state.prev_beta.beta.size)
    return PolyCoeffs(w1 * new_beta.padded(n) + (1.0 - w1) * state.prev_beta.padded(n))


def blend_yaw(new_alpha: float, state: CompensatorState, w_hat: float) -> float:
    _check_weight(w_hat, "w_hat")
    return w_hat * new_alpha + (1.0 - w_hat) * state.prev_alpha


def attenuated_weight(base: float, rate: float, deviation: float, floor: float) -> float:
    return max(floor, base * math.exp(-rate * deviation))


def history_deviation(new_beta: PolyCoeffs, new_alpha: float, state: CompensatorState) -> tuple[float, float]:
    """Median path and yaw deviation of a new estimate from the reference records."""
    betas, alphas = state.references()
    dev_beta = float(np.median([deviation_metric(new_beta, b) for b in betas]))
    dev_alpha = float(np.median([abs(new_alpha - a) for a in alphas]))
    return dev_beta, dev_alpha


def step(new_beta: PolyCoeffs | None, new_alpha: float | None, state: CompensatorState):
    """Advance the compensator by one frame.

    Returns ``(plan, state)``. ``plan`` is None only when there is nothing to
    hold yet, i.e. the very first frames carry no usable estimate.
    """
    absent = new_beta is None or new_alpha is None
    if not state.initialized:
        if absent:
            return None, state
        alpha = float(new_alpha)
        plan = CompensatedPlan(new_beta, alpha, 1.0, 1.0)
        return plan, replace(state, prev_beta=new_beta, prev_alpha=alpha, initialized=True,
                             history=state.remember(new_beta, alpha))

    if absent:
        plan = CompensatedPlan(state.prev_beta, state.prev_alpha, state.w_min, state.w_min, rejected=True)
        return plan, state

    new_alpha = float(new_alpha)
    dev_beta, dev_alpha = history_deviation(new_beta, new_alpha, state)
    w1 = attenuated_weight(state.base_w1, state.lambda_beta, dev_beta, state.w_min)
    w_hat = attenuated_weight(state.base_w_alpha_hat, state.lambda_alpha, dev_alpha, state.w_min)
    beta = blend_coeffs(new_beta, state, w1)
    alpha = blend_yaw(new_alpha, state, w_hat)
    new_state = replace(state, prev_beta=beta, prev_alpha=alpha, history=state.remember(new_beta, new_alpha))
    return CompensatedPlan(beta, alpha, w1, w_hat), new_state
