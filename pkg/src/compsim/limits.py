"""Joint velocity clamping, position-limit activation and the Euler update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DT = 1.0 / 60.0


@dataclass(frozen=True)
class JointLimits:
    pos_min: np.ndarray
    pos_max: np.ndarray
    vel_limit: np.ndarray

    def __post_init__(self):
        for key in ("pos_min", "pos_max", "vel_limit"):
            object.__setattr__(self, key, np.asarray(getattr(self, key), dtype=float))
        if not np.all(self.pos_min < self.pos_max):
            raise ValueError("pos_min must be < pos_max")
        if not np.all(self.vel_limit > 0.0):
            raise ValueError("vel_limit must be > 0")

    @classmethod
    def from_model(cls, model) -> "JointLimits":
        # symmetric magnitude: the tighter of the two model bounds
        return cls(model.pos_min, model.pos_max, np.minimum(-model.vel_min, model.vel_max))


def clamp_velocity(theta_dot, limits: JointLimits) -> np.ndarray:
    return np.clip(np.asarray(theta_dot, dtype=float), -limits.vel_limit, limits.vel_limit)


def activation_matrix(theta, limits: JointLimits) -> np.ndarray:
    """Per-joint 1/0 flags: 1 only strictly inside the position range."""
    theta = np.asarray(theta, dtype=float)
    return ((limits.pos_min < theta) & (theta < limits.pos_max)).astype(float)


def _directional_activation(theta, step, limits: JointLimits) -> np.ndarray:
    at_min = theta <= limits.pos_min
    at_max = theta >= limits.pos_max
    blocked = (at_min & (step < 0.0)) | (at_max & (step > 0.0))
    return (~blocked).astype(float)


def integrate_step(theta, theta_dot, dt: float, limits: JointLimits,
                   directional: bool = False) -> np.ndarray:
    """Clamp, mask and integrate one tick.

    With ``directional=False`` a joint sitting on a limit is frozen in both
    directions. ``directional=True`` only blocks steps that would leave the
    range. The result is always clipped back into ``[pos_min, pos_max]`` so a
    single step cannot cross a limit from inside.
    """
    if not dt > 0.0:
        raise ValueError("dt must be > 0")
    theta = np.asarray(theta, dtype=float)
    step = clamp_velocity(theta_dot, limits) * dt
    if directional:
        H = _directional_activation(theta, step, limits)
    else:
        H = activation_matrix(theta, limits)
    return np.clip(theta + H * step, limits.pos_min, limits.pos_max)
