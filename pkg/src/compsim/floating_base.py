"""Velocity composition for an arm whose base rides on a moving body."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import skew


@dataclass(frozen=True)
class BaseState:
    R_B: np.ndarray
    v_B: np.ndarray
    omega_B: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R_B, dtype=float)
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or np.linalg.det(R) < 0.0:
            raise ValueError("R_B must be a proper rotation matrix")


def base_jacobian(R_B, p_BE_body) -> np.ndarray:
    """``[[I, -skew(R_B p_BE)], [0, I]]``: maps base twist to the EE point."""
    p_BE = np.asarray(R_B, dtype=float) @ np.asarray(p_BE_body, dtype=float)
    J = np.eye(6)
    J[:3, 3:] = -skew(p_BE)
    return J


def world_jacobian(R_B, J_body) -> np.ndarray:
    """Rotate a base-frame Jacobian into the inertial frame."""
    R_B = np.asarray(R_B, dtype=float)
    J_body = np.asarray(J_body, dtype=float)
    J = np.empty_like(J_body)
    J[:3] = R_B @ J_body[:3]
    J[3:] = R_B @ J_body[3:]
    return J


def ee_twist_full(base: BaseState, p_BE_body, J_M, theta_dot) -> np.ndarray:
    """Full composition ``J_B ẋ_B + J_M θ̇`` (includes base rotation)."""
    xb = np.concatenate((base.v_B, base.omega_B))
    return base_jacobian(base.R_B, p_BE_body) @ xb + np.asarray(J_M) @ np.asarray(theta_dot)


def ee_twist(v_B, J_M, theta_dot) -> np.ndarray:
    """Simplified composition for a non-rotating base: ``[v_B; 0] + J_M θ̇``."""
    twist = np.asarray(J_M, dtype=float) @ np.asarray(theta_dot, dtype=float)
    twist[:3] += np.asarray(v_B, dtype=float)
    return twist
