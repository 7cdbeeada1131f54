"""Rigid-body math and serial-arm kinematics.

Conventions:
- Vectors and matrices are plain float numpy arrays.
- Quaternions are ``[w, x, y, z]`` arrays (scalar part first).
- The arm is described URDF-style: each joint has a fixed origin transform
  (xyz + roll/pitch/yaw) from the previous link, followed by a revolute
  rotation about a unit axis expressed in the joint frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 6
QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def skew(k) -> np.ndarray:
    """Skew-symmetric matrix such that ``skew(k) @ v == cross(k, v)``."""
    kx, ky, kz = np.asarray(k, dtype=float)
    return np.array([[0.0, -kz, ky],
                     [kz, 0.0, -kx],
                     [-ky, kx, 0.0]])


def rpy_to_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    # fixed-axis XYZ, i.e. R = Rz(yaw) Ry(pitch) Rx(roll), as in URDF
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    Rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    Ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    Rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return Rz @ Ry @ Rx


def axis_angle_to_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues formula; ``axis`` must be a unit vector."""
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


# ----------------------------
# Quaternions
# ----------------------------

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product ``a ⊗ b``; renormalised if the norm drifts."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    q = np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])
    n = np.linalg.norm(q)
    if abs(n - 1.0) > 1e-12:
        q = q / n
    return q


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate(([np.cos(angle / 2.0)], np.sin(angle / 2.0) * axis))


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(R) -> np.ndarray:
    """Shepperd's method; returns the representative with ``w >= 0``."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0.0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    q = quat_normalize(q)
    return -q if q[0] < 0.0 else q


def quat_error(q_desired, q_current) -> tuple[float, np.ndarray]:
    """Orientation error ``ΔQ = Q_d ⊗ Q_c⁻¹`` as ``(Δη, Δε)``.

    The sign is chosen so that ``Δη >= 0``; feedback on ``Δε`` then always
    commands the shorter rotation. ``Δε`` is expressed in the frame in which
    both orientations are given.
    """
    dq = quat_multiply(q_desired, quat_conjugate(q_current))
    if dq[0] < 0.0:
        dq = -dq
    return float(dq[0]), dq[1:].copy()


def slerp(q0, q1, s: float) -> np.ndarray:
    q0 = quat_normalize(q0)
    q1 = quat_normalize(q1)
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1, d = -q1, -d
    if d > 1.0 - 1e-12:
        return quat_normalize(q0 + s * (q1 - q0))
    omega = np.arccos(d)
    so = np.sin(omega)
    return (np.sin((1.0 - s) * omega) / so) * q0 + (np.sin(s * omega) / so) * q1


# ----------------------------
# Poses and the arm model
# ----------------------------

@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray  # [w, x, y, z]

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)


@dataclass(frozen=True)
class Joint:
    """One revolute joint: fixed origin transform, then rotation about ``axis``."""

    origin_xyz: np.ndarray
    origin_rpy: np.ndarray
    axis: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("joint axis must be a nonzero finite vector")
        object.__setattr__(self, "axis", axis / n)
        object.__setattr__(self, "origin_xyz", np.asarray(self.origin_xyz, dtype=float))
        object.__setattr__(self, "origin_rpy", np.asarray(self.origin_rpy, dtype=float))

    @property
    def origin_rotation(self) -> np.ndarray:
        return rpy_to_matrix(*self.origin_rpy)


@dataclass(frozen=True)
class ArmModel:
    """Kinematic description of a 6-DoF revolute arm plus its limits."""

    joints: tuple[Joint, ...]
    pos_min: np.ndarray
    pos_max: np.ndarray
    vel_max: np.ndarray
    ee_xyz: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ee_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vel_min: np.ndarray | None = None
    name: str = "arm"

    def __post_init__(self):
        if len(self.joints) != N_JOINTS:
            raise ValueError(f"expected {N_JOINTS} joints, got {len(self.joints)}")
        for key in ("pos_min", "pos_max", "vel_max", "ee_xyz", "ee_rpy"):
            object.__setattr__(self, key, np.asarray(getattr(self, key), dtype=float))
        if self.vel_min is None:
            object.__setattr__(self, "vel_min", -self.vel_max)
        else:
            object.__setattr__(self, "vel_min", np.asarray(self.vel_min, dtype=float))
        for key in ("pos_min", "pos_max", "vel_max", "vel_min"):
            if getattr(self, key).shape != (N_JOINTS,):
                raise ValueError(f"{key}: expected {N_JOINTS} joint values")
        if not np.all(self.pos_min < self.pos_max):
            raise ValueError("pos_min must be < pos_max for every joint")
        if not (np.all(self.vel_min < 0.0) and np.all(self.vel_max > 0.0)):
            raise ValueError("velocity limits must satisfy vel_min < 0 < vel_max")

    @property
    def ee_rotation(self) -> np.ndarray:
        return rpy_to_matrix(*self.ee_rpy)


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_JOINTS,):
        raise ValueError(f"expected {N_JOINTS} joint values, got shape {theta.shape}")
    return theta


def joint_frames(model: ArmModel, theta):
    """Per-joint world (base-frame) axes and positions, plus the EE transform.

    Returns ``(axes, origins, R_ee, p_ee)`` where ``axes[i]``/``origins[i]`` are
    the unit rotation axis and location of joint ``i`` in the base frame.
    """
    theta = _check_theta(theta)
    R = np.eye(3)
    p = np.zeros(3)
    axes = np.empty((N_JOINTS, 3))
    origins = np.empty((N_JOINTS, 3))
    for i, joint in enumerate(model.joints):
        p = p + R @ joint.origin_xyz
        R = R @ joint.origin_rotation
        axes[i] = R @ joint.axis
        origins[i] = p
        R = R @ axis_angle_to_matrix(joint.axis, theta[i])
    p_ee = p + R @ model.ee_xyz
    R_ee = R @ model.ee_rotation
    return axes, origins, R_ee, p_ee


def forward_kinematics(model: ArmModel, theta) -> Pose:
    """EE pose in the arm base frame."""
    _, _, R_ee, p_ee = joint_frames(model, theta)
    return Pose(p_ee, matrix_to_quat(R_ee))


def geometric_jacobian(model: ArmModel, theta) -> np.ndarray:
    """6x6 geometric Jacobian in the base frame, rows ``[v; ω]``."""
    axes, origins, _, p_ee = joint_frames(model, theta)
    J = np.empty((6, N_JOINTS))
    for i in range(N_JOINTS):
        J[:3, i] = np.cross(axes[i], p_ee - origins[i])
        J[3:, i] = axes[i]
    return J
