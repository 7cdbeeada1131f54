"""Local home frame and the per-tick compensation errors.

Everything the planners consume is expressed in the torso frame frozen at
compensation start. Torso and arm base are assumed to keep a fixed relative
pose and a constant orientation, so base-frame quantities can be used
directly in that frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import ArmModel, Pose, forward_kinematics, quat_error, quat_to_matrix

QUIESCENCE_SPEED = 0.02  # m/s


class NotAtRestError(ValueError):
    """The torso was moving when the home frame was requested."""


@dataclass(frozen=True)
class HumanSample:
    t: float
    p_H: np.ndarray
    Q_H: np.ndarray
    v_H: np.ndarray


@dataclass(frozen=True)
class HomeFrame:
    p_H_t0: np.ndarray
    R_I_to_H0: np.ndarray
    fk0: Pose

    @property
    def Q_E0(self) -> np.ndarray:
        return self.fk0.orientation


def capture_home(sample: HumanSample, model: ArmModel, theta,
                 max_speed: float = QUIESCENCE_SPEED) -> HomeFrame:
    speed = float(np.linalg.norm(sample.v_H))
    if not speed < max_speed:
        raise NotAtRestError(
            f"torso not at rest at t={sample.t:.3f}s: |v_H|={speed:.4f} m/s >= {max_speed} m/s")
    return HomeFrame(
        p_H_t0=np.array(sample.p_H, dtype=float),
        R_I_to_H0=quat_to_matrix(sample.Q_H).T,
        fk0=forward_kinematics(model, theta),
    )


def base_displacement(home: HomeFrame, sample: HumanSample) -> np.ndarray:
    # note the (start - now) ordering: a forward step gives a negative value
    return home.R_I_to_H0 @ (home.p_H_t0 - np.asarray(sample.p_H, dtype=float))


def base_velocity_local(home: HomeFrame, sample: HumanSample) -> np.ndarray:
    return home.R_I_to_H0 @ np.asarray(sample.v_H, dtype=float)


def ee_position_variation(home: HomeFrame, sample: HumanSample, fk_now: Pose) -> np.ndarray:
    """EE position error in the home frame, zero when the EE is world-still.

    Equals minus the world displacement of the EE since the home capture:
    the body displacement term carries the ``(start - now)`` sign, so the arm
    term enters with the same orientation, ``fk0 - fk_now``.
    """
    return base_displacement(home, sample) - (fk_now.position - home.fk0.position)


def ee_orientation_error(home: HomeFrame, Q_E_now) -> tuple[float, np.ndarray]:
    return quat_error(home.Q_E0, Q_E_now)
