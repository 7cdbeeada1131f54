"""Task-priority differential IK: NBM and RJM, with singular value filtering.

NBM keeps the EE position as the primary task and pushes the orientation
task through the nullspace projector of the translational Jacobian. RJM
drops one rotational row and solves the remaining 5x6 system in one shot
with closed-loop position/orientation feedback.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXES = {"x": 0, "y": 1, "z": 2}
COND_LIMIT = 1e12


class SingularJacobianError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SvfParams:
    sigma0: float = 0.01
    upsilon: float = 10.0

    def __post_init__(self):
        if not self.sigma0 > 0.0:
            raise ValueError("sigma0 must be > 0")
        if not self.upsilon >= 0.0:
            raise ValueError("upsilon must be >= 0")


@dataclass(frozen=True)
class Gains:
    K_P: np.ndarray = field(default_factory=lambda: np.ones(3))
    K_O: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        for key in ("K_P", "K_O"):
            g = np.broadcast_to(np.asarray(getattr(self, key), dtype=float), (3,)).copy()
            if not np.all(g > 0.0):
                raise ValueError(f"{key} entries must be > 0")
            object.__setattr__(self, key, g)


@dataclass(frozen=True)
class PlannerCommand:
    theta_dot: np.ndarray
    method: str
    sigma_min: float
    saturated: bool = False


# ----------------------------
# Pseudo-inverses
# ----------------------------

def pinv(J) -> np.ndarray:
    """Right Moore-Penrose inverse ``Jᵀ(JJᵀ)⁻¹`` of a full-row-rank matrix.

    Evaluated through the SVD, which avoids squaring the condition number;
    raises when ``cond(JJᵀ)`` exceeds ``COND_LIMIT``.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    cond = np.inf if s[-1] == 0.0 or len(s) < J.shape[0] else (s[0] / s[-1]) ** 2
    if not cond < COND_LIMIT:
        raise SingularJacobianError(f"JJᵀ is near singular (cond={cond:.3g})")
    return (Vt.T / s) @ U.T


def damped_pinv(J, lam: float) -> np.ndarray:
    """Damped least-squares inverse ``Σ σ/(σ²+λ²) v uᵀ``."""
    if lam < 0.0:
        raise ValueError("damping must be >= 0")
    U, s, Vt = np.linalg.svd(np.atleast_2d(np.asarray(J, dtype=float)), full_matrices=False)
    denom = s ** 2 + lam ** 2
    inv = np.divide(s, denom, out=np.zeros_like(s), where=denom > 0.0)
    return (Vt.T * inv) @ U.T


def svf_filter(sigma, p: SvfParams = SvfParams()):
    """Filtered singular value, lower-bounded by ``sigma0`` and ~σ for large σ."""
    s = np.asarray(sigma, dtype=float)
    num = s ** 3 + p.upsilon * s ** 2 + 2.0 * s + 2.0 * p.sigma0
    den = s ** 2 + p.upsilon * s + 2.0
    out = num / den
    return float(out) if out.ndim == 0 else out


def svf_matrix(J, p: SvfParams = SvfParams()) -> np.ndarray:
    """The filtered Jacobian ``Σ f(σᵢ) uᵢ vᵢᵀ``."""
    U, s, Vt = np.linalg.svd(np.atleast_2d(np.asarray(J, dtype=float)), full_matrices=False)
    return (U * svf_filter(s, p)) @ Vt


def svf_pinv(J, p: SvfParams = SvfParams()) -> np.ndarray:
    # sums over all min(m, n) triplets, zero singular values included
    U, s, Vt = np.linalg.svd(np.atleast_2d(np.asarray(J, dtype=float)), full_matrices=False)
    return (Vt.T / svf_filter(s, p)) @ U.T


def _inverse(J, p: SvfParams | None):
    """SVF inverse by default; ``p=None`` selects the unfiltered one."""
    return pinv(J) if p is None else svf_pinv(J, p)


def _sigma_min(J) -> float:
    return float(np.linalg.svd(J, compute_uv=False)[-1])


# ----------------------------
# Planners
# ----------------------------

def nullspace_projector(Jv, p: SvfParams | None = None) -> np.ndarray:
    Jv = np.asarray(Jv, dtype=float)
    return np.eye(Jv.shape[1]) - _inverse(Jv, p) @ Jv


def nbm_step(Jv, Jw, v_B, delta_eps, gains: Gains = Gains(),
             p: SvfParams | None = SvfParams()) -> PlannerCommand:
    """Nullspace-based step: ``J_v†(-v_B) + (I - J_v†J_v) J_ω† K_O Δε``."""
    Jv = np.asarray(Jv, dtype=float)
    Jw = np.asarray(Jw, dtype=float)
    Jv_inv = _inverse(Jv, p)
    xi0 = _inverse(Jw, p) @ (gains.K_O * np.asarray(delta_eps, dtype=float))
    N = np.eye(Jv.shape[1]) - Jv_inv @ Jv
    theta_dot = Jv_inv @ (-np.asarray(v_B, dtype=float)) + N @ xi0
    return PlannerCommand(theta_dot, "NBM", _sigma_min(Jv))


def reconstruct_jacobian(Jv, Jw, released_axis: str = "x") -> np.ndarray:
    """Stack ``J_v`` with the two rotational rows that are kept."""
    released = AXES[released_axis]
    kept = [i for i in range(3) if i != released]
    return np.vstack((np.asarray(Jv, dtype=float), np.asarray(Jw, dtype=float)[kept]))


def rjm_target(v_B, delta_p_E, delta_eps_kept, gains: Gains = Gains(),
               released_axis: str = "x") -> np.ndarray:
    kept = [i for i in range(3) if i != AXES[released_axis]]
    linear = -np.asarray(v_B, dtype=float) + gains.K_P * np.asarray(delta_p_E, dtype=float)
    angular = gains.K_O[kept] * np.asarray(delta_eps_kept, dtype=float)
    return np.concatenate((linear, angular))


def rjm_step(J_MR, v_B, delta_p_E, delta_eps_kept, gains: Gains = Gains(),
             p: SvfParams | None = SvfParams(), released_axis: str = "x") -> PlannerCommand:
    """Reconstructed-Jacobian step with closed-loop EE feedback.

    ``delta_eps_kept`` holds the two orientation-error components that are
    not released, in axis order.
    """
    J_MR = np.asarray(J_MR, dtype=float)
    target = rjm_target(v_B, delta_p_E, delta_eps_kept, gains, released_axis)
    theta_dot = _inverse(J_MR, p) @ target
    return PlannerCommand(theta_dot, "RJM", _sigma_min(J_MR))
