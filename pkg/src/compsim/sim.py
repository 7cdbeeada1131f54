"""Synthetic torso motion and the closed compensation loop.

The simulator stands in for both the human and the hardware: it produces
torso pose streams, runs frame transformation -> planning -> clamping and
integration at a fixed rate, and records the exact world position of the EE
as the ground truth an external tracker would measure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import frames, limits, planners
from .kinematics import (
    QUAT_IDENTITY,
    ArmModel,
    forward_kinematics,
    geometric_jacobian,
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
    quat_to_matrix,
    slerp,
)

log = logging.getLogger(__name__)

MOTION_KINDS = ("UD", "LR", "FB", "Random3D")
# stroke axis and the direction of the first stroke, in torso coordinates
_STROKES = {"UD": (2, -1.0), "LR": (1, 1.0), "FB": (0, 1.0)}
# fixed off-axis leakage weights for each 1D motion
_LEAKS = {"UD": {0: 1.0, 1: -0.3}, "LR": {0: 0.3, 2: -1.0}, "FB": {1: 1.0, 2: -0.3}}

P1_ANGULAR_SPEED = 0.05  # rad/s


class SimulationError(RuntimeError):
    def __init__(self, message: str, tick: int | None = None):
        super().__init__(message if tick is None else f"tick {tick}: {message}")
        self.tick = tick


@dataclass(frozen=True)
class MotionSpec:
    kind: str = "UD"
    amplitude: float = 0.15
    period: float = 5.0
    duration: float = 30.0
    seed: int = 0
    cross_coupling: float = 0.0
    rate: float = 60.0
    lead_in: float = 3.0
    start: tuple = (0.0, 0.0, 1.2)
    heading: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}; expected one of {MOTION_KINDS}")
        if self.amplitude < 0.0 or self.period <= 0.0 or self.duration <= 0.0 or self.rate <= 0.0:
            raise ValueError("amplitude must be >= 0 and period, duration, rate > 0")
        if not 0.0 <= self.cross_coupling <= 0.3:
            raise ValueError("cross_coupling must lie in [0, 0.3]")
        if self.lead_in < 0.0:
            raise ValueError("lead_in must be >= 0")

    @property
    def label(self) -> str:
        return f"{self.kind}-A{self.amplitude:g}-T{self.period:g}"


def _raised_cosine(tau, period):
    """0 -> 1 -> 0 over one period; zero value and slope at both ends."""
    w = 2.0 * np.pi / period
    active = tau > 0.0
    s = np.where(active, 0.5 * (1.0 - np.cos(w * tau)), 0.0)
    ds = np.where(active, 0.5 * w * np.sin(w * tau), 0.0)
    return s, ds


def _smooth_ramp(tau, width):
    """C1 ramp from 0 to 1 over ``width`` seconds."""
    x = np.clip(tau / width, 0.0, 1.0)
    inside = (tau > 0.0) & (tau < width)
    r = 0.5 * (1.0 - np.cos(np.pi * x))
    dr = np.where(inside, 0.5 * np.pi / width * np.sin(np.pi * x), 0.0)
    return r, dr


def _random_axis(tau, period, rng, n_terms=6):
    """Smooth zero-start random walk: a short random Fourier series."""
    freqs = rng.uniform(0.25, 1.5, n_terms) / period
    phases = rng.uniform(0.0, 2.0 * np.pi, n_terms)
    weights = rng.normal(0.0, 1.0, n_terms) / np.arange(1, n_terms + 1)
    w = 2.0 * np.pi * freqs
    arg = np.outer(np.maximum(tau, 0.0), w) + phases
    x = (np.sin(arg) - np.sin(phases)) @ weights
    dx = (np.cos(arg) * w) @ weights
    ramp, dramp = _smooth_ramp(tau, period)
    return ramp * x, dramp * x + ramp * dx


def generate_motion(spec: MotionSpec) -> list[frames.HumanSample]:
    """Torso samples on a uniform grid; orientation is held constant."""
    n = int(round(spec.duration * spec.rate)) + 1
    t = np.arange(n) / spec.rate
    tau = t - spec.lead_in
    local = np.zeros((n, 3))
    local_v = np.zeros((n, 3))
    if spec.kind == "Random3D":
        rng = np.random.default_rng(spec.seed)
        for axis in range(3):
            x, dx = _random_axis(tau, spec.period, rng)
            peak = np.max(np.abs(x))
            scale = spec.amplitude / peak if peak > 0.0 else 0.0
            local[:, axis] = scale * x
            local_v[:, axis] = scale * dx
    else:
        axis, sign = _STROKES[spec.kind]
        s, ds = _raised_cosine(tau, spec.period)
        local[:, axis] = sign * spec.amplitude * s
        local_v[:, axis] = sign * spec.amplitude * ds
        for off, weight in _LEAKS[spec.kind].items():
            local[:, off] = weight * spec.cross_coupling * spec.amplitude * s
            local_v[:, off] = weight * spec.cross_coupling * spec.amplitude * ds
    if spec.noise_std > 0.0:
        noise_rng = np.random.default_rng([spec.seed, 1])
        local = local + noise_rng.normal(0.0, spec.noise_std, local.shape)

    Q_H = quat_from_axis_angle([0.0, 0.0, 1.0], spec.heading)
    R_H = quat_to_matrix(Q_H)
    p = np.asarray(spec.start, dtype=float) + local @ R_H.T
    v = local_v @ R_H.T
    return [frames.HumanSample(float(t[k]), p[k], Q_H, v[k]) for k in range(n)]


def resample_trace(trace, rate: float) -> list[frames.HumanSample]:
    """Resample onto a uniform grid starting at the first timestamp.

    Positions and velocities are interpolated linearly, orientations by SLERP.
    """
    if len(trace) == 0:
        raise ValueError("cannot resample an empty trace")
    if rate <= 0.0:
        raise ValueError("rate must be > 0")
    t = np.array([s.t for s in trace], dtype=float)
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("trace timestamps must be strictly increasing")
    p = np.array([s.p_H for s in trace], dtype=float)
    v = np.array([s.v_H for s in trace], dtype=float)
    n = int(np.floor((t[-1] - t[0]) * rate + 1e-9)) + 1
    t_new = t[0] + np.arange(n) / rate
    out = []
    for tk in t_new:
        i = int(np.clip(np.searchsorted(t, tk, side="right") - 1, 0, len(t) - 1))
        if i == len(t) - 1 or abs(tk - t[i]) < 1e-12:
            out.append(frames.HumanSample(float(tk), p[i].copy(), np.asarray(trace[i].Q_H, float), v[i].copy()))
            continue
        s = (tk - t[i]) / (t[i + 1] - t[i])
        out.append(frames.HumanSample(
            float(tk),
            (1.0 - s) * p[i] + s * p[i + 1],
            slerp(trace[i].Q_H, trace[i + 1].Q_H, s),
            (1.0 - s) * v[i] + s * v[i + 1],
        ))
    return out


@dataclass(frozen=True)
class SimConfig:
    model: ArmModel
    theta0: np.ndarray
    method: str = "RJM"
    rate: float = 60.0
    gains: planners.Gains = field(default_factory=planners.Gains)
    svf: planners.SvfParams | None = field(default_factory=planners.SvfParams)
    mount_offset: np.ndarray = field(default_factory=lambda: np.array([0.0, -0.18, 0.25]))
    released_axis: str = "x"
    directional_limits: bool = False
    compensate: bool = True
    vel_limit: np.ndarray | None = None

    def __post_init__(self):
        method = self.method.upper()
        if method not in ("NBM", "RJM"):
            raise ValueError(f"unknown method {self.method!r}; expected NBM or RJM")
        object.__setattr__(self, "method", method)
        if not self.rate > 0.0:
            raise ValueError("rate must be > 0")
        if self.released_axis not in planners.AXES:
            raise ValueError("released_axis must be one of x, y, z")
        theta0 = np.asarray(self.theta0, dtype=float)
        if theta0.shape != (6,):
            raise ValueError(f"expected 6 joint values, got {theta0.size}")
        if not np.all((self.model.pos_min <= theta0) & (theta0 <= self.model.pos_max)):
            raise ValueError("initial joint configuration outside the position limits")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "mount_offset", np.asarray(self.mount_offset, dtype=float))

    @property
    def joint_limits(self) -> limits.JointLimits:
        lim = limits.JointLimits.from_model(self.model)
        if self.vel_limit is not None:
            lim = replace(lim, vel_limit=np.broadcast_to(np.asarray(self.vel_limit, float), (6,)).copy())
        return lim


@dataclass
class TraceLog:
    """Column-oriented per-tick record of one compensation run."""

    method: str
    scenario: str
    rate: float
    t: np.ndarray
    p_H: np.ndarray
    Q_H: np.ndarray
    v_B: np.ndarray
    delta_p_E: np.ndarray
    delta_eta: np.ndarray
    delta_eps: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_dot_raw: np.ndarray
    ee_position: np.ndarray
    ee_orientation: np.ndarray
    rho_E: np.ndarray
    p1_violation: np.ndarray
    saturated: np.ndarray

    def __len__(self):
        return len(self.t)


def _angular_speed(q_prev, q_next, dt):
    dq = quat_multiply(q_next, quat_conjugate(q_prev))
    return 2.0 * np.arctan2(np.linalg.norm(dq[1:]), abs(dq[0])) / dt


def _plan(config: SimConfig, J, v_B, dp, deps) -> planners.PlannerCommand:
    Jv, Jw = J[:3], J[3:]
    if config.method == "NBM":
        return planners.nbm_step(Jv, Jw, v_B, deps, config.gains, config.svf)
    J_MR = planners.reconstruct_jacobian(Jv, Jw, config.released_axis)
    kept = [i for i in range(3) if i != planners.AXES[config.released_axis]]
    return planners.rjm_step(J_MR, v_B, dp, deps[kept], config.gains, config.svf, config.released_axis)


def run_compensation(config: SimConfig, trace, scenario: str = "custom") -> TraceLog:
    """Run the closed loop over ``trace`` and log every tick.

    ``config.svf=None`` switches the planners to the unfiltered pseudo-inverse
    (used to demonstrate behaviour near singularities).
    """
    if len(trace) == 0:
        raise SimulationError("empty trace")
    t = np.array([s.t for s in trace], dtype=float)
    dt = 1.0 / config.rate
    if len(t) > 1 and not np.allclose(np.diff(t), dt, rtol=0.0, atol=1e-9):
        log.info("resampling trace onto the %.6g Hz loop grid", config.rate)
        trace = resample_trace(trace, config.rate)

    model = config.model
    lim = config.joint_limits
    try:
        home = frames.capture_home(trace[0], model, config.theta0)
    except frames.NotAtRestError as exc:
        raise SimulationError(f"home capture failed: {exc}", 0) from exc

    n = len(trace)
    out = {key: np.zeros((n, width)) for key, width in (
        ("p_H", 3), ("Q_H", 4), ("v_B", 3), ("delta_p_E", 3), ("delta_eps", 3),
        ("theta", 6), ("theta_dot", 6), ("theta_dot_raw", 6),
        ("ee_position", 3), ("ee_orientation", 4), ("rho_E", 3))}
    delta_eta = np.zeros(n)
    p1 = np.zeros(n, dtype=bool)
    saturated = np.zeros(n, dtype=bool)

    theta = config.theta0.copy()
    for k, sample in enumerate(trace):
        fk = forward_kinematics(model, theta)
        v_B = frames.base_velocity_local(home, sample)
        dp = frames.ee_position_variation(home, sample, fk)
        deta, deps = frames.ee_orientation_error(home, fk.orientation)

        if config.compensate:
            J = geometric_jacobian(model, theta)
            try:
                cmd = _plan(config, J, v_B, dp, deps)
            except np.linalg.LinAlgError as exc:
                raise SimulationError(f"planner failed: {exc}", k) from exc
            raw = cmd.theta_dot
        else:
            raw = np.zeros(6)
        if not np.all(np.isfinite(raw)):
            raise SimulationError("non-finite joint velocity from planner", k)
        cmd_dot = limits.clamp_velocity(raw, lim)

        R_H = quat_to_matrix(sample.Q_H)
        out["p_H"][k] = sample.p_H
        out["Q_H"][k] = sample.Q_H
        out["v_B"][k] = v_B
        out["delta_p_E"][k] = dp
        out["delta_eps"][k] = deps
        delta_eta[k] = deta
        out["theta"][k] = theta
        out["theta_dot"][k] = cmd_dot
        out["theta_dot_raw"][k] = raw
        out["ee_position"][k] = fk.position
        out["ee_orientation"][k] = fk.orientation
        out["rho_E"][k] = sample.p_H + R_H @ (config.mount_offset + fk.position)
        saturated[k] = bool(np.any(cmd_dot != raw))
        if k > 0:
            p1[k] = _angular_speed(trace[k - 1].Q_H, sample.Q_H, dt) > P1_ANGULAR_SPEED

        theta = limits.integrate_step(theta, cmd_dot, dt, lim, config.directional_limits)

    if np.any(p1):
        log.warning("torso angular speed exceeded %.3g rad/s on %d ticks", P1_ANGULAR_SPEED, int(p1.sum()))
    return TraceLog(
        method=config.method, scenario=scenario, rate=config.rate,
        t=np.array([s.t for s in trace], dtype=float),
        delta_eta=delta_eta, p1_violation=p1, saturated=saturated, **out,
    )
