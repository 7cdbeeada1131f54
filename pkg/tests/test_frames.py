import numpy as np
import pytest

from compsim import frames
from compsim.frames import HumanSample
from compsim.kinematics import (
    QUAT_IDENTITY, forward_kinematics, quat_from_axis_angle, quat_multiply, quat_to_matrix,
)
from compsim.sim import MotionSpec, generate_motion


def sample(p=(0.0, 0.0, 1.2), q=QUAT_IDENTITY, v=(0.0, 0.0, 0.0), t=0.0):
    return HumanSample(t, np.asarray(p, float), np.asarray(q, float), np.asarray(v, float))


@pytest.fixture
def home(config):
    return frames.capture_home(sample(), config.model, config.theta0)


def test_capture_home(config):
    q = quat_from_axis_angle([0, 0, 1], 0.7)
    h = frames.capture_home(sample(q=q), config.model, config.theta0)
    np.testing.assert_array_equal(h.R_I_to_H0, quat_to_matrix(q).T)
    h2 = frames.capture_home(sample(q=q), config.model, config.theta0)
    assert np.array_equal(h.p_H_t0, h2.p_H_t0) and np.array_equal(h.R_I_to_H0, h2.R_I_to_H0)
    assert np.array_equal(h.fk0.position, h2.fk0.position)
    np.testing.assert_array_equal(h.Q_E0, forward_kinematics(config.model, config.theta0).orientation)


def test_capture_home_rejects_motion(config):
    with pytest.raises(frames.NotAtRestError, match="not at rest"):
        frames.capture_home(sample(v=(0.1, 0.0, 0.0)), config.model, config.theta0)


def test_base_displacement_sign(home):
    np.testing.assert_array_equal(frames.base_displacement(home, sample()), np.zeros(3))
    np.testing.assert_allclose(frames.base_displacement(home, sample(p=(0.1, 0.0, 1.2))),
                               [-0.1, 0.0, 0.0], atol=1e-15)


def test_base_displacement_translation_invariant(config, rng):
    offset = rng.normal(size=3)
    p0, p1 = rng.normal(size=3), rng.normal(size=3)
    h_a = frames.capture_home(sample(p=p0), config.model, config.theta0)
    h_b = frames.capture_home(sample(p=p0 + offset), config.model, config.theta0)
    np.testing.assert_allclose(frames.base_displacement(h_a, sample(p=p1)),
                               frames.base_displacement(h_b, sample(p=p1 + offset)), atol=1e-12)


def test_base_velocity_local(config, home, rng):
    np.testing.assert_array_equal(frames.base_velocity_local(home, sample()), np.zeros(3))
    np.testing.assert_array_equal(frames.base_velocity_local(home, sample(v=(0, 0, 0.1))), [0, 0, 0.1])
    q = quat_from_axis_angle(rng.normal(size=3), 1.1)
    h = frames.capture_home(sample(q=q), config.model, config.theta0)
    v = rng.normal(size=3)
    assert np.linalg.norm(frames.base_velocity_local(h, sample(q=q, v=v))) == pytest.approx(np.linalg.norm(v))


def test_ee_position_variation(config, home):
    fk0 = forward_kinematics(config.model, config.theta0)
    np.testing.assert_array_equal(frames.ee_position_variation(home, sample(), fk0), np.zeros(3))
    # body moved by +d, arm frozen: the EE drifted +d in the world
    d = np.array([0.0, 0.0, -0.05])
    moved = sample(p=np.array([0.0, 0.0, 1.2]) + d)
    np.testing.assert_allclose(frames.ee_position_variation(home, moved, fk0), -d, atol=1e-15)
    # body still, arm moved the EE by q in the base frame
    theta = config.theta0 + np.array([0.01, -0.02, 0.015, 0.0, 0.01, 0.0])
    fk = forward_kinematics(config.model, theta)
    q = fk.position - fk0.position
    np.testing.assert_allclose(frames.ee_position_variation(home, sample(), fk), -q, atol=1e-15)
    # exact compensation: arm moved by -d while the body moved by +d
    fake = type(fk0)(fk0.position - d, fk0.orientation)
    np.testing.assert_allclose(frames.ee_position_variation(home, moved, fake), 0.0, atol=1e-15)


def test_ee_orientation_error(config, home):
    Q0 = home.Q_E0
    deta, deps = frames.ee_orientation_error(home, Q0)
    np.testing.assert_allclose(deps, 0.0, atol=1e-15)
    # rotate 5 deg about the EE's own z axis
    Q_now = quat_multiply(Q0, quat_from_axis_angle([0, 0, 1], np.radians(5)))
    deta, deps = frames.ee_orientation_error(home, Q_now)
    z_ee = quat_to_matrix(Q0)[:, 2]
    np.testing.assert_allclose(deps, -np.sin(np.radians(2.5)) * z_ee, atol=1e-12)
    assert deta > 0.0


def test_round_trip_returns_to_zero(home):
    np.testing.assert_allclose(frames.base_displacement(home, sample(p=(0.3, -0.2, 1.0))) +
                               frames.base_displacement(home, sample(p=(0.0, 0.0, 1.2))),
                               frames.base_displacement(home, sample(p=(0.3, -0.2, 1.0))), atol=1e-12)
    assert np.abs(frames.base_displacement(home, sample(p=(0.0, 0.0, 1.2)))).max() <= 1e-12


def test_displacement_is_integral_of_velocity(config):
    trace = generate_motion(MotionSpec(kind="Random3D", seed=3, duration=15.0))
    h = frames.capture_home(trace[0], config.model, config.theta0)
    v = np.array([frames.base_velocity_local(h, s) for s in trace])
    t = np.array([s.t for s in trace])
    integral = np.concatenate((np.zeros((1, 3)), np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t)[:, None], axis=0)))
    # sign: displacement is (start - now), i.e. minus the integral
    disp = np.array([frames.base_displacement(h, s) for s in trace])
    assert np.abs(disp + integral).max() < 1e-3


def test_outputs_invariant_to_world_rotation(config, rng):
    trace = generate_motion(MotionSpec(kind="Random3D", seed=5, duration=6.0))
    fk = forward_kinematics(config.model, config.theta0 + 0.02)
    Qw = quat_from_axis_angle(rng.normal(size=3), 0.9)
    Rw = quat_to_matrix(Qw)
    rotated = [HumanSample(s.t, Rw @ s.p_H, quat_multiply(Qw, s.Q_H), Rw @ s.v_H) for s in trace]
    h = frames.capture_home(trace[0], config.model, config.theta0)
    hr = frames.capture_home(rotated[0], config.model, config.theta0)
    for s, sr in zip(trace[::37], rotated[::37]):
        np.testing.assert_allclose(frames.base_displacement(h, s), frames.base_displacement(hr, sr), atol=1e-9)
        np.testing.assert_allclose(frames.base_velocity_local(h, s), frames.base_velocity_local(hr, sr), atol=1e-9)
        np.testing.assert_allclose(frames.ee_position_variation(h, s, fk),
                                   frames.ee_position_variation(hr, sr, fk), atol=1e-9)
