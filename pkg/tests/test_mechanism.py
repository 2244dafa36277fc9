import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_haptics import JointAngles, MechanismParams, Pose, constraint_residual
from origami_haptics.errors import ConfigError
from origami_haptics.kinematics import home_pose
from origami_haptics.mechanism import (
    base_points,
    db_vector,
    db_vectors,
    db_vectors_dtheta,
    link_vectors,
    load_params,
    params_from_dict,
    params_to_dict,
    upper_link_vector,
    wrap_angle,
)

from oracles import elbow, plate_joint, residuals


def test_default_geometry(params):
    assert (params.L, params.l, params.d1, params.h1, params.d, params.h) == (17.5, 15, 12.15, 4.97, 7.5, 17.5)
    assert params.base_radius == 14.0
    assert params.tau_max == pytest.approx(1.39 * 17.5 / 4)


@pytest.mark.parametrize("theta", [0.0, 0.3, -0.5])
def test_db_vectors_match_point_oracle(params, theta):
    pose = (0.0, 0.0, 0.0, theta)
    for i in range(4):
        expected = plate_joint(params, pose, i)[:2]
        assert np.allclose(db_vector(params, i + 1, theta)[:2], expected, atol=1e-12)
        assert np.allclose(db_vectors(params, theta)[i], expected, atol=1e-12)


def test_db_vector_at_zero_twist(params):
    # frozen: (d1 + d/2, h/2 + h1) = (15.9, 13.72)
    assert np.allclose(db_vector(params, 1, 0.0)[:2], [15.9, 13.72])
    assert np.allclose(db_vector(params, 3, 0.0)[:2], [-15.9, -13.72])


def test_db_derivative_matches_finite_difference(params):
    th, eps = 0.2, 1e-6
    fd = (db_vectors(params, th + eps) - db_vectors(params, th - eps)) / (2 * eps)
    assert np.allclose(db_vectors_dtheta(params, th), fd, atol=1e-7)


def test_base_points_on_circle(params):
    pts = base_points(params)
    assert np.allclose(np.hypot(pts[:, 0], pts[:, 1]), params.base_radius)
    assert np.allclose(pts[:, 2], params.base_z)


def test_upper_link_vector(params):
    v = upper_link_vector(params, 1, 0.0)
    assert np.allclose(v, [params.L / math.sqrt(2), params.L / math.sqrt(2), 0.0])
    assert np.linalg.norm(upper_link_vector(params, 2, 0.7)) == pytest.approx(params.L)


def test_residual_matches_point_oracle(params):
    pose, q = (1.0, -2.0, 12.0, 0.2), (-0.3, -0.1, 0.0, -0.6)
    assert np.allclose(constraint_residual(params, pose, q), residuals(params, pose, q), atol=1e-9)


def test_link_lengths_at_home(params):
    home = home_pose(params)
    u = link_vectors(params, home, np.zeros(4))
    assert np.allclose(np.linalg.norm(u, axis=1), params.l)
    assert home.z == pytest.approx(10.545391415256661, abs=1e-12)


@pytest.mark.parametrize("change", [
    {"L": 0.0}, {"l": -1.0}, {"tau_max": float("nan")}, {"base_radius": -1.0},
    {"q_limits": ((0.5, 0.1),) * 4}, {"q_limits": ((0.0, 0.1),) * 3},
])
def test_invalid_params_rejected(change):
    with pytest.raises(ConfigError):
        MechanismParams(**change)


def test_config_roundtrip(params):
    back = params_from_dict(params_to_dict(params))
    assert np.allclose(back.q_limits, params.q_limits, atol=1e-15)
    assert back.with_(q_limits=params.q_limits, theta_limit=params.theta_limit) == params


def test_config_degrees_and_per_leg_limits():
    p = params_from_dict({"theta_limit": 20, "q_limits": [[-60, 0], [-50, 0], [-40, 0], [-30, 5]]})
    assert p.theta_limit == pytest.approx(math.radians(20))
    assert p.q_limits[3] == pytest.approx((math.radians(-30), math.radians(5)))


@pytest.mark.parametrize("data", [{"bogus": 1}, {"L": "long"}, {"q_limits": [1, 2, 3]}, []])
def test_config_errors(data):
    with pytest.raises(ConfigError):
        params_from_dict(data)


def test_load_params_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_params(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        load_params(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"base_radius": 13.0}))
    assert load_params(good).base_radius == 13.0


def test_scaled_geometry(params):
    s = params.scaled(2.0)
    assert s.L == 35.0 and s.base_radius == 28.0
    assert home_pose(s).z == pytest.approx(2 * home_pose(params).z)


@given(st.floats(-50, 50))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi <= w < math.pi + 1e-12
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)


def test_pose_and_joint_types():
    with pytest.raises(ValueError):
        Pose(0, 0, float("inf"))
    assert Pose(0, 0, 0, 2 * math.pi).theta == pytest.approx(0.0)
    with pytest.raises(ValueError):
        JointAngles((0.0, 0.0, 0.0))
    j = JointAngles.from_array(np.array([0.1, 0.2, 0.3, 0.4]))
    assert np.array_equal(j.as_array(), [0.1, 0.2, 0.3, 0.4])
