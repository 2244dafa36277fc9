import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_haptics import demos
from origami_haptics.errors import ConfigError, NonMonotoneTime
from origami_haptics.rendering import (
    DEFAULT_K_THETA,
    ContactState,
    FingerSample,
    Renderer,
    Scene,
    SceneBox,
    contact_force,
    parse_trajectory,
    render_steps,
    render_trajectory,
    scene_from_dict,
    scene_to_dict,
    torsion_update,
    trace_csv,
    trajectory_csv,
    update_box_proxy,
    update_proxy,
)
from origami_haptics.statics import Wrench

TOP = SceneBox(center=(0.0, 0.0, -5.0), half_extents=(20.0, 20.0, 5.0))
SCENE = Scene((TOP,))


def sample(t, x=0.0, y=0.0, z=0.0, twist=0.0):
    return FingerSample(t, (x, y, z), twist)


def free_state(f):
    return ContactState.free(f)


def test_free_motion():
    f = sample(0.0, 1.0, 2.0, 3.0, 0.2)
    st_ = update_proxy(SCENE, free_state(f), f)
    assert not st_.in_contact
    assert st_.proxy_position == (1.0, 2.0, 3.0) and st_.proxy_twist == 0.2
    assert contact_force(SCENE, st_, f) == Wrench()


def test_normal_penetration():
    f = sample(0.0, 1.0, -1.0, -2.0)
    st_ = update_proxy(SCENE, free_state(sample(0.0, 1.0, -1.0, 1.0)), f)
    assert st_.in_contact
    assert st_.proxy_position == pytest.approx((1.0, -1.0, 0.0))
    assert st_.contact_normal == pytest.approx((0.0, 0.0, 1.0))
    # 2 mm at 500 N/m
    assert contact_force(SCENE, st_, f).fz == pytest.approx(1.0)


def test_static_cone_limit_and_slip():
    # press 2 mm (fn = 1 N) then slide: pinned while k*offset <= 2.0 N
    st_ = update_proxy(SCENE, free_state(sample(0.0)), sample(0.0, z=-2.0))
    k = TOP.stiffness / 1000
    for i, y in enumerate(np.linspace(0.0, 6.0, 61)[1:]):
        f = sample(0.01 * (i + 1), y=y, z=-2.0)
        prev = st_
        st_ = update_proxy(SCENE, st_, f)
        w = contact_force(SCENE, st_, f)
        if k * y <= TOP.mu_static * 1.0 + 1e-12 and not prev.slipping:
            assert st_.proxy_position[1] == pytest.approx(0.0) and not st_.slipping
            assert w.fy == pytest.approx(-k * y)
        else:
            assert st_.slipping
            assert abs(w.fy) == pytest.approx(TOP.mu_dynamic * 1.0)


def test_friction_stops_slipping_when_motion_reverses():
    st_ = update_proxy(SCENE, free_state(sample(0.0)), sample(0.0, z=-2.0))
    st_ = update_proxy(SCENE, st_, sample(0.1, y=6.0, z=-2.0))
    assert st_.slipping
    st_ = update_proxy(SCENE, st_, sample(0.2, y=5.0, z=-2.0))
    assert not st_.slipping


def test_torsion_examples():
    f0 = sample(0.0, z=-2.0, twist=0.1)
    st_ = update_proxy(SCENE, free_state(sample(0.0, twist=0.1)), f0)
    assert torsion_update(st_, f0) == 0.0
    f1 = sample(0.1, z=-2.0, twist=0.1 + math.radians(10))
    st_ = update_proxy(SCENE, st_, f1)
    assert DEFAULT_K_THETA == pytest.approx(28.6479, abs=1e-4)
    assert torsion_update(st_, f1) == pytest.approx(5.0)
    # break contact and come back at a new twist: restart from zero
    st_ = update_proxy(SCENE, st_, sample(0.2, z=1.0, twist=0.5))
    assert torsion_update(st_, sample(0.2, z=1.0, twist=0.5)) == 0.0
    f3 = sample(0.3, z=-1.0, twist=0.5)
    st_ = update_proxy(SCENE, st_, f3)
    assert torsion_update(st_, f3) == 0.0


@given(st.floats(-1.0, 1.0))
def test_torque_is_odd(delta):
    f0 = sample(0.0, z=-1.0)
    st_ = update_proxy(SCENE, free_state(sample(0.0)), f0)
    plus = torsion_update(st_, sample(0.1, z=-1.0, twist=delta))
    minus = torsion_update(st_, sample(0.1, z=-1.0, twist=-delta))
    assert plus == -minus


def test_side_face_contact_normal():
    box = SceneBox(center=(0.0, 0.0, 0.0), half_extents=(2.0, 2.0, 2.0))
    scene = Scene((box,), (-5, -5, -5), (5, 5, 5))
    f = sample(0.0, x=1.8, y=0.0, z=0.0)
    st_ = update_proxy(scene, free_state(sample(0.0, x=3.0)), f)
    assert st_.contact_normal == pytest.approx((1.0, 0.0, 0.0))
    assert st_.proxy_position == pytest.approx((2.0, 0.0, 0.0))


def test_moving_box_carries_pinned_proxy():
    box = SceneBox(center=(0.0, 0.0, -5.0), half_extents=(5.0, 5.0, 5.0), grounded=False,
                   motion=((0.0, 0.0, 0.0, -5.0, 0.0), (1.0, 0.0, 1.0, -5.0, 0.0)))
    scene = Scene((box,))
    r = Renderer(scene)
    r.step(sample(0.0, z=-1.0))
    out = r.step(sample(1.0, z=-1.0))
    assert out.states[0].proxy_position == pytest.approx((0.0, 1.0, 0.0))
    assert out.wrench.fy == pytest.approx(0.5)


def test_multi_box_wrenches_sum():
    a = SceneBox(center=(-1.0, 0.0, -5.0), half_extents=(1.5, 5.0, 5.0))
    b = SceneBox(center=(1.0, 0.0, -5.0), half_extents=(1.5, 5.0, 5.0), stiffness=300.0)
    scene = Scene((a, b))
    f = sample(0.0, x=0.0, z=-1.0)
    out = Renderer(scene).step(f)
    parts = [contact_force(scene, st_, f) for st_ in out.states if st_.in_contact]
    assert len(parts) == 2
    assert out.raw.as_array() == pytest.approx(sum(p.as_array() for p in parts))
    assert out.raw.fz == pytest.approx(0.5 + 0.3)


def test_proxy_avoids_neighbouring_box():
    ground = SceneBox(center=(0.0, 0.0, -5.0), half_extents=(20.0, 20.0, 5.0))
    bump = SceneBox(center=(0.0, 0.0, 1.0), half_extents=(1.0, 1.0, 1.0))
    scene = Scene((ground, bump))
    # straight down through the bump into the ground
    st_ = update_box_proxy(ground, 0, ContactState.free(sample(0.0)), sample(0.0, z=-0.5), (bump,))
    assert bump.signed_distance(0.0, st_.proxy_position) >= 0.0
    assert ground.signed_distance(0.0, st_.proxy_position) >= -1e-12


def test_render_errors():
    with pytest.raises(NonMonotoneTime):
        render_trajectory(SCENE, [sample(0.0), sample(0.0)])
    with pytest.raises(ConfigError):
        render_trajectory(SCENE, [])


def test_free_space_trace_is_zero():
    traj = [sample(0.01 * i, x=math.sin(i), y=0.5, z=2.0 + 0.1 * i) for i in range(50)]
    assert all(w == Wrench() for _, w in render_trajectory(SCENE, traj))


def test_device_clamps_and_workspace_clamp():
    stiff = Scene((SceneBox((0, 0, -5), (20, 20, 5), stiffness=5000.0),))
    traj = [sample(0.0, z=1.0), sample(0.1, z=-10.0), sample(0.2, y=3.0, z=-10.0, twist=1.0)]
    steps = render_steps(stiff, traj)
    # the finger cannot go below the workspace floor at -3.5 mm
    assert steps[1].finger.position[2] == -3.5
    assert steps[1].raw.fz == pytest.approx(17.5)
    w = steps[2].wrench
    assert w.fz == 2.0 and abs(w.fy) <= 1.5 and w.tz == 5.0


def test_renderers_are_independent():
    t1 = [sample(0.01 * i, y=0.05 * i, z=-1.0) for i in range(30)]
    t2 = [sample(0.01 * i, x=-0.05 * i, z=-2.0, twist=0.01 * i) for i in range(30)]
    r1, r2 = Renderer(SCENE), Renderer(SCENE)
    mixed = [(r1.step(a).wrench, r2.step(b).wrench) for a, b in zip(t1, t2)]
    assert [m[0] for m in mixed] == [w for _, w in render_trajectory(SCENE, t1)]
    assert [m[1] for m in mixed] == [w for _, w in render_trajectory(SCENE, t2)]


coord = st.floats(-3.0, 3.0)


@given(st.lists(st.tuples(coord, coord, st.floats(-3.0, 2.0), st.floats(-0.3, 0.3)), min_size=2, max_size=40))
def test_trace_invariants(points):
    scene = Scene((TOP, SceneBox((2.0, 0.0, -1.0), (1.0, 1.0, 1.0))))
    traj = [sample(0.01 * i, x, y, z, tw) for i, (x, y, z, tw) in enumerate(points)]
    steps = render_steps(scene, traj)
    prev = None
    for s in steps:
        for st_ in s.states:
            if st_.in_contact:
                for box in scene.boxes:
                    assert box.signed_distance(s.t, st_.proxy_position) >= -1e-9
            else:
                assert st_.proxy_position == s.finger.position
        assert s.tangential_force <= s.friction_limit + 1e-9
        w = s.wrench
        assert abs(w.fx) <= 1.5 and abs(w.fy) <= 1.5 and abs(w.fz) <= 2.0 and abs(w.tz) <= 5.0


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3.4, 2.0)), min_size=2, max_size=40))
def test_normal_force_continuity(points):
    traj = [sample(0.01 * i, x, y, z) for i, (x, y, z) in enumerate(points)]
    steps = render_steps(SCENE, traj)
    k = TOP.stiffness / 1000
    for a, b in zip(steps, steps[1:]):
        step = np.linalg.norm(np.subtract(b.finger.position, a.finger.position))
        assert abs(b.normal_force - a.normal_force) <= k * step + 1e-12


def test_passivity_closed_loop():
    # press, trace a loop on the surface within the static cone, release
    t = np.linspace(0, 1, 401)
    u = np.clip((t - 0.1) / 0.8, 0, 1)
    x = 0.8 * np.sin(2 * math.pi * u)
    y = 0.8 * (1 - np.cos(2 * math.pi * u))
    z = np.where(t < 0.1, 1.0 - 30 * t, -2.0)
    z = np.where(t > 0.9, -2.0 + 30 * (t - 0.9), z)
    traj = [sample(ti, xi, yi, zi) for ti, xi, yi, zi in zip(t, x, y, z)]
    steps = render_steps(SCENE, traj)
    assert all(s.pinned for s in steps)
    work = 0.0
    for a, b in zip(steps, steps[1:]):
        fa, fb = a.raw.as_array()[:3], b.raw.as_array()[:3]
        dx = np.subtract(b.finger.position, a.finger.position)
        work += -0.5 * (fa + fb) @ dx  # user work against the rendered force, N*mm = mJ
    assert work >= -1e-6


def test_scene_validation():
    with pytest.raises(ConfigError):
        SceneBox((0, 0, 0), (1, 1, 1), stiffness=0.0)
    with pytest.raises(ConfigError):
        SceneBox((0, 0, 0), (1, 1, 1), mu_static=1.0, mu_dynamic=1.5)
    with pytest.raises(ConfigError):
        SceneBox((0, 0, 0), (1, 1, 1), grounded=True, motion=((0, 0, 0, 0, 0),))
    with pytest.raises(ConfigError):
        scene_from_dict({"boxes": [{"center": [0, 0], "half_extents": [1, 1, 1]}]})
    with pytest.raises(ConfigError):
        scene_from_dict({"boxes": [], "extra": 1})
    with pytest.raises(ConfigError):
        Scene((), (1, 1, 1), (0, 0, 0))


def test_scene_roundtrip():
    scene = demos.demo2_scene()
    back = scene_from_dict(json.loads(json.dumps(scene_to_dict(scene))))
    assert np.allclose(back.boxes[1].motion, scene.boxes[1].motion)
    assert back.workspace_lower == scene.workspace_lower


def test_trajectory_csv():
    traj = [sample(0.0, 1, 2, 3, math.radians(5)), sample(0.5, 0, 0, 0, 0)]
    back = parse_trajectory(trajectory_csv(traj))
    assert back[0].twist == pytest.approx(math.radians(5))
    with pytest.raises(ConfigError):
        parse_trajectory("t,x,y,z,twist\n0,0,0,0,0\n")
    with pytest.raises(NonMonotoneTime):
        parse_trajectory("t_s,x_mm,y_mm,z_mm,twist_deg\n1,0,0,0,0\n0,0,0,0,0\n")
    with pytest.raises(ConfigError):
        parse_trajectory("t_s,x_mm,y_mm,z_mm,twist_deg\n0,a,0,0,0\n")


def test_trace_csv_format():
    text = trace_csv([(0.0, Wrench(1, 2, 0.5, -3))])
    assert text == "t_s,fx_N,fy_N,fz_N,tz_Nmm\n0.0000,1.000000,2.000000,0.500000,-3.000000\n"


@pytest.mark.parametrize("demo", [1, 2])
def test_shipped_fixtures_match_generators(demo):
    scene_text, traj_text = demos.demo_fixture_text(demo)
    scene_fn, traj_fn = demos.DEMOS[demo]
    assert traj_text == trajectory_csv(traj_fn())
    assert json.loads(scene_text) == json.loads(json.dumps(scene_to_dict(scene_fn())))
