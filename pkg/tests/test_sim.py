"""Simulator tests: geometry SDFs, exact raycasts against a ray-marching
oracle, the arc integrator, scenario file loading, and closed-loop runs."""

import math

import numpy as np
import numpy.testing as npt
import pytest

import oracles
from gpfrontier.nav import MotionCommand
from gpfrontier.sim import (
    Circle,
    Rect,
    RobotState,
    Scenario,
    ScenarioError,
    SensorModel,
    World,
    integrate,
    load_scenario,
    raycast_scan,
    run_scenario,
    scenario_path,
)
from gpfrontier.surface import cartesian_to_spherical


# -------------------------------------------------------------- clearance


def test_rect_clearance():
    r = Rect(0.0, 0.0, 2.0, 1.0)
    assert r.clearance(3.0, 0.5) == pytest.approx(1.0)
    assert r.clearance(-3.0, -4.0) == pytest.approx(5.0)  # corner diagonal
    assert r.clearance(0.5, 0.5) == pytest.approx(-0.5)   # inside: depth
    assert r.clearance(2.0, 1.0) == pytest.approx(0.0)


def test_circle_clearance():
    c = Circle(1.0, 1.0, 0.5)
    assert c.clearance(4.0, 1.0) == pytest.approx(2.5)
    assert c.clearance(1.0, 1.0) == pytest.approx(-0.5)


def test_world_min_clearance():
    w = World(obstacles=(Rect(0, 0, 1, 1), Circle(5, 0, 1)))
    assert w.min_clearance(3.0, 0.0) == pytest.approx(1.0)
    assert World().min_clearance(0, 0) == math.inf


def test_obstacle_validation():
    with pytest.raises(ValueError):
        Rect(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Circle(0.0, 0.0, 0.0)


# ---------------------------------------------------------------- raycast


def test_wall_ahead_exact_range():
    world = World(obstacles=(Rect(3.0, -5.0, 3.5, 5.0, height=2.0),))
    sensor = SensorModel()
    cloud = raycast_scan(world, RobotState(0.0, 0.0, 0.0), sensor)
    assert cloud.shape[0] > 0
    # beams straight ahead hit the wall face at planar distance 3 on every ring
    ahead = cloud[np.abs(np.arctan2(cloud[:, 1], cloud[:, 0])) < 1e-9]
    assert ahead.shape[0] == sensor.grid().n_alpha
    npt.assert_allclose(np.hypot(ahead[:, 0], ahead[:, 1]), 3.0, rtol=1e-12)


def test_empty_world_scan_is_empty():
    cloud = raycast_scan(World(), RobotState(0, 0, 0), SensorModel())
    assert cloud.shape == (0, 3)


def test_scan_beyond_range_is_empty():
    world = World(obstacles=(Circle(20.0, 0.0, 1.0),))
    cloud = raycast_scan(world, RobotState(0, 0, 0), SensorModel(max_range=5.0))
    assert cloud.shape == (0, 3)


def test_low_obstacle_visible_only_to_low_rings():
    # 2 m away, 0.3 m tall: rings with 2*tan(alpha) > 0.3 pass over it
    world = World(obstacles=(Rect(2.0, -4.0, 2.4, 4.0, height=0.3),))
    cloud = raycast_scan(world, RobotState(0, 0, 0), SensorModel())
    assert cloud.shape[0] > 0
    pts = [cartesian_to_spherical(p) for p in cloud]
    alphas = np.array([p.alpha for p in pts])
    d_xy = np.array([p.r * math.cos(p.alpha) for p in pts])
    assert np.all(d_xy * np.tan(alphas) <= 0.3 + 1e-9)
    assert alphas.max() < math.radians(9.0)


def test_raycast_matches_marching_oracle():
    world = World(
        obstacles=(
            Rect(2.0, -1.0, 3.0, 2.5, height=1.2),
            Rect(-4.0, -3.5, -1.5, -2.5, height=0.6),
            Circle(0.5, 3.0, 0.8, height=1.5),
            Circle(-2.0, 1.5, 0.6, height=0.35),
        )
    )
    state = RobotState(0.3, -0.2, 0.4)
    sensor = SensorModel(max_range=5.0)
    cloud = raycast_scan(world, state, sensor)
    assert cloud.shape[0] > 100
    rng = np.random.default_rng(0)
    for i in rng.choice(cloud.shape[0], size=40, replace=False):
        sp = cartesian_to_spherical(cloud[i])
        want = oracles.march_ray(
            world, (state.x, state.y), state.heading + sp.theta, sp.alpha,
            sensor.max_range, step=2e-3,
        )
        assert sp.r == pytest.approx(want, abs=1e-3), f"beam {i}"


def test_scan_noise_deterministic_per_seed():
    world = World(obstacles=(Circle(2.5, 0.0, 1.0),))
    sensor = SensorModel(noise_sigma=0.02)
    state = RobotState(0, 0, 0)
    a = raycast_scan(world, state, sensor, np.random.default_rng(9))
    b = raycast_scan(world, state, sensor, np.random.default_rng(9))
    c = raycast_scan(world, state, sensor, np.random.default_rng(10))
    npt.assert_array_equal(a, b)
    assert a.shape != c.shape or not np.array_equal(a, c)


def test_scan_noise_never_exceeds_max_range():
    world = World(obstacles=(Rect(4.2, -6, 4.6, 6),))
    sensor = SensorModel(noise_sigma=0.3)
    cloud = raycast_scan(world, RobotState(0, 0, 0), sensor, np.random.default_rng(3))
    r = np.linalg.norm(cloud, axis=1)
    assert cloud.shape[0] > 0
    assert np.all(r < sensor.max_range)
    assert np.all(r > 0)


# -------------------------------------------------------------- integrate


def test_integrate_straight():
    s = integrate(RobotState(1.0, 2.0, math.pi / 2, t=3.0), MotionCommand(1.0, 0.0), 0.5)
    assert (s.x, s.y) == pytest.approx((1.0, 2.5))
    assert s.heading == pytest.approx(math.pi / 2)
    assert s.t == pytest.approx(3.5)


def test_integrate_half_circle():
    # v = w = 1 for pi seconds: unit-radius half circle ending at (0, 2)
    s = integrate(RobotState(0, 0, 0), MotionCommand(1.0, 1.0), math.pi)
    assert (s.x, s.y) == pytest.approx((0.0, 2.0), abs=1e-12)
    assert abs(s.heading) == pytest.approx(math.pi)


def test_integrate_composition_matches_closed_form():
    cmd = MotionCommand(0.8, -0.6)
    fine = RobotState(0.5, -1.0, 0.3)
    for _ in range(100):
        fine = integrate(fine, cmd, 0.02)
    coarse = integrate(RobotState(0.5, -1.0, 0.3), cmd, 2.0)
    assert (fine.x, fine.y) == pytest.approx((coarse.x, coarse.y), abs=1e-9)
    assert fine.t == pytest.approx(coarse.t)


def test_integrate_heading_wraps():
    s = integrate(RobotState(0, 0, 3.0), MotionCommand(0.0, 1.0), 1.0)
    assert -math.pi <= s.heading < math.pi


def test_integrate_bad_dt():
    with pytest.raises(ValueError):
        integrate(RobotState(0, 0, 0), MotionCommand(1, 0), 0.0)


# ---------------------------------------------------------------- loading


def write_yaml(tmp_path, text, name="case.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


GOOD_YAML = """
name: demo
start: [1.0, -2.0, 90.0]
goal: [4.0, 4.0]
timeout: 60
world:
  bounds: [-5, 5, -5, 5]
  obstacles:
    - {type: rect, x0: 0, y0: 0, x1: 1, y1: 1, height: 0.8}
    - {type: circle, cx: 2, cy: 2, radius: 0.5}
sensor:
  max_range: 4.0
  noise_sigma: 0.01
fit:
  num_inducing: 64
  max_iters: 10
nav:
  k_dir: 2.5
surface:
  n_max: 1500
"""


def test_load_scenario_full(tmp_path):
    sc = load_scenario(write_yaml(tmp_path, GOOD_YAML))
    assert sc.name == "demo"
    assert sc.start == pytest.approx((1.0, -2.0, math.pi / 2))
    assert sc.goal == (4.0, 4.0)
    assert sc.timeout == 60.0
    assert len(sc.world.obstacles) == 2
    assert sc.world.obstacles[0].height == 0.8
    assert sc.sensor.max_range == 4.0
    assert sc.fit.num_inducing == 64
    assert sc.nav.k_dir == 2.5
    assert sc.nav.k_dst == 5.0  # untouched default
    assert sc.surface_n_max == 1500
    assert sc.surface_config().n_max == 1500
    assert sc.surface_config().r_oc == 4.0


def test_load_scenario_overrides_win(tmp_path):
    path = write_yaml(tmp_path, GOOD_YAML)
    sc = load_scenario(path, {"nav.k_dir": 0.0, "sensor.max_range": 3.0})
    assert sc.nav.k_dir == 0.0
    assert sc.sensor.max_range == 3.0


def test_load_scenario_unknown_key(tmp_path):
    bad = GOOD_YAML.replace("k_dir: 2.5", "k_dirr: 2.5")
    with pytest.raises(ScenarioError, match="k_dirr"):
        load_scenario(write_yaml(tmp_path, bad))


def test_load_scenario_bad_yaml_reports_line(tmp_path):
    path = write_yaml(tmp_path, "start: [1, 2\ngoal: [3, 4]\n")
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(path)


def test_load_scenario_missing_start(tmp_path):
    with pytest.raises(ScenarioError, match="start"):
        load_scenario(write_yaml(tmp_path, "goal: [1, 1]\n"))


def test_load_scenario_bad_obstacle(tmp_path):
    text = "start: [0, 0, 0]\ngoal: [1, 1]\nworld:\n  obstacles:\n    - {type: blob}\n"
    with pytest.raises(ScenarioError, match="obstacle #0"):
        load_scenario(write_yaml(tmp_path, text))


def test_unknown_scenario_name():
    with pytest.raises(ScenarioError, match="built-ins"):
        scenario_path("NOPE")


def test_builtin_scenarios_load():
    for name in ("MD", "X", "SU", "CU", "GU"):
        sc = load_scenario(name)
        assert sc.name == name
        assert sc.timeout == 120.0
        assert len(sc.world.obstacles) > 0


# ------------------------------------------------------------ closed loop

FAST_LOOP = """
name: loop
start: [0.0, 0.0, 0.0]
goal: [2.5, 0.0]
timeout: 20
world:
  bounds: [-6, 6, -6, 6]
  obstacles:
    - {type: rect, x0: 1.0, y0: 1.5, x1: 2.0, y1: 2.2, height: 0.9}
fit:
  num_inducing: 50
  max_iters: 6
  rel_tol: 1.0e-4
"""


def test_run_scenario_reaches_visible_goal(tmp_path):
    path = write_yaml(tmp_path, FAST_LOOP)
    log = run_scenario(path, seed=0)
    assert log.success and not log.collided and not log.timed_out
    assert math.hypot(log.x[-1] - 2.5, log.y[-1]) <= 0.5
    dt = np.diff(log.t)
    npt.assert_allclose(dt, dt[0], rtol=1e-9)
    assert np.all(log.r_min > 0.25)
    assert log.fit_ms.shape[0] == log.predict_ms.shape[0] == log.train_sizes.shape[0]
    assert log.fit_ms.shape[0] >= 1
    assert log.scenario == "loop"


BLOCKED_LOOP = """
name: blocked
start: [0.0, 0.0, 0.0]
goal: [3.5, 2.0]
timeout: 30
world:
  bounds: [-5, 5, -5, 5]
  obstacles:
    - {type: rect, x0: -4.8, y0: -4.8, x1: 4.8, y1: -4.5, height: 1.5}
    - {type: rect, x0: -4.8, y0: 4.5, x1: 4.8, y1: 4.8, height: 1.5}
    - {type: rect, x0: -4.8, y0: -4.5, x1: -4.5, y1: 4.5, height: 1.5}
    - {type: rect, x0: 4.5, y0: -4.5, x1: 4.8, y1: 4.5, height: 1.5}
    - {type: rect, x0: 1.2, y0: -4.8, x1: 1.5, y1: 1.0, height: 1.5}
sensor:
  noise_sigma: 0.02
fit:
  num_inducing: 50
  max_iters: 6
  rel_tol: 1.0e-4
frontier:
  k_m: 1.5
"""


def test_run_scenario_goal_behind_wall_goes_lateral(tmp_path):
    log = run_scenario(write_yaml(tmp_path, BLOCKED_LOOP), seed=0)
    # first decision must target a frontier well off the blocked bearing
    assert np.isfinite(log.frontier_theta[0])
    assert abs(log.frontier_theta[0]) > 0.2
    assert log.success and not log.collided


def test_run_scenario_bitwise_deterministic(tmp_path):
    path = write_yaml(tmp_path, BLOCKED_LOOP)
    a = run_scenario(path, seed=3)
    b = run_scenario(path, seed=3)
    for name in ("t", "x", "y", "heading", "v", "w", "r_min"):
        npt.assert_array_equal(getattr(a, name), getattr(b, name), err_msg=name)
    c = run_scenario(path, seed=4)
    assert len(a) != len(c) or not np.array_equal(a.y, c.y)


def test_run_scenario_collision_with_unseen_curb(tmp_path):
    # a 2 cm curb under the lowest ring: with alpha_min at 5 deg it is only
    # visible inside 0.23 m, far less than the collision distance
    text = """
name: curb
start: [0.0, 0.0, 0.0]
goal: [4.0, 0.0]
timeout: 20
world:
  obstacles:
    - {type: circle, cx: 1.5, cy: 0.0, radius: 0.3, height: 0.02}
sensor:
  alpha_min_deg: 5.0
fit:
  num_inducing: 40
  max_iters: 4
"""
    log = run_scenario(write_yaml(tmp_path, text), seed=0)
    assert log.collided and not log.success
    assert log.r_min[-1] < 0.25
    assert log.x[-1] < 1.5


def test_run_scenario_rate_mismatch(tmp_path):
    text = "start: [0,0,0]\ngoal: [1,0]\nphysics_hz: 48\nworld:\n  obstacles:\n    - {type: circle, cx: 9, cy: 9, radius: 1}\n"
    with pytest.raises(ScenarioError, match="multiple"):
        run_scenario(write_yaml(tmp_path, text), seed=0)


def test_scenario_requires_positive_extent():
    with pytest.raises(ValueError):
        Scenario(name="x", world=World(), start=(0, 0, 0), goal=(1, 1), physics_hz=0.0)
