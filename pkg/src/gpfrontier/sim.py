"""Deterministic 2D world, multi-ring range sensor, unicycle robot.

The sensor casts one planar ray per azimuth cell and reuses the planar
obstacle distance for every elevation ring: a ring at elevation ``a`` hits
an obstacle of height h at planar distance d iff d*tan(a) <= h, with slant
range d/cos(a). World geometry is axis-aligned rectangles and circles, all
grounded at z = 0, which makes scans exact and fast.

A scenario file binds world, start/goal, sensor, and all pipeline
parameters; :func:`run_scenario` executes the closed loop scan -> fit ->
frontier -> command -> integrate and records a uniformly sampled log.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import frontier as frontier_mod
from . import gp, metrics, nav, surface

_SCENARIO_DIR = Path(__file__).parent / "scenarios"
BUILTIN_SCENARIOS = ("MD", "X", "SU", "CU", "GU")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned box from (x0, y0) to (x1, y1), occupying z in [0, height]."""

    x0: float
    y0: float
    x1: float
    y1: float
    height: float = 1.5

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle must have positive extent")

    def clearance(self, x: float, y: float) -> float:
        qx = max(self.x0 - x, 0.0, x - self.x1)
        qy = max(self.y0 - y, 0.0, y - self.y1)
        if qx == 0.0 and qy == 0.0:  # inside: negative penetration depth
            return -min(x - self.x0, self.x1 - x, y - self.y0, self.y1 - y)
        return math.hypot(qx, qy)


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float
    height: float = 1.5

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be > 0")

    def clearance(self, x: float, y: float) -> float:
        return math.hypot(x - self.cx, y - self.cy) - self.radius


@dataclass(frozen=True)
class World:
    """Obstacle list plus nominal bounds (used for plots and validation)."""

    bounds: tuple[float, float, float, float] = (-10.0, 10.0, -10.0, 10.0)
    obstacles: tuple = ()

    def min_clearance(self, x: float, y: float) -> float:
        if not self.obstacles:
            return math.inf
        return min(ob.clearance(x, y) for ob in self.obstacles)


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading: float  # rad
    t: float = 0.0  # s


@dataclass(frozen=True)
class SensorModel:
    """Beam lattice and noise of the range sensor.

    The lattice matches the occupancy-surface grid by construction:
    azimuth covers the full circle, elevation rings sit at the cell centers
    of [alpha_min, alpha_max].
    """

    max_range: float = 5.0
    rate_hz: float = 5.0
    noise_sigma: float = 0.0
    res_theta: float = math.radians(0.35)
    res_alpha: float = math.radians(2.0)
    alpha_min: float = 0.0
    alpha_max: float = math.radians(15.0)

    def grid(self) -> surface.SurfaceConfig:
        return surface.SurfaceConfig(
            r_oc=self.max_range,
            alpha_min=self.alpha_min,
            alpha_max=self.alpha_max,
            res_theta=self.res_theta,
            res_alpha=self.res_alpha,
        )


def _ray_rects(ox, oy, dx, dy, rects) -> np.ndarray:
    """Planar hit distances (n_rects, n_beams); inf where a ray misses."""
    # Degenerate direction components become signed tiny values so the slab
    # arithmetic yields +/-inf instead of NaN.
    inv_x = 1.0 / np.where(np.abs(dx) < 1e-300, np.copysign(1e-300, dx), dx)
    inv_y = 1.0 / np.where(np.abs(dy) < 1e-300, np.copysign(1e-300, dy), dy)
    out = np.full((len(rects), dx.shape[0]), np.inf)
    for k, rc in enumerate(rects):
        tx1 = (rc.x0 - ox) * inv_x
        tx2 = (rc.x1 - ox) * inv_x
        ty1 = (rc.y0 - oy) * inv_y
        ty2 = (rc.y1 - oy) * inv_y
        tmin = np.maximum(np.minimum(tx1, tx2), np.minimum(ty1, ty2))
        tmax = np.minimum(np.maximum(tx1, tx2), np.maximum(ty1, ty2))
        hit = (tmax >= tmin) & (tmin > 1e-9)
        out[k] = np.where(hit, tmin, np.inf)
    return out


def _ray_circles(ox, oy, dx, dy, circles) -> np.ndarray:
    out = np.full((len(circles), dx.shape[0]), np.inf)
    for k, c in enumerate(circles):
        fx, fy = ox - c.cx, oy - c.cy
        b = fx * dx + fy * dy
        disc = b * b - (fx * fx + fy * fy - c.radius**2)
        with np.errstate(invalid="ignore"):
            t = -b - np.sqrt(disc)
        hit = (disc >= 0.0) & (t > 1e-9)
        out[k] = np.where(hit, t, np.inf)
    return out


def raycast_scan(
    world: World, state: RobotState, sensor: SensorModel, rng: np.random.Generator | None = None
) -> np.ndarray:
    """One full scan as an (N, 3) sensor-frame point cloud; misses omitted.

    Per beam the closest obstacle whose height reaches the beam's z at the
    planar hit distance wins. Gaussian range noise (sensor.noise_sigma) is
    applied to the slant range; noisy returns pushed to or past max_range
    are dropped, matching the r < max_range contract.
    """
    cfg = sensor.grid()
    th = cfg.theta_centers
    phi = state.heading + th
    dx, dy = np.cos(phi), np.sin(phi)
    rects = [ob for ob in world.obstacles if isinstance(ob, Rect)]
    circles = [ob for ob in world.obstacles if isinstance(ob, Circle)]
    dists = []
    heights = []
    if rects:
        dists.append(_ray_rects(state.x, state.y, dx, dy, rects))
        heights += [ob.height for ob in rects]
    if circles:
        dists.append(_ray_circles(state.x, state.y, dx, dy, circles))
        heights += [ob.height for ob in circles]
    if not dists:
        return np.empty((0, 3))
    d_xy = np.vstack(dists)  # (n_obs, n_beams)
    h = np.array(heights)[:, None]

    clouds = []
    for a in cfg.alpha_centers:
        ta, ca = math.tan(a), math.cos(a)
        ok = (d_xy * ta <= h + 1e-12) & (d_xy / ca < sensor.max_range)
        d_ring = np.where(ok, d_xy, np.inf).min(axis=0)
        j = np.flatnonzero(np.isfinite(d_ring))
        if j.size == 0:
            continue
        r = d_ring[j] / ca
        if rng is not None and sensor.noise_sigma > 0:
            r = r + rng.normal(0.0, sensor.noise_sigma, size=r.shape)
            keep = (r > 1e-3) & (r < sensor.max_range)
            j, r = j[keep], r[keep]
        clouds.append(
            np.column_stack(
                [r * ca * np.cos(th[j]), r * ca * np.sin(th[j]), r * math.sin(a)]
            )
        )
    if not clouds:
        return np.empty((0, 3))
    return np.vstack(clouds)


def integrate(state: RobotState, cmd: nav.MotionCommand, dt: float) -> RobotState:
    """Exact unicycle arc step (straight line below |w| = 1e-9 rad/s)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    h0 = state.heading
    h1 = h0 + cmd.w * dt
    if abs(cmd.w) < 1e-9:
        x = state.x + cmd.v * dt * math.cos(h0)
        y = state.y + cmd.v * dt * math.sin(h0)
    else:
        radius = cmd.v / cmd.w
        x = state.x + radius * (math.sin(h1) - math.sin(h0))
        y = state.y - radius * (math.cos(h1) - math.cos(h0))
    return RobotState(x=x, y=y, heading=float(surface.wrap_angle(h1)), t=state.t + dt)


@dataclass(frozen=True)
class Scenario:
    """Fully resolved experiment definition."""

    name: str
    world: World
    start: tuple[float, float, float]  # x, y, heading [rad]
    goal: tuple[float, float]
    timeout: float = 120.0
    robot_radius: float = 0.25
    physics_hz: float = 50.0
    sensor: SensorModel = SensorModel()
    surface_n_max: int = 4000
    fit: gp.FitConfig = gp.FitConfig()
    # Scans between hyperparameter re-optimizations; intermediate scans
    # refit the factorization at the warm-started hyperparameters
    # (max_iters=0), which keeps the per-scan median cost at the cheap path.
    hyper_refresh: int = 1
    frontier: frontier_mod.FrontierConfig = frontier_mod.FrontierConfig()
    nav: nav.NavConfig = nav.NavConfig()

    def __post_init__(self):
        if self.timeout <= 0 or self.physics_hz <= 0 or self.robot_radius <= 0:
            raise ValueError("timeout, physics_hz and robot_radius must be > 0")
        if self.hyper_refresh < 1:
            raise ValueError("hyper_refresh must be >= 1")

    def surface_config(self) -> surface.SurfaceConfig:
        base = self.sensor.grid()
        return replace(base, n_max=self.surface_n_max)


class ScenarioError(ValueError):
    """Configuration file or override problem, with location context."""


def _build_obstacle(entry: dict, idx: int):
    kind = entry.get("type")
    try:
        if kind == "rect":
            return Rect(
                x0=float(entry["x0"]), y0=float(entry["y0"]),
                x1=float(entry["x1"]), y1=float(entry["y1"]),
                height=float(entry.get("height", 1.5)),
            )
        if kind == "circle":
            return Circle(
                cx=float(entry["cx"]), cy=float(entry["cy"]),
                radius=float(entry["radius"]),
                height=float(entry.get("height", 1.5)),
            )
    except (KeyError, TypeError, ValueError) as err:
        raise ScenarioError(f"obstacle #{idx}: {err}") from err
    raise ScenarioError(f"obstacle #{idx}: unknown type {kind!r}")


def _section(data: dict, key: str, allowed: set[str]) -> dict:
    sec = data.get(key) or {}
    if not isinstance(sec, dict):
        raise ScenarioError(f"section {key!r} must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ScenarioError(f"section {key!r}: unknown keys {sorted(unknown)}")
    return sec


def apply_overrides(data: dict, overrides: dict[str, object]) -> dict:
    """Apply dotted-path overrides (e.g. ``nav.k_dir``) onto a config tree."""
    for dotted, value in overrides.items():
        node = data
        parts = dotted.split(".")
        for p in parts[:-1]:
            nxt = node.get(p)
            if not isinstance(nxt, dict):
                nxt = {}
                node[p] = nxt
            node = nxt
        node[parts[-1]] = value
    return data


def scenario_path(name: str) -> Path:
    p = Path(name)
    if p.suffix in (".yaml", ".yml") or p.exists():
        return p
    builtin = _SCENARIO_DIR / f"{name}.yaml"
    if builtin.exists():
        return builtin
    raise ScenarioError(
        f"unknown scenario {name!r}; built-ins: {', '.join(BUILTIN_SCENARIOS)}"
    )


def load_scenario(name: str, overrides: dict[str, object] | None = None) -> Scenario:
    """Load a built-in scenario by name or any scenario YAML by path.

    ``overrides`` maps dotted keys to values and wins over the file, which
    wins over built-in defaults. Heading angles in files are degrees.
    """
    path = scenario_path(name)
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError as err:
        raise ScenarioError(str(err)) from err
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        loc = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ScenarioError(f"{path}: invalid YAML{loc}: {err}") from err
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    if overrides:
        data = apply_overrides(data, overrides)

    try:
        wsec = _section(data, "world", {"bounds", "obstacles"})
        obstacles = tuple(
            _build_obstacle(e, i) for i, e in enumerate(wsec.get("obstacles", []))
        )
        world = World(
            bounds=tuple(float(v) for v in wsec.get("bounds", (-10, 10, -10, 10))),
            obstacles=obstacles,
        )
        sx, sy, sh_deg = data["start"]
        gx, gy = data["goal"]
        ssec = _section(
            data, "sensor",
            {"max_range", "rate_hz", "noise_sigma", "res_theta_deg",
             "res_alpha_deg", "alpha_min_deg", "alpha_max_deg"},
        )
        sensor = SensorModel(
            max_range=float(ssec.get("max_range", 5.0)),
            rate_hz=float(ssec.get("rate_hz", 5.0)),
            noise_sigma=float(ssec.get("noise_sigma", 0.0)),
            res_theta=math.radians(float(ssec.get("res_theta_deg", 0.35))),
            res_alpha=math.radians(float(ssec.get("res_alpha_deg", 2.0))),
            alpha_min=math.radians(float(ssec.get("alpha_min_deg", 0.0))),
            alpha_max=math.radians(float(ssec.get("alpha_max_deg", 15.0))),
        )
        fsec = _section(
            data, "fit", {"num_inducing", "max_iters", "rel_tol", "optimize_inducing"}
        )
        fit_cfg = gp.FitConfig(
            num_inducing=int(fsec.get("num_inducing", 400)),
            max_iters=int(fsec.get("max_iters", 30)),
            rel_tol=float(fsec.get("rel_tol", 1e-6)),
            optimize_inducing=bool(fsec.get("optimize_inducing", True)),
        )
        frsec = _section(data, "frontier", {"k_m", "min_region_cells"})
        fr_cfg = frontier_mod.FrontierConfig(
            k_m=float(frsec.get("k_m", 0.4)),
            min_region_cells=int(frsec.get("min_region_cells", 3)),
        )
        nsec = _section(
            data, "nav",
            {"k_dst", "k_dir", "k_a", "k_b", "k_c", "v_max", "w_max", "goal_radius"},
        )
        defaults = nav.NavConfig()
        nav_cfg = nav.NavConfig(
            **{
                f.name: type(getattr(defaults, f.name))(nsec.get(f.name, getattr(defaults, f.name)))
                for f in fields(nav.NavConfig)
            }
        )
        sufsec = _section(data, "surface", {"n_max"})
        return Scenario(
            name=str(data.get("name", path.stem)),
            world=world,
            start=(float(sx), float(sy), math.radians(float(sh_deg))),
            goal=(float(gx), float(gy)),
            timeout=float(data.get("timeout", 120.0)),
            robot_radius=float(data.get("robot_radius", 0.25)),
            physics_hz=float(data.get("physics_hz", 50.0)),
            sensor=sensor,
            surface_n_max=int(sufsec.get("n_max", 4000)),
            fit=fit_cfg,
            hyper_refresh=int(data.get("hyper_refresh", 1)),
            frontier=fr_cfg,
            nav=nav_cfg,
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ScenarioError(f"{path}: {err}") from err


def run_scenario(
    scenario: Scenario | str,
    seed: int = 0,
    overrides: dict[str, object] | None = None,
) -> metrics.TrajectoryLog:
    """Execute one closed-loop run; bitwise-deterministic in (scenario, seed).

    The sensor fires at sensor.rate_hz; commands hold (zero-order) between
    scans while kinematics integrate at physics_hz. The run ends on arrival
    (success), collision (failure), or timeout (failure).
    """
    if isinstance(scenario, str):
        scenario = load_scenario(scenario, overrides)
    sc = scenario
    cfg = sc.surface_config()
    rng = np.random.default_rng(seed)
    dt = 1.0 / sc.physics_hz
    ratio = sc.physics_hz / sc.sensor.rate_hz
    steps_per_scan = int(round(ratio))
    if abs(ratio - steps_per_scan) > 1e-9 or steps_per_scan < 1:
        raise ScenarioError("physics_hz must be an integer multiple of sensor rate")

    state = RobotState(x=sc.start[0], y=sc.start[1], heading=sc.start[2], t=0.0)
    warm = None
    decision = nav.NavDecision(command=nav.MotionCommand(0.0, 0.0), mode="recover")
    rec = {k: [] for k in ("t", "x", "y", "heading", "v", "w", "r_min",
                           "frontier_theta", "frontier_r", "cost")}
    fit_ms, predict_ms, train_sizes = [], [], []
    success = collided = False
    hold_cfg = replace(sc.fit, max_iters=0, optimize_inducing=False)
    scan_idx = 0

    max_ticks = int(round(sc.timeout * sc.physics_hz))
    for tick in range(max_ticks + 1):
        if tick % steps_per_scan == 0:
            cloud = raycast_scan(sc.world, state, sc.sensor, rng)
            surf = surface.build_surface(cloud, cfg)
            refresh = warm is None or scan_idx % sc.hyper_refresh == 0
            scan_idx += 1
            t0 = time.perf_counter()
            model = gp.fit(surf, sc.fit if refresh else hold_cfg, warm_start=warm)
            t1 = time.perf_counter()
            grid = gp.predict_grid(model, cfg)
            t2 = time.perf_counter()
            fit_ms.append(1e3 * (t1 - t0))
            predict_ms.append(1e3 * (t2 - t1))
            train_sizes.append(surf.n)
            warm = (model.kernel, model.noise_var)
            pose = (state.x, state.y, state.heading)
            fronts = frontier_mod.extract_frontiers(grid, sc.frontier, pose)
            decision = nav.navigation_step(grid, fronts, pose, sc.goal, sc.nav)

        r_min = sc.world.min_clearance(state.x, state.y)
        f = decision.frontier
        rec["t"].append(tick * dt)
        rec["x"].append(state.x)
        rec["y"].append(state.y)
        rec["heading"].append(state.heading)
        rec["v"].append(decision.command.v)
        rec["w"].append(decision.command.w)
        rec["r_min"].append(r_min)
        rec["frontier_theta"].append(f.theta_f if f else math.nan)
        rec["frontier_r"].append(f.r_f if f else math.nan)
        rec["cost"].append(decision.cost)

        if decision.arrived:
            success = True
            break
        if r_min < sc.robot_radius:
            collided = True
            break
        state = integrate(state, decision.command, dt)

    return metrics.TrajectoryLog(
        **{k: np.asarray(v) for k, v in rec.items()},
        success=success,
        collided=collided,
        timed_out=not (success or collided),
        scenario=sc.name,
        seed=seed,
        fit_ms=np.asarray(fit_ms),
        predict_ms=np.asarray(predict_ms),
        train_sizes=np.asarray(train_sizes, dtype=int),
    )
