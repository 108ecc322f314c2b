"""Sub-goal selection and motion commands.

Each scan yields candidate frontiers; the one minimizing

    C = k_dst * (r_f + |goal - frontier|) + k_dir * theta_f^2

becomes the motion target, unless the final goal itself is inside the
sensed free space, in which case the robot heads straight for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frontier import GpFrontier, frontier_range
from .gp import PredictionGrid
from .surface import wrap_angle


@dataclass(frozen=True)
class NavConfig:
    """Cost weights, proportional-controller gains and actuation limits.

    k_dst, k_dir: frontier cost weights (distance [1/m-ish] and heading)
    k_a [1/s]:    forward gain on target distance
    k_b [m/rad/s]: forward penalty on heading error
    k_c [1/s]:    turn gain on heading error
    v_max, w_max: hard actuation clamps
    goal_radius [m]: arrival threshold
    """

    k_dst: float = 5.0
    k_dir: float = 4.0
    k_a: float = 0.3
    k_b: float = 0.6
    k_c: float = 1.2
    v_max: float = 1.0
    w_max: float = 1.5
    goal_radius: float = 0.5

    def __post_init__(self):
        for name in ("k_dst", "k_a", "k_b", "k_c", "v_max", "w_max", "goal_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.k_dir < 0:
            raise ValueError("k_dir must be >= 0")


@dataclass(frozen=True)
class MotionCommand:
    v: float  # m/s, >= 0
    w: float  # rad/s


def frontier_cost(f: GpFrontier, goal, cfg: NavConfig) -> float:
    """Eq.-style cost: weighted travel distance plus squared heading error."""
    goal = np.asarray(goal, dtype=float)
    d_sum = f.r_f + float(np.hypot(*(goal - f.world_xy)))
    return cfg.k_dst * d_sum + cfg.k_dir * f.theta_f**2


def select_frontier(frontiers: list[GpFrontier], goal, cfg: NavConfig) -> GpFrontier:
    """Minimal-cost frontier; ties go to smaller |theta_f|, then list order.

    Raises ValueError on an empty list (callers fall back to recovery).
    """
    if not frontiers:
        raise ValueError("no frontiers to select from")
    best = min(
        enumerate(frontiers),
        key=lambda pair: (frontier_cost(pair[1], goal, cfg), abs(pair[1].theta_f), pair[0]),
    )
    return best[1]


def motion_command(target_theta: float, target_r: float, cfg: NavConfig) -> MotionCommand:
    """Forward-drive arc toward a (bearing, range) target.

    v = clamp(k_a*r - k_b*|theta|, 0, v_max), w = clamp(k_c*theta): speed
    grows with clearance, shrinks with heading error, never reverses.
    """
    th = float(wrap_angle(target_theta))
    v = min(max(cfg.k_a * target_r - cfg.k_b * abs(th), 0.0), cfg.v_max)
    w = min(max(cfg.k_c * th, -cfg.w_max), cfg.w_max)
    return MotionCommand(v=v, w=w)


@dataclass(frozen=True)
class NavDecision:
    """One control decision with the context the logs record.

    mode:     'arrived' | 'goal' | 'frontier' | 'recover'
    frontier: the selected sub-goal in frontier mode, else None
    cost:     its cost, NaN otherwise
    """

    command: MotionCommand
    mode: str
    frontier: GpFrontier | None = None
    cost: float = math.nan

    @property
    def arrived(self) -> bool:
        return self.mode == "arrived"


def navigation_step(
    grid: PredictionGrid,
    frontiers: list[GpFrontier],
    pose,
    goal,
    cfg: NavConfig,
) -> NavDecision:
    """Pick this scan's motion command from local information only.

    Priority: arrival > direct goal pursuit (goal within r_oc and the
    predicted free radius along its bearing exceeds its distance) > best
    frontier > rotate-in-place recovery at w_max/2.
    """
    x, y, heading = float(pose[0]), float(pose[1]), float(pose[2])
    goal = np.asarray(goal, dtype=float)
    dx, dy = goal[0] - x, goal[1] - y
    d_goal = math.hypot(dx, dy)
    if d_goal <= cfg.goal_radius:
        return NavDecision(command=MotionCommand(0.0, 0.0), mode="arrived")
    bearing = float(wrap_angle(math.atan2(dy, dx) - heading))
    if d_goal <= grid.r_oc and frontier_range(grid, bearing, 0.0) > d_goal:
        return NavDecision(command=motion_command(bearing, d_goal, cfg), mode="goal")
    if frontiers:
        f = select_frontier(frontiers, goal, cfg)
        return NavDecision(
            command=motion_command(f.theta_f, f.r_f, cfg),
            mode="frontier",
            frontier=f,
            cost=frontier_cost(f, goal, cfg),
        )
    return NavDecision(command=MotionCommand(0.0, cfg.w_max / 2.0), mode="recover")
