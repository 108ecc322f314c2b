"""Mapless local navigation from single LiDAR scans.

Pipeline: project a scan onto an occupancy surface (surface), regress it
with a sparse variational GP (gp), extract high-variance frontier regions
as sub-goal candidates (frontier), pick one and command motion (nav).
A deterministic simulator (sim), metrics (metrics) and a CLI (cli) close
the loop for benchmarking.
"""

from .frontier import FrontierConfig, GpFrontier, extract_frontiers, frontier_range
from .gp import (
    FitConfig,
    KernelParams,
    ModelFitError,
    PredictionGrid,
    VsgpModel,
    elbo,
    fit,
    full_gp_predict,
    predict_grid,
    rq_kernel,
    rq_kernel_matrix,
)
from .metrics import MetricsReport, TrajectoryLog, compute_metrics
from .nav import MotionCommand, NavConfig, frontier_cost, motion_command, navigation_step, select_frontier
from .sim import Circle, Rect, RobotState, Scenario, SensorModel, World, integrate, load_scenario, raycast_scan, run_scenario
from .surface import OccupancySurface, SphericalPoint, SurfaceConfig, build_surface, cartesian_to_spherical, spherical_to_cartesian

__version__ = "0.1.0"
