"""Frontier extraction from the predictive variance surface.

Directions the scan could not constrain keep high posterior variance. Cells
whose variance exceeds a threshold relative to the grid mean are grouped
into connected regions; each region of useful size becomes a candidate
sub-goal (a "frontier") described by its angular centroid and the model's
estimated free radius in that direction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .gp import PredictionGrid
from .surface import wrap_angle

# Azimuth of a region that spans the full circle is numerically degenerate
# (the circular mean has no preferred direction); callers get whatever the
# vanishing mean resultant rounds to, deterministically for a given grid.


@dataclass(frozen=True)
class FrontierConfig:
    """k_m: variance threshold as a multiple of the grid-mean variance;
    min_region_cells: regions smaller than this are treated as noise."""

    k_m: float = 0.4
    min_region_cells: int = 3

    def __post_init__(self):
        if self.k_m <= 0:
            raise ValueError("k_m must be > 0")
        if self.min_region_cells < 1:
            raise ValueError("min_region_cells must be >= 1")


@dataclass(frozen=True)
class GpFrontier:
    """One candidate sub-goal.

    theta_f:     azimuth centroid [rad] in the robot frame, [-pi, pi)
    alpha_f:     elevation centroid [rad]
    r_f:         estimated free radius [m] toward the centroid, in (0, r_oc]
    world_xy:    (2,) planar world position of the point (theta_f, 0, r_f)
    region_size: number of grid cells in the region
    """

    theta_f: float
    alpha_f: float
    r_f: float
    world_xy: np.ndarray
    region_size: int


def connected_regions(mask: np.ndarray, wrap: bool = True) -> list[np.ndarray]:
    """8-connected regions of a boolean (rows, cols) grid.

    With ``wrap=True`` the last column is adjacent to the first (circular
    azimuth axis). Returns one flat-index array per region.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, num = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if num == 0:
        return []
    parent = list(range(num + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    rows, cols = mask.shape
    if wrap and cols > 1:
        left = labels[:, 0]
        right = labels[:, -1]
        for i in range(rows):
            if right[i] == 0:
                continue
            for di in (-1, 0, 1):
                j = i + di
                if 0 <= j < rows and left[j] != 0:
                    union(right[i], left[j])
    merged = np.array([0] + [find(a) for a in range(1, num + 1)])
    labels = merged[labels]
    out = []
    for lab in np.unique(labels):
        if lab == 0:
            continue
        out.append(np.flatnonzero(labels.ravel() == lab))
    return out


def frontier_range(grid: PredictionGrid, theta: float, alpha: float = 0.0) -> float:
    """Free radius [m] toward (theta, alpha): r_oc minus the interpolated
    occupancy mean, clamped into (0, r_oc]."""
    r = grid.r_oc - grid.interpolate_mu(theta, alpha)
    return float(min(max(r, 1e-6), grid.r_oc))


def extract_frontiers(
    grid: PredictionGrid, cfg: FrontierConfig, pose
) -> list[GpFrontier]:
    """Candidate sub-goals from one prediction grid.

    pose: (x, y, heading) of the robot in the world frame.

    The threshold is relative, V_th = k_m * mean(var), so uniformly scaling
    the variance surface leaves the result unchanged. Regions are
    8-connected with the azimuth axis circular. Returned frontiers are
    sorted by theta_f.
    """
    x0, y0, heading = float(pose[0]), float(pose[1]), float(pose[2])
    v_th = cfg.k_m * float(grid.var.mean())
    mask = grid.var > v_th
    n_theta = grid.theta.shape[0]
    frontiers = []
    for cells in connected_regions(mask, wrap=True):
        if cells.size < cfg.min_region_cells:
            continue
        rows, cols = np.unravel_index(cells, mask.shape)
        th_cells = grid.theta[cols]
        theta_f = float(math.atan2(np.mean(np.sin(th_cells)), np.mean(np.cos(th_cells))))
        theta_f = float(wrap_angle(theta_f))
        alpha_f = float(np.mean(grid.alpha[rows]))
        r_f = frontier_range(grid, theta_f, alpha_f)
        cw, sw = math.cos(heading), math.sin(heading)
        xr, yr = r_f * math.cos(theta_f), r_f * math.sin(theta_f)
        world = np.array([x0 + cw * xr - sw * yr, y0 + sw * xr + cw * yr])
        frontiers.append(
            GpFrontier(
                theta_f=theta_f,
                alpha_f=alpha_f,
                r_f=r_f,
                world_xy=world,
                region_size=int(cells.size),
            )
        )
    frontiers.sort(key=lambda f: f.theta_f)
    return frontiers


def write_debug_csv(grid: PredictionGrid, frontiers: list[GpFrontier], path) -> None:
    """Dump the variance surface and the frontier list for offline plots."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "theta", "alpha", "mu", "var", "r_f", "region_size"])
        for i, a in enumerate(grid.alpha):
            for j, t in enumerate(grid.theta):
                w.writerow(
                    ["cell", f"{t:.6f}", f"{a:.6f}", f"{grid.mu[i, j]:.6f}",
                     f"{grid.var[i, j]:.6f}", "", ""]
                )
        for f in frontiers:
            w.writerow(
                ["frontier", f"{f.theta_f:.6f}", f"{f.alpha_f:.6f}", "", "",
                 f"{f.r_f:.6f}", f.region_size]
            )
