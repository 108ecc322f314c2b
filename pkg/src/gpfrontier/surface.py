"""Occupancy surface construction from a single range scan.

A scan is reduced to a regression dataset on the sensor sphere: inputs are
(azimuth, elevation) angles of returns, targets are occupancy values

    oc = r_oc - r

where r is the measured range and r_oc the radius of the modelled sphere.
Nearby obstacles produce large oc, returns at the sphere radius produce 0,
and directions without returns contribute no data at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Wrap angle(s) to [-pi, pi). Works on scalars and arrays."""
    return (np.asarray(theta) + math.pi) % TWO_PI - math.pi


def _subdivisions(span: float, res: float) -> int:
    # Nearest integer cell count; exact halves round up so a 15 deg band at
    # 2 deg resolution gives 8 rings despite 15/2 landing just under 7.5
    # in floats.
    return max(1, int(math.floor(span / res + 0.5 + 1e-9)))


@dataclass(frozen=True)
class SphericalPoint:
    """A range return in sensor-spherical coordinates.

    theta: azimuth [rad] in [-pi, pi), measured in the sensor x-y plane
    alpha: elevation [rad] above the sensor x-y plane
    r:     range [m], > 0
    """

    theta: float
    alpha: float
    r: float


def cartesian_to_spherical(p) -> SphericalPoint:
    """Convert one sensor-frame cartesian point [m] to spherical coordinates.

    Raises ValueError for a zero-norm point: it has no direction.
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise ValueError("zero-norm point has no direction")
    return SphericalPoint(
        theta=float(wrap_angle(math.atan2(y, x))),
        alpha=math.asin(max(-1.0, min(1.0, z / r))),
        r=r,
    )


def spherical_to_cartesian(s: SphericalPoint) -> np.ndarray:
    """Inverse of :func:`cartesian_to_spherical`; returns an (3,) array [m]."""
    ca = math.cos(s.alpha)
    return np.array(
        [s.r * ca * math.cos(s.theta), s.r * ca * math.sin(s.theta), s.r * math.sin(s.alpha)]
    )


@dataclass(frozen=True)
class SurfaceConfig:
    """Geometry of the occupancy surface and of the training grid.

    r_oc:      radius [m] of the occupancy sphere; also the range cutoff
    alpha_min: lower edge [rad] of the modelled elevation band
    alpha_max: upper edge [rad]
    res_theta: nominal azimuth bin width [rad]
    res_alpha: nominal elevation bin width [rad]
    n_max:     training-set size cap; exceeded scans are re-binned on a
               coarser azimuth grid until they fit

    Azimuth always spans the full circle [-pi, pi); the bin counts are the
    nearest integer subdivisions, so the effective resolutions can differ
    slightly from the requested ones.
    """

    r_oc: float = 5.0
    alpha_min: float = 0.0
    alpha_max: float = math.radians(15.0)
    res_theta: float = math.radians(0.35)
    res_alpha: float = math.radians(2.0)
    n_max: int = 4000

    def __post_init__(self):
        if self.r_oc <= 0:
            raise ValueError("r_oc must be positive")
        if not (self.alpha_max > self.alpha_min):
            raise ValueError("empty elevation band")
        if self.res_theta <= 0 or self.res_alpha <= 0:
            raise ValueError("resolutions must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def n_theta(self) -> int:
        return _subdivisions(TWO_PI, self.res_theta)

    @property
    def n_alpha(self) -> int:
        return _subdivisions(self.alpha_max - self.alpha_min, self.res_alpha)

    @property
    def theta_centers(self) -> np.ndarray:
        """Azimuth cell centers [rad], ascending in [-pi, pi)."""
        step = TWO_PI / self.n_theta
        return -math.pi + (np.arange(self.n_theta) + 0.5) * step

    @property
    def alpha_centers(self) -> np.ndarray:
        """Elevation cell centers [rad], ascending."""
        step = (self.alpha_max - self.alpha_min) / self.n_alpha
        return self.alpha_min + (np.arange(self.n_alpha) + 0.5) * step


@dataclass(frozen=True)
class OccupancySurface:
    """Training data for one scan.

    inputs:  (n, 2) array of (theta, alpha) [rad], theta in [-pi, pi)
    targets: (n,) occupancy values, each in (0, r_oc]
    config:  the geometry used to build the surface
    """

    inputs: np.ndarray
    targets: np.ndarray
    config: SurfaceConfig

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    def radii(self) -> np.ndarray:
        """Recover measured ranges [m]: r = r_oc - oc."""
        return self.config.r_oc - self.targets


def _spherical_arrays(cloud: np.ndarray):
    x, y, z = cloud[:, 0], cloud[:, 1], cloud[:, 2]
    r = np.sqrt(x * x + y * y + z * z)
    theta = wrap_angle(np.arctan2(y, x))
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha = np.arcsin(np.clip(np.divide(z, r, where=r > 0), -1.0, 1.0))
    return theta, alpha, r


def build_surface(cloud, config: SurfaceConfig = SurfaceConfig()) -> OccupancySurface:
    """Reduce a point cloud to a deduplicated occupancy-surface dataset.

    cloud: (N, 3) sensor-frame cartesian points [m] (empty allowed)

    Returns outside [0, r_oc) or the elevation band are dropped, as are
    zero-norm and non-finite points. Within each (theta, alpha) grid cell
    only the closest return is kept; that point keeps its measured angles,
    only the occupancy of the minimum range survives. The result is sorted
    by (azimuth cell, elevation cell), so it is independent of input order.
    """
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if cloud.shape[0] == 0:
        return OccupancySurface(
            inputs=np.empty((0, 2)), targets=np.empty((0,)), config=config
        )
    theta, alpha, r = _spherical_arrays(cloud)
    keep = np.isfinite(r) & (r > 0.0) & (r < config.r_oc)
    keep &= (alpha >= config.alpha_min) & (alpha <= config.alpha_max)
    theta, alpha, r = theta[keep], alpha[keep], r[keep]
    if theta.size == 0:
        return OccupancySurface(
            inputs=np.empty((0, 2)), targets=np.empty((0,)), config=config
        )

    alpha_span = config.alpha_max - config.alpha_min
    ia = np.minimum(
        (np.floor((alpha - config.alpha_min) / alpha_span * config.n_alpha)).astype(int),
        config.n_alpha - 1,
    )
    it_fine = (np.floor((theta + math.pi) / TWO_PI * config.n_theta)).astype(int)
    it_fine = np.clip(it_fine, 0, config.n_theta - 1)

    # Tie-break equal ranges in a cell by (theta, alpha) so the reduction is
    # a pure function of the point set.
    order = np.lexsort((alpha, theta, r))

    coarsen = 1
    while True:
        it = it_fine // coarsen
        cell = it * config.n_alpha + ia
        _, first = np.unique(cell[order], return_index=True)
        sel = order[first]
        if sel.size <= config.n_max:
            break
        coarsen += 1

    sel = sel[np.argsort(cell[sel], kind="stable")]
    inputs = np.column_stack((theta[sel], alpha[sel]))
    targets = config.r_oc - r[sel]
    return OccupancySurface(inputs=inputs, targets=targets, config=config)


def load_cloud(path) -> np.ndarray:
    """Read a whitespace-separated ``x y z`` text file into an (N, 3) array.

    Lines starting with '#' and blank lines are ignored.
    """
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.size == 0:
        return np.empty((0, 3))
    if data.shape[1] != 3:
        raise ValueError(f"expected 3 columns, found {data.shape[1]}")
    return data
