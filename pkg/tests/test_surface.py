import math

import numpy as np
import numpy.testing as npt
import pytest

from gpfrontier.surface import (
    OccupancySurface,
    SphericalPoint,
    SurfaceConfig,
    build_surface,
    cartesian_to_spherical,
    load_cloud,
    spherical_to_cartesian,
    wrap_angle,
)


def test_wrap_angle_range():
    th = np.linspace(-20, 20, 2001)
    w = wrap_angle(th)
    assert np.all(w >= -math.pi) and np.all(w < math.pi)
    npt.assert_allclose(np.cos(w), np.cos(th), atol=1e-12)
    npt.assert_allclose(np.sin(w), np.sin(th), atol=1e-12)


def test_spherical_round_trip_random():
    rng = np.random.default_rng(3)
    pts = rng.normal(scale=3.0, size=(10_000, 3))
    for p in pts[:200]:
        s = cartesian_to_spherical(p)
        back = spherical_to_cartesian(s)
        npt.assert_allclose(back, p, rtol=1e-9, atol=1e-12)
    # vectorized check over the full set via the scalar api on a sample
    sample = pts[::97]
    for p in sample:
        s = cartesian_to_spherical(p)
        assert -math.pi <= s.theta < math.pi
        assert -math.pi / 2 <= s.alpha <= math.pi / 2
        assert s.r > 0


def test_spherical_axis_points():
    s = cartesian_to_spherical([2.0, 0.0, 0.0])
    assert s.theta == pytest.approx(0.0) and s.alpha == pytest.approx(0.0)
    assert s.r == pytest.approx(2.0)
    s = cartesian_to_spherical([0.0, 1.0, 1.0])
    assert s.theta == pytest.approx(math.pi / 2)
    assert s.alpha == pytest.approx(math.pi / 4)


def test_zero_norm_rejected():
    with pytest.raises(ValueError):
        cartesian_to_spherical([0.0, 0.0, 0.0])


def test_build_surface_single_return():
    # one return at 3 m dead ahead: oc = 5 - 3 = 2
    surf = build_surface(np.array([[3.0, 0.0, 0.0]]))
    assert surf.n == 1
    npt.assert_allclose(surf.targets, [2.0])
    npt.assert_allclose(surf.inputs[0], [0.0, 0.0], atol=1e-12)
    npt.assert_allclose(surf.radii(), [3.0])


def test_build_surface_beyond_radius_dropped():
    surf = build_surface(np.array([[6.0, 0.0, 0.0]]))
    assert surf.n == 0


def test_build_surface_cell_keeps_minimum_range():
    # two returns in the same angular cell: the closer one wins, oc = 5 - 2 = 3
    cloud = np.array([[2.0, 0.0, 0.0], [4.0, 1e-4, 0.0]])
    surf = build_surface(cloud)
    assert surf.n == 1
    npt.assert_allclose(surf.targets, [3.0])


def test_build_surface_permutation_invariant():
    rng = np.random.default_rng(7)
    r = rng.uniform(0.5, 4.9, size=500)
    th = rng.uniform(-math.pi, math.pi, size=500)
    al = rng.uniform(0.0, math.radians(15), size=500)
    cloud = np.column_stack(
        [r * np.cos(al) * np.cos(th), r * np.cos(al) * np.sin(th), r * np.sin(al)]
    )
    a = build_surface(cloud)
    b = build_surface(cloud[rng.permutation(500)])
    npt.assert_array_equal(a.inputs, b.inputs)
    npt.assert_array_equal(a.targets, b.targets)


def test_build_surface_targets_in_range():
    rng = np.random.default_rng(11)
    cloud = rng.uniform(-6, 6, size=(2000, 3))
    surf = build_surface(cloud)
    assert np.all(surf.targets > 0.0)
    assert np.all(surf.targets <= surf.config.r_oc)
    assert np.all(surf.inputs[:, 0] >= -math.pi) and np.all(surf.inputs[:, 0] < math.pi)


def test_build_surface_elevation_band_filter():
    # below and above the band -> dropped; inside -> kept
    cfg = SurfaceConfig()
    inside = spherical_to_cartesian(SphericalPoint(0.3, math.radians(7), 2.0))
    below = spherical_to_cartesian(SphericalPoint(0.3, math.radians(-5), 2.0))
    above = spherical_to_cartesian(SphericalPoint(0.3, math.radians(20), 2.0))
    surf = build_surface(np.vstack([inside, below, above]), cfg)
    assert surf.n == 1


def test_build_surface_cap_coarsens():
    cfg = SurfaceConfig(n_max=100)
    rng = np.random.default_rng(5)
    th = rng.uniform(-math.pi, math.pi, size=5000)
    al = rng.uniform(0.001, math.radians(14.9), size=5000)
    r = rng.uniform(1.0, 4.0, size=5000)
    cloud = np.column_stack(
        [r * np.cos(al) * np.cos(th), r * np.cos(al) * np.sin(th), r * np.sin(al)]
    )
    surf = build_surface(cloud, cfg)
    assert 0 < surf.n <= 100
    # capped surface still reports true measured angles, not cell centers
    assert np.all(surf.targets > 0)


def test_build_surface_empty():
    surf = build_surface(np.empty((0, 3)))
    assert surf.n == 0
    assert surf.inputs.shape == (0, 2)


def test_grid_dimensions_default():
    cfg = SurfaceConfig()
    assert cfg.n_theta == 1029  # round(360 / 0.35)
    assert cfg.n_alpha == 8  # round(15 / 2)
    assert cfg.theta_centers.shape == (1029,)
    step = cfg.theta_centers[1] - cfg.theta_centers[0]
    npt.assert_allclose(np.diff(cfg.theta_centers), step)
    assert cfg.alpha_centers[0] > 0 and cfg.alpha_centers[-1] < math.radians(15)


def test_config_validation():
    with pytest.raises(ValueError):
        SurfaceConfig(r_oc=-1)
    with pytest.raises(ValueError):
        SurfaceConfig(alpha_min=0.3, alpha_max=0.1)
    with pytest.raises(ValueError):
        SurfaceConfig(n_max=0)


def test_load_cloud(tmp_path):
    p = tmp_path / "cloud.txt"
    p.write_text("# a comment\n1.0 2.0 0.5\n\n-1.0 0.0 0.25\n")
    cloud = load_cloud(p)
    assert cloud.shape == (2, 3)
    npt.assert_allclose(cloud[0], [1.0, 2.0, 0.5])
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0 2.0\n")
    with pytest.raises(ValueError):
        load_cloud(bad)
