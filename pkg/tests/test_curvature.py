import numpy as np
import pytest

from afgeo.grid import RadialGrid
from afgeo import curvature, metrics, oracle


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.uniform(0.5, 50.0, 1024)


def test_flat_curvature_zero(grid):
    flat = metrics.build_flat(3, grid)
    assert np.max(np.abs(curvature.scalar_curvature(flat))) < 1e-12
    assert np.max(np.abs(curvature.ricci_norm_sq(flat))) < 1e-12
    assert curvature.sectional_bound(flat) < 1e-12


def test_schwarzschild_scalar_flat(grid):
    sch = metrics.build_schwarzschild_isotropic(1.0, grid)
    R = curvature.scalar_curvature(sch)
    sel = grid.r > 2.0  # away from the steep inner boundary layer
    assert np.max(np.abs(R[sel])) < 1e-6  # R identically 0 for this slice
    # but the metric is curved
    assert curvature.sectional_bound(sch) > 0.01


@pytest.mark.parametrize("n", [3, 4, 5])
def test_mean_curvature_flat_exact(n):
    g = RadialGrid.uniform(0.5, 50.0, 256)
    flat = metrics.build_flat(n, g)
    r0 = g.r[g.node_at(10.190982404692082) or 50]
    H = curvature.mean_curvature_sphere(flat, r0)
    assert H == pytest.approx((n - 1) / r0, rel=1e-12)


def test_scalar_curvature_matches_oracle(grid):
    m = metrics.build_conformal(0.4, 3, grid)
    R = curvature.scalar_curvature(m)
    for r in (2.0, 5.0):
        i = grid.node_at(r)
        ref = oracle.scalar_curvature_oracle(m, r)
        assert abs(R[i] - ref) / (1 + abs(ref)) < 1e-5


def test_ricci_norm_matches_oracle(grid):
    m = metrics.build_angular_bump(0.3, 3, grid)
    F = curvature.ricci_norm_sq(m)
    i = grid.node_at(2.0)
    ref = oracle.ricci_norm_sq_oracle(m, 2.0)
    assert abs(F[i] - ref) / (1 + abs(ref)) < 1e-5


def test_mean_curvature_matches_oracle(grid):
    m = metrics.build_conformal(0.4, 3, grid)
    H = curvature.mean_curvature_sphere(m, 5.0)
    ref = oracle.mean_curvature_oracle(m, 5.0)
    assert abs(H - ref) / (1 + abs(ref)) < 1e-6


def test_one_sided_deriv_detects_kink():
    g = RadialGrid.uniform(0.5, 10.0, 512)
    i0 = int(np.argmin(np.abs(g.r - 3.0)))
    r0 = g.r[i0]
    f = np.where(g.r <= r0, g.r, r0 + 2.0 * (g.r - r0))  # slope 1 -> 2
    dm = curvature.one_sided_deriv(g, f, i0, "-")
    dp = curvature.one_sided_deriv(g, f, i0, "+")
    assert dm == pytest.approx(1.0, abs=1e-9)
    assert dp == pytest.approx(2.0, abs=1e-9)


def test_origin_fill_regular():
    g = RadialGrid.uniform(0.0, 20.0, 512)
    m = metrics.build_conformal(0.5, 3, g)
    R = curvature.scalar_curvature(m)
    assert np.isfinite(R[0])
    # smooth metric: R continuous at the center
    assert abs(R[0] - R[1]) < 0.05 * (1 + abs(R[1]))
