import numpy as np
import pytest

from helmholtz_control.geometry import (
    INNER_CAP,
    ExteriorSphereRegion,
    GeometryError,
    SectorRegion,
    SourceSpec,
    check_configuration,
    cross_section_grid,
    discretize_sector_boundary,
    discretize_sphere_boundary,
    grow_both_radii,
    grow_outer_radius,
    rotate_about_origin,
    shift_radially,
)

PI = np.pi
D1 = SectorRegion((0.011, 0.015), (-PI / 4, PI / 4), ((3 * PI / 4, 5 * PI / 4),))
D2 = SectorRegion((0.011, 0.015), (-PI / 4, PI / 4), ((7 * PI / 4, 2 * PI), (0.0, PI / 4)),
                  (0.09, 0.0, 0.0))


def _sph(r, t, p):
    return np.stack([r * np.cos(t) * np.cos(p), r * np.cos(t) * np.sin(p), r * np.sin(t)], -1)


def monte_carlo_area(region, n=200_000, seed=1):
    """Boundary area from random parameter samples and a finite-difference Jacobian."""
    rng = np.random.default_rng(seed)
    (r0, r1), (t0, t1) = region.r_range, region.theta_range
    h = 1e-7
    total = 0.0

    def patch(fn, box):
        (a0, a1), (b0, b1) = box
        u = rng.uniform(a0, a1, n)
        v = rng.uniform(b0, b1, n)
        du = (fn(u + h, v) - fn(u - h, v)) / (2 * h)
        dv = (fn(u, v + h) - fn(u, v - h)) / (2 * h)
        jac = np.linalg.norm(np.cross(du, dv), axis=-1)
        return jac.mean() * (a1 - a0) * (b1 - b0)

    for a, b in region.intervals:
        for r in (r0, r1):
            total += patch(lambda t, p, r=r: _sph(r, t, p), ((t0, t1), (a, b)))
        for t in (t0, t1):
            if abs(abs(t) - PI / 2) > 1e-12:
                total += patch(lambda r, p, t=t: _sph(r, t, p), ((r0, r1), (a, b)))
        if b - a < 2 * PI - 1e-12:
            for p in (a, b):
                total += patch(lambda r, t, p=p: _sph(r, t, p), ((r0, r1), (t0, t1)))
    return total


def test_d1_area_matches_monte_carlo():
    cloud = discretize_sector_boundary(D1, 2400)
    assert cloud.area == pytest.approx(monte_carlo_area(D1), rel=1e-2)


def test_wrapped_sector_area_matches_monte_carlo():
    cloud = discretize_sector_boundary(D2, 2400)
    assert cloud.area == pytest.approx(monte_carlo_area(D2), rel=1e-2)


def test_full_sphere_inner_face_area():
    full = SectorRegion((0.5, 0.7), (-PI / 2, PI / 2), ((0.0, 2 * PI),))
    cloud = discretize_sector_boundary(full, 1000)
    inner = cloud.weights[cloud.face_ids == INNER_CAP].sum()
    assert inner == pytest.approx(4 * PI * 0.5**2, rel=1e-6)
    assert cloud.area == pytest.approx(4 * PI * (0.5**2 + 0.7**2), rel=1e-6)


def test_sector_points_on_boundary():
    cloud = discretize_sector_boundary(D1, 2400)
    assert len(cloud) == 2400
    r = np.linalg.norm(cloud.points, axis=1)
    assert np.all(r >= 0.011 - 1e-15) and np.all(r <= 0.015 + 1e-15)
    assert np.all(D1.contains(cloud.points))
    # distance to the analytic boundary surface
    elev = np.arcsin(cloud.points[:, 2] / r)
    phi = np.mod(np.arctan2(cloud.points[:, 1], cloud.points[:, 0]), 2 * PI)
    d = np.min(np.stack([
        np.abs(r - 0.011), np.abs(r - 0.015),
        r * np.abs(np.sin(elev - PI / 4)), r * np.abs(np.sin(elev + PI / 4)),
        r * np.cos(elev) * np.abs(np.sin(phi - 3 * PI / 4)),
        r * np.cos(elev) * np.abs(np.sin(phi - 5 * PI / 4)),
    ]), axis=0)
    assert np.max(d) < 1e-12


def test_sector_normals_and_weights():
    cloud = discretize_sector_boundary(D2, 2400)
    np.testing.assert_allclose(np.linalg.norm(cloud.normals, axis=1), 1.0, atol=1e-12)
    assert np.all(cloud.weights > 0)
    # divergence theorem: the outward normal field integrates to zero on a closed surface
    assert np.linalg.norm(cloud.weights @ cloud.normals) < 1e-2 * cloud.area
    # flux of x through the boundary equals the enclosed volume (positive if outward)
    local = cloud.points - np.asarray(D2.translation)
    flux = np.sum(cloud.weights * np.einsum("ij,ij->i", local, cloud.normals)) / 3
    vol = (0.015**3 - 0.011**3) / 3 * (2 * np.sin(PI / 4)) * (PI / 2)
    assert flux == pytest.approx(vol, rel=2e-2)


def test_face_counts_proportional_to_area():
    cloud = discretize_sector_boundary(D1, 2400)
    for label in np.unique(cloud.face_ids):
        sel = cloud.face_ids == label
        frac_pts = sel.sum() / len(cloud)
        frac_area = cloud.weights[sel].sum() / cloud.area
        assert frac_pts == pytest.approx(frac_area, abs=1.0 / len(cloud))


def test_sector_rejects_degenerate():
    with pytest.raises(GeometryError):
        SectorRegion((0.02, 0.01))
    with pytest.raises(GeometryError):
        discretize_sector_boundary(D1, 50)


def test_sphere_grid():
    cloud = discretize_sphere_boundary(10.0, 200, 100)
    assert len(cloud) == 20_000
    np.testing.assert_allclose(np.linalg.norm(cloud.points, axis=1), 10.0, rtol=1e-15)
    assert cloud.area == pytest.approx(4 * PI * 100, rel=1e-4)
    coarse = discretize_sphere_boundary(1.0, 8, 4)
    assert coarse.area == pytest.approx(4 * PI, rel=1e-2)
    assert np.all(coarse.weights > 0)
    # reflection symmetry theta -> -theta
    pts = cloud.points
    mirrored = pts * np.array([1, 1, -1])
    key = lambda a: np.lexsort(np.round(a, 9).T)
    np.testing.assert_allclose(pts[key(pts)], mirrored[key(mirrored)], atol=1e-12)


def test_rotation():
    assert rotate_about_origin(D2, 0.0) == D2
    half = rotate_about_origin(D2, PI)
    np.testing.assert_allclose(half.translation, (-0.09, 0, 0), atol=1e-15)
    twice = rotate_about_origin(rotate_about_origin(D2, PI / 2), PI / 2)
    np.testing.assert_allclose(twice.translation, half.translation, atol=1e-15)
    assert half.r_range == D2.r_range and half.phi_ranges == D2.phi_ranges


def test_radial_edits():
    assert grow_outer_radius(D1, 0.015).r_range == pytest.approx((0.011, 0.030))
    assert grow_both_radii(D1, 0.0) == D1
    assert grow_both_radii(D1, 0.01).r_range == pytest.approx((0.021, 0.025))
    back = shift_radially(shift_radially(D1, 0.01), -0.01)
    np.testing.assert_allclose(back.translation, D1.translation, atol=1e-15)
    moved = shift_radially(D1, 0.05)
    assert moved.r_range == D1.r_range
    np.testing.assert_allclose(moved.translation, (-0.05, 0, 0), atol=1e-15)
    with pytest.raises(GeometryError):
        grow_outer_radius(D1, -0.01)


def test_configuration_checks():
    src = SourceSpec()
    check_configuration(src, [D1, ExteriorSphereRegion(10.0)])
    check_configuration(src, [D1, D2])
    for angle in np.linspace(0, PI, 17):
        check_configuration(src, [D1, rotate_about_origin(D2, angle)])
    with pytest.raises(GeometryError):
        check_configuration(src, [SectorRegion((0.009, 0.015), (-PI / 4, PI / 4),
                                               ((3 * PI / 4, 5 * PI / 4),))])
    with pytest.raises(GeometryError):
        check_configuration(src, [D1, grow_both_radii(D1, 0.002)])
    with pytest.raises(GeometryError):
        check_configuration(src, [D1, ExteriorSphereRegion(0.012)])
    with pytest.raises(GeometryError):
        SourceSpec(a_prime=0.02, a_phys=0.01)


def test_cross_section_grid():
    pts = cross_section_grid(D1, 100)
    assert len(pts) > 1000
    assert np.all(D1.contains(pts))
    np.testing.assert_allclose(pts[:, 2], 0.0)
