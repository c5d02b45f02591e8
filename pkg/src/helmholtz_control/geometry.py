"""Source sphere, control regions and their boundary discretisations.

Bounded control regions are spherical sectors (a shell cut by an elevation
band and one or more azimuth intervals) rigidly translated; the unbounded
one is the exterior of a ball centred at the origin.  Boundary clouds carry
quadrature weights so that ``sum(w * |f|**2)`` approximates the surface
L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .specfun import cartesian_to_direction, direction_to_cartesian

__all__ = [
    "GeometryError",
    "SourceSpec",
    "SectorRegion",
    "ExteriorSphereRegion",
    "PointCloud",
    "discretize_sector_boundary",
    "discretize_sphere_boundary",
    "discretize_region",
    "cross_section_grid",
    "rotate_about_origin",
    "sector_axis",
    "shift_radially",
    "grow_outer_radius",
    "grow_both_radii",
    "check_configuration",
]

TWO_PI = 2 * np.pi
_ANGLE_EPS = 1e-12

# face labels stored in PointCloud.face_ids
OUTER_CAP, INNER_CAP, UPPER_CONE, LOWER_CONE, START_WALL, END_WALL = range(6)


class GeometryError(ValueError):
    """Invalid region parameters or an overlapping configuration."""


def _vec3(v) -> tuple[float, float, float]:
    v = tuple(float(c) for c in v)
    if len(v) != 3:
        raise GeometryError(f"expected a 3-vector, got {v}")
    return v


@dataclass(frozen=True)
class SourceSpec:
    """Fictitious source sphere of radius ``a_prime`` inside the physical one."""

    a_prime: float = 0.01
    a_phys: float = 0.0105
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        if not 0 < self.a_prime < self.a_phys:
            raise GeometryError(
                f"need 0 < a_prime < a_phys, got {self.a_prime}, {self.a_phys}")


def _normalize_intervals(intervals):
    """Validate azimuth intervals and merge the ones touching across 2pi.

    Returns sorted ``(start, end)`` pairs with ``0 <= start < end`` and
    ``end - start <= 2pi``; ``end`` may exceed ``2pi`` after a wrap merge.
    """
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    if not ivs:
        raise GeometryError("at least one azimuth interval is required")
    for a, b in ivs:
        if not (0.0 <= a < b <= TWO_PI + _ANGLE_EPS):
            raise GeometryError(f"azimuth interval ({a}, {b}) outside [0, 2pi]")
    for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
        if a1 < b0 - _ANGLE_EPS:
            raise GeometryError("azimuth intervals overlap")
    merged = [list(ivs[0])]
    for a, b in ivs[1:]:
        if abs(a - merged[-1][1]) < _ANGLE_EPS:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    if (len(merged) > 1 and abs(merged[-1][1] - TWO_PI) < _ANGLE_EPS
            and abs(merged[0][0]) < _ANGLE_EPS):
        last = merged.pop()
        merged[0] = [last[0], merged[0][1] + TWO_PI]
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class SectorRegion:
    """Spherical sector ``{r in r_range, theta in theta_range, phi in phi_ranges}``.

    ``theta`` is elevation.  The sector is expressed about its own origin
    and then translated by ``translation``.
    """

    r_range: tuple[float, float]
    theta_range: tuple[float, float] = (-np.pi / 2, np.pi / 2)
    phi_ranges: tuple[tuple[float, float], ...] = ((0.0, TWO_PI),)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    intervals: tuple[tuple[float, float], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r0, r1 = (float(v) for v in self.r_range)
        t0, t1 = (float(v) for v in self.theta_range)
        if not 0 < r0 < r1:
            raise GeometryError(f"need 0 < r_min < r_max, got {r0}, {r1}")
        if not -np.pi / 2 - _ANGLE_EPS <= t0 < t1 <= np.pi / 2 + _ANGLE_EPS:
            raise GeometryError(f"bad elevation range ({t0}, {t1})")
        object.__setattr__(self, "r_range", (r0, r1))
        object.__setattr__(self, "theta_range", (t0, t1))
        phis = tuple((float(a), float(b)) for a, b in self.phi_ranges)
        object.__setattr__(self, "phi_ranges", phis)
        object.__setattr__(self, "translation", _vec3(self.translation))
        object.__setattr__(self, "intervals", _normalize_intervals(phis))

    @property
    def full_azimuth(self) -> bool:
        return len(self.intervals) == 1 and (
            self.intervals[0][1] - self.intervals[0][0] >= TWO_PI - _ANGLE_EPS)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        """Boolean mask of points inside the closed sector."""
        local = np.asarray(points, dtype=float) - np.asarray(self.translation)
        r, theta, phi = cartesian_to_direction(local)
        (r0, r1), (t0, t1) = self.r_range, self.theta_range
        inside = (r >= r0 - tol) & (r <= r1 + tol)
        inside &= (theta >= t0 - tol) & (theta <= t1 + tol)
        in_phi = np.zeros_like(inside)
        for a, b in self.intervals:
            rel = np.mod(phi - a, TWO_PI)
            in_phi |= (rel <= b - a + tol) | (rel >= TWO_PI - tol)
        return inside & in_phi

    def face_areas(self) -> list[tuple[int, int, float]]:
        """``(interval index, face label, area)`` for every non-degenerate face."""
        (r0, r1), (t0, t1) = self.r_range, self.theta_range
        dsin = np.sin(t1) - np.sin(t0)
        ring = 0.5 * (r1**2 - r0**2)
        faces = []
        for i, (a, b) in enumerate(self.intervals):
            dphi = b - a
            faces.append((i, OUTER_CAP, r1**2 * dsin * dphi))
            faces.append((i, INNER_CAP, r0**2 * dsin * dphi))
            if t1 < np.pi / 2 - _ANGLE_EPS:
                faces.append((i, UPPER_CONE, np.cos(t1) * ring * dphi))
            if t0 > -np.pi / 2 + _ANGLE_EPS:
                faces.append((i, LOWER_CONE, np.cos(t0) * ring * dphi))
            if dphi < TWO_PI - _ANGLE_EPS:
                faces.append((i, START_WALL, ring * (t1 - t0)))
                faces.append((i, END_WALL, ring * (t1 - t0)))
        return faces

    def boundary_area(self) -> float:
        return float(sum(area for _, _, area in self.face_areas()))

    def extent(self) -> float:
        """Upper bound on ``|x|`` over the region."""
        return float(np.linalg.norm(self.translation) + self.r_range[1])


@dataclass(frozen=True)
class ExteriorSphereRegion:
    """The exterior ``R^3 minus B_R(0)``; only its bounding sphere is discretised."""

    R: float = 10.0

    def __post_init__(self):
        if not self.R > 0:
            raise GeometryError(f"exterior radius must be positive, got {self.R}")

    @property
    def mu(self) -> float:
        return 1.0 / (4 * np.pi * self.R**2)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        return np.linalg.norm(np.asarray(points, dtype=float), axis=-1) >= self.R - tol


@dataclass(frozen=True)
class PointCloud:
    """Boundary samples with outward normals and surface quadrature weights."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray | None = None
    face_ids: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float).reshape(-1, 3)
        w = np.ascontiguousarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise GeometryError("weights and points differ in length")
        if np.any(w <= 0):
            raise GeometryError("quadrature weights must be positive")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.normals is not None:
            n = np.ascontiguousarray(self.normals, dtype=float).reshape(-1, 3)
            n.flags.writeable = False
            object.__setattr__(self, "normals", n)

    def __len__(self):
        return self.points.shape[0]

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def l2_norm(self, values) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(values) ** 2)))


def _allocate(counts_real, total):
    """Largest-remainder rounding with at least one point per entry."""
    counts_real = np.asarray(counts_real, dtype=float)
    base = np.maximum(np.floor(counts_real).astype(int), 1)
    short = total - base.sum()
    if short > 0:
        order = np.argsort(-(counts_real - np.floor(counts_real)), kind="stable")
        for i in order[:short]:
            base[i] += 1
    return base


def _equal_area_cells(n: int, aspect: float):
    """Midpoints of ``n`` equal-area cells of the unit square.

    Rows are strips whose heights are proportional to how many cells they
    hold, so every cell has area exactly ``1/n``.  ``aspect`` is the
    physical width/height ratio and sets the row count.
    """
    rows = int(min(n, max(1, round(np.sqrt(n / max(aspect, 1e-12))))))
    per_row = np.full(rows, n // rows)
    per_row[: n % rows] += 1
    edges = np.concatenate([[0.0], np.cumsum(per_row) / n])
    us, vs = [], []
    for j, m in enumerate(per_row):
        us.append((np.arange(m) + 0.5) / m)
        vs.append(np.full(m, 0.5 * (edges[j] + edges[j + 1])))
    return np.concatenate(us), np.concatenate(vs)


def discretize_sector_boundary(region: SectorRegion, n_points_target: int) -> PointCloud:
    """Sample the closed boundary of a sector with equal-area cells per face.

    Each face receives a share of ``n_points_target`` proportional to its
    area (exact total) and every sample on a face carries weight
    ``face_area / n_face``.  Samples are midpoints in area-uniform
    coordinates: ``sin(theta)`` on caps, ``r**2`` on cones and walls.
    """
    if n_points_target < 100:
        raise GeometryError("n_points_target must be at least 100")
    faces = region.face_areas()
    areas = np.array([a for _, _, a in faces])
    if np.any(areas <= 0) or not np.all(np.isfinite(areas)):
        raise GeometryError("degenerate sector")
    counts = _allocate(n_points_target * areas / areas.sum(), n_points_target)

    (r0, r1), (t0, t1) = region.r_range, region.theta_range
    s0, s1 = np.sin(t0), np.sin(t1)
    pts, nrm, wts, ids = [], [], [], []
    for (iv, label, area), n in zip(faces, counts):
        a, b = region.intervals[iv]
        dphi = b - a
        if label in (OUTER_CAP, INNER_CAP):
            r = r1 if label == OUTER_CAP else r0
            u, v = _equal_area_cells(n, r * dphi / (r * (t1 - t0)))
            phi = a + u * dphi
            theta = np.arcsin(s0 + v * (s1 - s0))
            e = direction_to_cartesian(theta, phi)
            p = r * e
            normal = e if label == OUTER_CAP else -e
        elif label in (UPPER_CONE, LOWER_CONE):
            t = t1 if label == UPPER_CONE else t0
            rm = 0.5 * (r0 + r1)
            u, v = _equal_area_cells(n, rm * np.cos(t) * dphi / (r1 - r0))
            phi = a + u * dphi
            r = np.sqrt(r0**2 + v * (r1**2 - r0**2))
            e = direction_to_cartesian(np.full_like(phi, t), phi)
            p = r[:, None] * e
            # d/dtheta of the unit vector points toward increasing elevation
            e_theta = np.stack([-np.sin(t) * np.cos(phi), -np.sin(t) * np.sin(phi),
                                np.full_like(phi, np.cos(t))], axis=-1)
            normal = e_theta if label == UPPER_CONE else -e_theta
        else:
            ph = a if label == START_WALL else b
            rm = 0.5 * (r0 + r1)
            u, v = _equal_area_cells(n, rm * (t1 - t0) / (r1 - r0))
            theta = t0 + u * (t1 - t0)
            r = np.sqrt(r0**2 + v * (r1**2 - r0**2))
            p = r[:, None] * direction_to_cartesian(theta, np.full_like(theta, ph))
            e_phi = np.array([-np.sin(ph), np.cos(ph), 0.0])
            normal = np.broadcast_to(-e_phi if label == START_WALL else e_phi, p.shape)
        pts.append(p)
        nrm.append(normal)
        wts.append(np.full(n, area / n))
        ids.append(np.full(n, label))
    points = np.concatenate(pts) + np.asarray(region.translation)
    return PointCloud(points, np.concatenate(wts), np.concatenate(nrm), np.concatenate(ids))


def discretize_sphere_boundary(R: float, n_azimuthal: int, n_polar: int,
                               center=(0.0, 0.0, 0.0)) -> PointCloud:
    """Equiangular grid on a sphere with exact cell-area weights.

    Nodes sit at cell midpoints in elevation and azimuth.  The weight of a
    node is the area of its cell, ``R**2 cos(theta) dtheta dphi`` times the
    factor ``sinc(dtheta/2)``, so weights sum to ``4 pi R**2`` exactly.
    """
    if n_azimuthal < 4 or n_polar < 4:
        raise GeometryError("sphere grid needs at least 4 nodes per direction")
    dphi = TWO_PI / n_azimuthal
    dtheta = np.pi / n_polar
    theta = -np.pi / 2 + (np.arange(n_polar) + 0.5) * dtheta
    phi = (np.arange(n_azimuthal) + 0.5) * dphi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    e = direction_to_cartesian(T.ravel(), P.ravel())
    w = R**2 * dphi * 2 * np.sin(dtheta / 2) * np.cos(T.ravel())
    return PointCloud(R * e + np.asarray(center, dtype=float), w, e)


def discretize_region(region, n_points: int = 2400, n_azimuthal: int = 200,
                      n_polar: int = 100) -> PointCloud:
    if isinstance(region, ExteriorSphereRegion):
        return discretize_sphere_boundary(region.R, n_azimuthal, n_polar)
    return discretize_sector_boundary(region, n_points)


def cross_section_grid(region: SectorRegion, n: int = 100) -> np.ndarray:
    """Points of an ``n x n`` grid on the region's equatorial slice (z = translation z).

    The grid spans the bounding box of the slice and keeps only the nodes
    inside the sector.  Requires the elevation band to contain 0.
    """
    t0, t1 = region.theta_range
    if not t0 <= 0 <= t1:
        raise GeometryError("equatorial slice does not intersect the sector")
    r1 = region.r_range[1]
    phis = np.concatenate([np.linspace(a, b, 64) for a, b in region.intervals])
    rim = np.concatenate([np.stack([r * np.cos(phis), r * np.sin(phis)], -1)
                          for r in region.r_range])
    lo, hi = rim.min(axis=0), rim.max(axis=0)
    lo = np.maximum(lo, -r1)
    hi = np.minimum(hi, r1)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    tx, ty, tz = region.translation
    pts = np.stack([X.ravel() + tx, Y.ravel() + ty, np.full(X.size, tz)], axis=-1)
    return pts[region.contains(pts)]


def rotate_about_origin(region: SectorRegion, angle: float) -> SectorRegion:
    """Rotate the region's translation counterclockwise in the xy-plane."""
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = region.translation
    return replace(region, translation=(c * x - s * y, s * x + c * y, z))


def sector_axis(region: SectorRegion) -> np.ndarray:
    """Unit vector through the middle of the sector's angular ranges."""
    t0, t1 = region.theta_range
    a, b = region.intervals[0]
    return direction_to_cartesian(0.5 * (t0 + t1), 0.5 * (a + b))


def shift_radially(region: SectorRegion, delta: float) -> SectorRegion:
    """Translate the sector rigidly by ``delta`` along its own axis.

    Shape and size are unchanged; only the distance to the source grows.
    """
    t = np.asarray(region.translation) + delta * sector_axis(region)
    return replace(region, translation=tuple(t))


def grow_outer_radius(region: SectorRegion, delta: float) -> SectorRegion:
    r0, r1 = region.r_range
    return replace(region, r_range=(r0, r1 + delta))


def grow_both_radii(region: SectorRegion, delta: float) -> SectorRegion:
    """Add ``delta`` to both the inner and the outer radius."""
    r0, r1 = region.r_range
    return replace(region, r_range=(r0 + delta, r1 + delta))


def _sample_volume(region: SectorRegion, n: int = 24) -> np.ndarray:
    (r0, r1), (t0, t1) = region.r_range, region.theta_range
    r = np.linspace(r0, r1, n)
    t = np.linspace(t0, t1, n)
    chunks = []
    for a, b in region.intervals:
        p = np.linspace(a, b, 2 * n)
        R, T, P = np.meshgrid(r, t, p, indexing="ij")
        chunks.append(R.ravel()[:, None] * direction_to_cartesian(T.ravel(), P.ravel()))
    return np.concatenate(chunks) + np.asarray(region.translation)


def check_configuration(source: SourceSpec, regions) -> None:
    """Raise :class:`GeometryError` unless regions avoid the source and each other.

    Bounded regions are tested against the physical source ball exactly
    (closest point of a sector sampled on a dense grid) and against one
    another by mutual membership of dense volume samples.  An exterior
    region must enclose the source and every bounded region.
    """
    center = np.asarray(source.center)
    bounded = [r for r in regions if isinstance(r, SectorRegion)]
    exterior = [r for r in regions if isinstance(r, ExteriorSphereRegion)]
    if len(exterior) > 1:
        raise GeometryError("at most one exterior region is supported")
    samples = [_sample_volume(r) for r in bounded]
    for i, (reg, pts) in enumerate(zip(bounded, samples)):
        if np.min(np.linalg.norm(pts - center, axis=1)) <= source.a_phys:
            raise GeometryError(f"bounded region {i} intersects the physical source")
    for i in range(len(bounded)):
        for j in range(i + 1, len(bounded)):
            if (np.any(bounded[j].contains(samples[i], tol=0.0))
                    or np.any(bounded[i].contains(samples[j], tol=0.0))):
                raise GeometryError(f"bounded regions {i} and {j} overlap")
    for ext in exterior:
        reach = max([source.a_phys + float(np.linalg.norm(center))]
                    + [r.extent() for r in bounded])
        if ext.R <= reach:
            raise GeometryError(
                f"exterior radius {ext.R} does not enclose the source and bounded regions")
