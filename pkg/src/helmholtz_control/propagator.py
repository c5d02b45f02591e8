"""Combined single/double layer field of a spherical-harmonic density.

The density lives on the fictitious sphere ``|y - center| = a_prime``::

    w(y) = sum_{l<=L} sum_{|p|<=l} alpha[l, p] Y_l^p(y_hat)

and radiates ``u = eta1 * DL[w] + 1j * eta2 * SL[w]``.  By the addition
theorem each harmonic maps to a single outgoing mode, so

    u(x) = sum alpha[l, p] * g_l(|x|) * Y_l^p(x_hat)

with ``g_l(r) = 1j*k*a**2 * h_l(k r) * (eta1 * k * j_l'(k a) + 1j * eta2 * j_l(k a))``.
:func:`eval_field_quadrature` integrates the layer kernels directly and
never uses that identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import PointCloud
from .specfun import (
    cartesian_to_direction,
    derivative_from_orders,
    num_coefficients,
    sph_bessel_j_all,
    sph_hankel1_all,
    sph_harmonics_all,
)

__all__ = [
    "DensityCoefficients",
    "PropagatorConfig",
    "MediumParams",
    "mode_radial_factor",
    "radial_factors",
    "moment_matrix",
    "eval_field",
    "moment_row_quadrature",
    "eval_field_quadrature",
    "dirichlet_trace",
    "neumann_trace",
]

_CHUNK = 4096


@dataclass(frozen=True)
class PropagatorConfig:
    """Wavenumber, fictitious radius, layer weights and harmonic degree."""

    k: float = 10.0
    a_prime: float = 0.01
    eta1: float = 1.0
    eta2: float = 1.0
    L: int = 30
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if not self.a_prime > 0:
            raise ValueError(f"a_prime must be positive, got {self.a_prime}")
        if self.eta1 == 0 and self.eta2 == 0:
            raise ValueError("eta1 and eta2 cannot both vanish")
        if int(self.L) != self.L or self.L < 0:
            raise ValueError(f"L must be a non-negative integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class MediumParams:
    """Ambient density (kg/m^3) and sound speed (m/s); defaults are air at 20 C."""

    rho: float = 1.204
    c: float = 343.0

    def __post_init__(self):
        if not (self.rho > 0 and self.c > 0):
            raise ValueError("rho and c must be positive")


@dataclass(frozen=True)
class DensityCoefficients:
    """Coefficients ``alpha`` of the density, flat-indexed by ``l**2 + l + p``."""

    L: int
    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=complex).reshape(-1)
        if self.L < 0 or a.shape[0] != num_coefficients(self.L):
            raise ValueError(f"expected {(self.L + 1) ** 2} coefficients, got {a.shape[0]}")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def zeros(cls, L: int) -> DensityCoefficients:
        return cls(L, np.zeros(num_coefficients(L), dtype=complex))

    def l2_norm(self, a_prime: float) -> float:
        """``||w||`` over the fictitious sphere (orthonormal basis times ``a_prime``)."""
        return float(a_prime * np.linalg.norm(self.alpha))

    def truncate(self, L: int) -> DensityCoefficients:
        return DensityCoefficients(L, self.alpha[: num_coefficients(L)])

    def density(self, theta, phi) -> np.ndarray:
        return sph_harmonics_all(self.L, theta, phi) @ self.alpha


def _mode_constants(cfg: PropagatorConfig) -> np.ndarray:
    ka = cfg.k * cfg.a_prime
    j = sph_bessel_j_all(cfg.L + 1, ka)
    jd = derivative_from_orders(j, ka)
    return (1j * cfg.k * cfg.a_prime**2
            * (cfg.eta1 * cfg.k * jd + 1j * cfg.eta2 * j[: cfg.L + 1]))


def _exterior_radii(cfg: PropagatorConfig, points):
    rel = np.asarray(points, dtype=float).reshape(-1, 3) - np.asarray(cfg.center)
    r, theta, phi = cartesian_to_direction(rel)
    if np.any(r <= cfg.a_prime):
        raise ValueError("evaluation points must lie outside the fictitious sphere")
    return r, theta, phi


def radial_factors(cfg: PropagatorConfig, r, derivative: bool = False) -> np.ndarray:
    """``g_l(r)`` (or ``dg_l/dr``) for all ``l <= L``; shape ``r.shape + (L+1,)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= cfg.a_prime):
        raise ValueError("radius must exceed a_prime")
    # overflow for tiny k*r surfaces as inf/nan; callers check finiteness
    with np.errstate(over="ignore", invalid="ignore"):
        const = _mode_constants(cfg)
        if derivative:
            h = derivative_from_orders(sph_hankel1_all(cfg.L + 1, cfg.k * r), cfg.k * r) * cfg.k
        else:
            h = sph_hankel1_all(cfg.L, cfg.k * r)
        return np.moveaxis(h, 0, -1) * const


def mode_radial_factor(cfg: PropagatorConfig, l: int, r):
    """Radial factor of degree ``l`` at distance ``r`` from the source centre."""
    if not 0 <= l <= cfg.L:
        raise ValueError(f"degree {l} outside 0..{cfg.L}")
    return radial_factors(cfg, r)[..., l]


def _degree_of_column(L: int) -> np.ndarray:
    return np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)


def moment_matrix(cfg: PropagatorConfig, points, derivative: bool = False) -> np.ndarray:
    """Field of each unit harmonic density at each point, shape ``(N, (L+1)**2)``."""
    r, theta, phi = _exterior_radii(cfg, points)
    cols = _degree_of_column(cfg.L)
    out = np.empty((r.shape[0], num_coefficients(cfg.L)), dtype=complex)
    for s in range(0, r.shape[0], _CHUNK):
        sl = slice(s, s + _CHUNK)
        g = radial_factors(cfg, r[sl], derivative)
        with np.errstate(invalid="ignore"):
            out[sl] = sph_harmonics_all(cfg.L, theta[sl], phi[sl]) * g[:, cols]
    return out


def _as_points(pts):
    return pts.points if isinstance(pts, PointCloud) else np.asarray(pts, dtype=float).reshape(-1, 3)


def eval_field(coeffs: DensityCoefficients, cfg: PropagatorConfig, pts) -> np.ndarray:
    """Radiated field at the points of a cloud (or an ``(N, 3)`` array)."""
    if coeffs.L != cfg.L:
        raise ValueError(f"coefficients have L={coeffs.L}, config has L={cfg.L}")
    return moment_matrix(cfg, _as_points(pts)) @ coeffs.alpha


def _gauss_panels(r: float, a: float, n_quad: int):
    """Polar nodes/weights on [0, pi] graded toward the nearest surface point."""
    gap = (r - a) / np.sqrt(r * a)
    edges = [0.0]
    h = gap
    while edges[-1] + h < np.pi:
        edges.append(edges[-1] + h)
        h = 2 * (edges[-1])
    edges.append(np.pi)
    x, w = np.polynomial.legendre.leggauss(n_quad)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def moment_row_quadrature(cfg: PropagatorConfig, x, n_quad: int = 64) -> np.ndarray:
    """Moments of every harmonic at one point by direct surface quadrature.

    The frame is rotated so that ``x`` lies on the polar axis; the kernel
    then depends only on the polar angle, which is integrated with
    Gauss-Legendre panels refined toward the pole, while the azimuth uses
    the trapezoid rule (exact for the band-limited density).
    """
    if n_quad < 2 * cfg.L + 2:
        raise ValueError(f"n_quad must be at least 2L+2 = {2 * cfg.L + 2}")
    c = np.asarray(cfg.center, dtype=float)
    rel = np.asarray(x, dtype=float) - c
    r = float(np.linalg.norm(rel))
    a = cfg.a_prime
    if r <= a:
        raise ValueError("evaluation point must lie outside the fictitious sphere")
    ez = rel / r
    helper = np.array([1.0, 0.0, 0.0]) if abs(ez[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    ex = np.cross(helper, ez)
    ex /= np.linalg.norm(ex)
    ey = np.cross(ez, ex)

    gam, gw = _gauss_panels(r, a, n_quad)
    n_az = max(2 * n_quad, 2 * cfg.L + 2)
    beta = 2 * np.pi * np.arange(n_az) / n_az
    G, B = np.meshgrid(gam, beta, indexing="ij")
    yhat = (np.sin(G)[..., None] * (np.cos(B)[..., None] * ex + np.sin(B)[..., None] * ey)
            + np.cos(G)[..., None] * ez)
    dist = np.sqrt(r * r + a * a - 2 * r * a * np.cos(gam))
    k = cfg.k
    phi_kernel = np.exp(1j * k * dist) / (4 * np.pi * dist)
    # d/dn_y Phi = Phi' (R) * (y - x).n_y / R with n_y = y_hat
    proj = (a - r * np.cos(gam)) / dist
    dphi_dn = phi_kernel * (1j * k - 1.0 / dist) * proj
    kernel = cfg.eta1 * dphi_dn + 1j * cfg.eta2 * phi_kernel
    weight = kernel * gw * np.sin(gam) * a * a * (2 * np.pi / n_az)

    _, th, ph = cartesian_to_direction(yhat.reshape(-1, 3))
    Y = sph_harmonics_all(cfg.L, th, ph).reshape(G.shape + (-1,))
    return np.einsum("g,gbn->n", weight, Y)


def eval_field_quadrature(coeffs: DensityCoefficients, cfg: PropagatorConfig, x,
                          n_quad: int = 64) -> complex:
    """Reference value of the field at one point from direct integration."""
    if coeffs.L != cfg.L:
        raise ValueError(f"coefficients have L={coeffs.L}, config has L={cfg.L}")
    return complex(moment_row_quadrature(cfg, x, n_quad) @ coeffs.alpha)


def dirichlet_trace(coeffs: DensityCoefficients, cfg: PropagatorConfig, surface) -> np.ndarray:
    """Boundary pressure the physical source surface must carry."""
    return eval_field(coeffs, cfg, surface)


def neumann_trace(coeffs: DensityCoefficients, cfg: PropagatorConfig, medium: MediumParams,
                  surface: PointCloud) -> np.ndarray:
    """Normal velocity ``-1j/(rho c k) du/dn`` on a sphere about the source centre."""
    if coeffs.L != cfg.L:
        raise ValueError(f"coefficients have L={coeffs.L}, config has L={cfg.L}")
    if surface.normals is None:
        raise ValueError("surface needs normals for the Neumann trace")
    rel = surface.points - np.asarray(cfg.center)
    rhat = rel / np.linalg.norm(rel, axis=1, keepdims=True)
    cos_n = np.einsum("ij,ij->i", rhat, surface.normals)
    if np.any(np.abs(np.abs(cos_n) - 1.0) > 1e-9):
        raise ValueError("Neumann trace is only defined for radial normals")
    du_dr = moment_matrix(cfg, surface.points, derivative=True) @ coeffs.alpha
    return -1j / (medium.rho * medium.c * cfg.k) * np.sign(cos_n) * du_dr
