"""Spherical Bessel/Hankel functions and orthonormal spherical harmonics.

Everything here works on whole ranges of orders at once because the
moment matrices need every degree ``0..L`` at every evaluation point.

Angles follow the elevation convention used throughout the package:
``theta`` is measured from the equator (``[-pi/2, pi/2]``) and ``phi`` is
the azimuth.  Harmonics carry the Condon-Shortley phase and are indexed
flat as ``l**2 + l + p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HarmonicIndex",
    "SphericalDirection",
    "flat_index",
    "degree_order",
    "num_coefficients",
    "sph_bessel_j_all",
    "sph_bessel_y_all",
    "sph_bessel_j",
    "sph_bessel_y",
    "sph_bessel_j_deriv",
    "sph_hankel1",
    "sph_hankel1_deriv",
    "sph_hankel1_all",
    "derivative_from_orders",
    "sph_harmonic",
    "sph_harmonics_all",
    "cartesian_to_direction",
    "direction_to_cartesian",
]

_RESCALE_ABOVE = 1e250


@dataclass(frozen=True)
class HarmonicIndex:
    """Degree ``l`` and order ``p`` of a spherical harmonic."""

    l: int
    p: int

    def __post_init__(self):
        if self.l < 0 or abs(self.p) > self.l:
            raise ValueError(f"invalid harmonic index (l={self.l}, p={self.p})")

    @property
    def flat(self) -> int:
        return self.l * self.l + self.l + self.p


@dataclass(frozen=True)
class SphericalDirection:
    """Direction given as elevation ``theta`` and azimuth ``phi`` (radians)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not -np.pi / 2 <= self.theta <= np.pi / 2:
            raise ValueError(f"elevation {self.theta} outside [-pi/2, pi/2]")
        if not 0.0 <= self.phi < 2 * np.pi:
            raise ValueError(f"azimuth {self.phi} outside [0, 2pi)")

    def unit_vector(self) -> np.ndarray:
        return direction_to_cartesian(self.theta, self.phi)


def flat_index(l, p):
    return l * l + l + p


def degree_order(idx):
    """Inverse of :func:`flat_index`; works on ints and integer arrays."""
    l = np.floor(np.sqrt(idx)).astype(int) if np.ndim(idx) else int(np.sqrt(idx))
    return l, idx - l * l - l


def num_coefficients(L: int) -> int:
    return (L + 1) ** 2


def _check_argument(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("spherical Bessel argument must be finite and > 0")
    return x


def sph_bessel_j_all(nmax: int, x) -> np.ndarray:
    """``j_n(x)`` for ``n = 0..nmax``, shape ``(nmax + 1,) + x.shape``.

    Downward (Miller) recurrence started well above both ``nmax`` and ``x``,
    normalised against whichever of the closed forms of ``j_0`` or ``j_1``
    is larger in magnitude.  Values below the double range underflow to 0.
    """
    x = _check_argument(x)
    shape = x.shape
    x = x.ravel()
    top = max(nmax, 1)
    xmax = float(x.max()) if x.size else 0.0
    start = top + 20 + int(xmax + 10.0 * np.cbrt(xmax))

    out = np.zeros((top + 1, x.size))
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-300)
    for n in range(start, 0, -1):
        f_prev = (2 * n + 1) / x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        if n - 1 <= top:
            out[n - 1] = f_cur
        big = np.abs(f_cur) > _RESCALE_ABOVE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE_ABOVE, 1.0)
            f_cur = f_cur * scale
            f_next = f_next * scale
            out *= scale

    sx, cx = np.sin(x), np.cos(x)
    j0 = sx / x
    j1 = sx / x**2 - cx / x
    use_j0 = np.abs(j0) >= np.abs(j1)
    ref, trial = np.where(use_j0, j0, j1), np.where(use_j0, out[0], out[1])
    norm = ref / trial
    out *= norm
    return out[: nmax + 1].reshape((nmax + 1,) + shape)


def sph_bessel_y_all(nmax: int, x) -> np.ndarray:
    """``y_n(x)`` for ``n = 0..nmax`` by upward recurrence (overflows to -inf)."""
    x = _check_argument(x)
    top = max(nmax, 1)
    out = np.empty((top + 1,) + x.shape)
    sx, cx = np.sin(x), np.cos(x)
    out[0] = -cx / x
    out[1] = -cx / x**2 - sx / x
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, top):
            out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    return out[: nmax + 1]


def sph_hankel1_all(nmax: int, x) -> np.ndarray:
    return sph_bessel_j_all(nmax, x) + 1j * sph_bessel_y_all(nmax, x)


def derivative_from_orders(values: np.ndarray, x) -> np.ndarray:
    """Derivatives of a cylinder-function family given orders ``0..nmax+1``.

    ``values`` has a leading order axis of length ``nmax + 2``; the result
    covers orders ``0..nmax`` using ``f_0' = -f_1`` and
    ``f_n' = f_{n-1} - (n+1)/x f_n``.
    """
    x = np.asarray(x, dtype=float)
    nmax = values.shape[0] - 2
    out = np.empty((nmax + 1,) + values.shape[1:], dtype=values.dtype)
    out[0] = -values[1]
    n = np.arange(1, nmax + 1).reshape((-1,) + (1,) * x.ndim)
    with np.errstate(over="ignore", invalid="ignore"):
        out[1:] = values[:nmax] - (n + 1) / x * values[1 : nmax + 1]
    return out


def sph_bessel_j(n: int, x):
    """Spherical Bessel function of the first kind ``j_n(x)``, ``x > 0``."""
    return sph_bessel_j_all(n, x)[n]


def sph_bessel_y(n: int, x):
    return sph_bessel_y_all(n, x)[n]


def sph_bessel_j_deriv(n: int, x):
    x = _check_argument(x)
    return derivative_from_orders(sph_bessel_j_all(n + 1, x), x)[n]


def sph_hankel1(n: int, x):
    """Spherical Hankel function ``h_n^(1)(x) = j_n(x) + i y_n(x)``."""
    return sph_hankel1_all(n, x)[n]


def sph_hankel1_deriv(n: int, x):
    x = _check_argument(x)
    return derivative_from_orders(sph_hankel1_all(n + 1, x), x)[n]


def direction_to_cartesian(theta, phi) -> np.ndarray:
    """Unit vectors for elevation/azimuth pairs, trailing axis of length 3."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct = np.cos(theta)
    return np.stack([ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1)


def cartesian_to_direction(points):
    """Return ``(r, theta, phi)`` with elevation ``theta`` and ``phi`` in [0, 2pi)."""
    points = np.asarray(points, dtype=float)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    r = np.sqrt(x * x + y * y + z * z)
    theta = np.arctan2(z, np.hypot(x, y))
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    return r, theta, phi


def _normalized_legendre(L: int, sin_elev, cos_elev) -> np.ndarray:
    """Orthonormal associated Legendre values ``P[l, m]`` for ``0 <= m <= l``.

    Includes ``sqrt((2l+1)/(4pi) (l-m)!/(l+m)!)`` and the Condon-Shortley
    phase, so ``Y_l^m = P[l, m] exp(i m phi)``.
    """
    t = np.asarray(sin_elev, dtype=float)  # cosine of the polar angle
    s = np.asarray(cos_elev, dtype=float)  # sine of the polar angle
    P = np.zeros((L + 1, L + 1) + t.shape)
    P[0, 0] = 1.0 / np.sqrt(4 * np.pi)
    for m in range(1, L + 1):
        P[m, m] = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(L):
        P[m + 1, m] = np.sqrt(2 * m + 3.0) * t * P[m, m]
    for m in range(L + 1):
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            P[l, m] = a * (t * P[l - 1, m] - b * P[l - 2, m])
    return P


def sph_harmonics_all(L: int, theta, phi) -> np.ndarray:
    """All ``Y_l^p`` with ``l <= L``; shape ``theta.shape + ((L+1)**2,)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    P = _normalized_legendre(L, np.sin(theta), np.cos(theta))
    out = np.empty(theta.shape + (num_coefficients(L),), dtype=complex)
    m = np.arange(L + 1).reshape((-1,) + (1,) * theta.ndim)
    eimp = np.exp(1j * m * phi)
    sign = 1.0
    for p in range(L + 1):
        ls = np.arange(p, L + 1)
        pos = P[ls, p] * eimp[p]
        out[..., ls * ls + ls + p] = np.moveaxis(pos, 0, -1)
        if p:
            out[..., ls * ls + ls - p] = np.moveaxis(sign * np.conj(pos), 0, -1)
        sign = -sign
    return out


def sph_harmonic(idx: HarmonicIndex, direction: SphericalDirection) -> complex:
    Y = sph_harmonics_all(idx.l, direction.theta, direction.phi)
    return complex(Y[idx.flat])
