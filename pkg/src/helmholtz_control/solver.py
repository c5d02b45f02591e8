"""Weighted least-squares assembly and Tikhonov/Morozov solution.

The discrete functional is::

    sum_i w_i |(A c - b)_i|**2 + alpha * a_prime**2 * ||c||**2

where row weights ``w_i`` are surface quadrature weights times the region
weight ``mu`` (1 for bounded regions, ``1/(4 pi R**2)`` for the exterior of
``B_R``).  All solves go through one SVD of ``sqrt(w) * A`` so that the
Morozov search and noisy re-solves are cheap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .geometry import (
    ExteriorSphereRegion,
    PointCloud,
    SectorRegion,
    check_configuration,
    discretize_region,
)
from .propagator import DensityCoefficients, PropagatorConfig, moment_matrix
from .specfun import num_coefficients

__all__ = [
    "SolverError",
    "TargetField",
    "Control",
    "make_control",
    "LinearSystem",
    "Solution",
    "assemble",
    "tikhonov_solve",
    "morozov_select",
    "solve_system",
    "solve_control_problem",
    "LOG10_ALPHA_BRACKET",
]

log = logging.getLogger(__name__)

LOG10_ALPHA_BRACKET = (-16.0, 4.0)
MOROZOV_UPPER = 1.05


class SolverError(RuntimeError):
    """Numerical failure: non-finite system, rank loss, broken monotonicity."""


@dataclass(frozen=True)
class TargetField:
    """Prescribed field on a control region.

    ``plane_wave`` is ``amplitude * exp(1j * k * direction . x)``; ``zero``
    asks for silence; ``superposition`` is a sum of plane waves along
    ``direction`` with ``components = ((k, amplitude), ...)``.
    """

    kind: str = "plane_wave"
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    amplitude: complex = 1.0
    k: float = 10.0
    components: tuple[tuple[float, complex], ...] = ()

    def __post_init__(self):
        if self.kind not in ("plane_wave", "zero", "superposition"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("target direction must be a unit vector")
        object.__setattr__(self, "direction", tuple(float(v) for v in d))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        comps = tuple((float(kk), complex(a)) for kk, a in self.components)
        if self.kind == "superposition":
            ks = [kk for kk, _ in comps]
            if not ks or len(set(ks)) != len(ks):
                raise ValueError("superposition needs distinct wavenumbers")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls) -> TargetField:
        return cls(kind="zero")

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "plane_wave":
            return self.amplitude == 0
        return all(a == 0 for _, a in self.components)

    def evaluate(self, points) -> np.ndarray:
        pts = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=float)
        pts = pts.reshape(-1, 3)
        if self.kind == "zero":
            return np.zeros(pts.shape[0], dtype=complex)
        proj = pts @ np.asarray(self.direction)
        if self.kind == "plane_wave":
            return self.amplitude * np.exp(1j * self.k * proj)
        return sum(a * np.exp(1j * kk * proj) for kk, a in self.components)

    def at_wavenumber(self, k: float, amplitude: complex = 1.0) -> TargetField:
        """Single-frequency plane wave along the same direction (zero stays zero)."""
        if self.is_zero:
            return TargetField.zero()
        return TargetField("plane_wave", self.direction, amplitude, k)


@dataclass(frozen=True)
class Control:
    """A control region, its boundary samples and the field wanted there."""

    name: str
    region: SectorRegion | ExteriorSphereRegion
    target: TargetField
    cloud: PointCloud = field(repr=False)

    @property
    def mu(self) -> float:
        return self.region.mu if isinstance(self.region, ExteriorSphereRegion) else 1.0


def make_control(name: str, region, target: TargetField, n_points: int = 2400,
                 n_azimuthal: int = 200, n_polar: int = 100) -> Control:
    return Control(name, region, target, discretize_region(region, n_points, n_azimuthal, n_polar))


@dataclass
class _Factorization:
    U: np.ndarray
    s: np.ndarray
    Vh: np.ndarray


@dataclass
class LinearSystem:
    """``A c ~ b`` with positive row weights and named row blocks."""

    A: np.ndarray
    b: np.ndarray
    row_weights: np.ndarray
    a_prime: float
    blocks: tuple[tuple[str, slice], ...] = ()
    _svd: _Factorization | None = field(default=None, repr=False)

    def __post_init__(self):
        n, m = self.A.shape
        if self.b.shape != (n,) or self.row_weights.shape != (n,):
            raise ValueError("A, b and row_weights have inconsistent shapes")
        if np.any(self.row_weights <= 0):
            raise ValueError("row weights must be positive")
        if not self.blocks:
            self.blocks = (("all", slice(0, n)),)

    @property
    def L(self) -> int:
        return int(round(np.sqrt(self.A.shape[1]))) - 1

    @property
    def sqrt_w(self) -> np.ndarray:
        return np.sqrt(self.row_weights)

    def weighted_norm(self, v) -> float:
        return float(np.sqrt(np.sum(self.row_weights * np.abs(v) ** 2)))

    @property
    def b_norm(self) -> float:
        return self.weighted_norm(self.b)

    def residual(self, coeffs: DensityCoefficients) -> float:
        return self.weighted_norm(self.A @ coeffs.alpha - self.b)

    def residual_by_region(self, coeffs: DensityCoefficients) -> dict[str, float]:
        """Weighted residual of each block (region weight ``mu`` included)."""
        r = self.A @ coeffs.alpha - self.b
        return {name: self.weighted_norm_block(r, sl) for name, sl in self.blocks}

    def weighted_norm_block(self, v, sl: slice) -> float:
        return float(np.sqrt(np.sum(self.row_weights[sl] * np.abs(v[sl]) ** 2)))

    def factorize(self) -> _Factorization:
        if self._svd is None:
            M = self.sqrt_w[:, None] * self.A
            if not np.all(np.isfinite(M)):
                raise SolverError("system matrix has non-finite entries")
            U, s, Vh = np.linalg.svd(M, full_matrices=False)
            self._svd = _Factorization(U, s, Vh)
        return self._svd

    def with_rhs(self, b) -> LinearSystem:
        """Same matrix and weights, new right-hand side; shares the SVD."""
        return replace(self, b=np.asarray(b, dtype=complex))

    def truncate(self, L: int) -> LinearSystem:
        """Keep the columns of degrees ``<= L`` (fresh factorization)."""
        return LinearSystem(self.A[:, : num_coefficients(L)], self.b, self.row_weights,
                            self.a_prime, self.blocks)

    def condition_estimate(self) -> float:
        s = self.factorize().s
        return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def assemble(controls: Sequence[Control], cfg: PropagatorConfig) -> LinearSystem:
    """Stack the moment rows, targets and weights of every control region."""
    if not controls:
        raise ValueError("at least one control region is required")
    names = [c.name for c in controls]
    if len(set(names)) != len(names):
        raise ValueError("control names must be unique")
    rows, rhs, weights, blocks = [], [], [], []
    start = 0
    for c in controls:
        if len(c.cloud) == 0:
            raise ValueError(f"control {c.name!r} has an empty discretization")
        rows.append(moment_matrix(cfg, c.cloud.points))
        rhs.append(c.target.evaluate(c.cloud))
        weights.append(c.cloud.weights * c.mu)
        blocks.append((c.name, slice(start, start + len(c.cloud))))
        start += len(c.cloud)
    A = np.concatenate(rows)
    if not np.all(np.isfinite(A)):
        raise SolverError(f"non-finite moments at k={cfg.k:g}")
    return LinearSystem(A, np.concatenate(rhs), np.concatenate(weights), cfg.a_prime,
                        tuple(blocks))


def _filter_solve(sys: LinearSystem, alpha_reg: float, beta=None):
    f = sys.factorize()
    if beta is None:
        beta = f.U.conj().T @ (sys.sqrt_w * sys.b)
    lam = alpha_reg * sys.a_prime**2
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = f.s / (f.s**2 + lam) if lam > 0 else 1.0 / f.s
    return f.Vh.conj().T @ (gain * beta)


class _ResidualCurve:
    """Weighted residual as a function of ``alpha`` from one SVD."""

    def __init__(self, sys: LinearSystem):
        f = sys.factorize()
        bw = sys.sqrt_w * sys.b
        self.sys = sys
        self.s2 = f.s**2
        self.beta = f.U.conj().T @ bw
        self.outside = max(float(np.vdot(bw, bw).real - np.vdot(self.beta, self.beta).real), 0.0)

    def __call__(self, alpha_reg: float) -> float:
        lam = alpha_reg * self.sys.a_prime**2
        damp = lam / (self.s2 + lam)
        val = float(np.sum(damp**2 * np.abs(self.beta) ** 2) + self.outside)
        if not np.isfinite(val):
            raise SolverError("non-finite residual in the Morozov search")
        return np.sqrt(val)


def tikhonov_solve(sys: LinearSystem, alpha_reg: float) -> DensityCoefficients:
    """Minimiser of the weighted Tikhonov functional for a fixed ``alpha``.

    ``alpha_reg = 0`` gives the plain least-squares solution and requires
    full column rank; rank loss raises :class:`SolverError`.
    """
    if alpha_reg < 0:
        raise ValueError("alpha_reg must be non-negative")
    f = sys.factorize()
    if alpha_reg == 0:
        n, m = sys.A.shape
        tol = f.s[0] * max(n, m) * np.finfo(float).eps
        if n < m or f.s[-1] <= tol:
            raise SolverError("system is rank deficient; use alpha_reg > 0")
    return DensityCoefficients(sys.L, _filter_solve(sys, alpha_reg))


@dataclass(frozen=True)
class MorozovResult:
    alpha_reg: float
    coeffs: DensityCoefficients
    discrepancy: float
    delta: float
    converged: bool
    iterations: int


def morozov_select(sys: LinearSystem, delta: float, max_iter: int = 200) -> MorozovResult:
    """Pick ``alpha`` with weighted residual in ``[delta, 1.05 delta]``.

    Bisection runs on ``log10(alpha)`` over :data:`LOG10_ALPHA_BRACKET`.
    If ``delta`` is beyond the residual at the upper end the upper end is
    returned (the near-zero density already fits); if even the lower end
    leaves a residual above the band the lower end is returned with
    ``converged=False``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    curve = _ResidualCurve(sys)
    lo, hi = LOG10_ALPHA_BRACKET
    r_lo, r_hi = curve(10.0**lo), curve(10.0**hi)
    if r_lo > r_hi * (1 + 1e-12):
        raise SolverError("residual is not monotone in alpha")

    def done(log_a, r, ok, it):
        a = 10.0**log_a
        return MorozovResult(a, DensityCoefficients(sys.L, _filter_solve(sys, a, curve.beta)),
                             r, delta, ok, it)

    if r_hi <= MOROZOV_UPPER * delta:
        return done(hi, r_hi, True, 0)
    if r_lo > MOROZOV_UPPER * delta:
        log.info("Morozov target %.3e unattainable (min residual %.3e)", delta, r_lo)
        return done(lo, r_lo, False, 0)
    if r_lo >= delta:
        return done(lo, r_lo, True, 0)
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        r_mid = curve(10.0**mid)
        if not r_lo * (1 - 1e-12) <= r_mid <= r_hi * (1 + 1e-12):
            raise SolverError("residual is not monotone in alpha")
        if delta <= r_mid <= MOROZOV_UPPER * delta:
            return done(mid, r_mid, True, it)
        if r_mid < delta:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
    return done(lo, r_lo, False, max_iter)


@dataclass(frozen=True)
class Solution:
    """Solved density with the regularisation choice and diagnostics."""

    coeffs: DensityCoefficients
    alpha_reg: float
    a_prime: float
    k: float
    residual_by_region: dict[str, float]
    coeff_norm: float
    condition_estimate: float
    discrepancy: float = float("nan")
    delta: float = float("nan")
    converged: bool = True
    eta1: float = 1.0
    eta2: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def propagator(self) -> PropagatorConfig:
        """Configuration that reproduces this solution's field."""
        return PropagatorConfig(self.k, self.a_prime, self.eta1, self.eta2, self.coeffs.L,
                                self.center)

    def to_dict(self) -> dict:
        return {
            "L": self.coeffs.L,
            "k": self.k,
            "a_prime": self.a_prime,
            "alpha_reg": self.alpha_reg,
            "coeff_norm": self.coeff_norm,
            "condition_estimate": self.condition_estimate,
            "discrepancy": self.discrepancy,
            "delta": self.delta,
            "converged": self.converged,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "center": list(self.center),
            "residual_by_region": dict(self.residual_by_region),
            "coefficients": {"re": self.coeffs.alpha.real.tolist(),
                             "im": self.coeffs.alpha.imag.tolist()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> Solution:
        alpha = np.asarray(d["coefficients"]["re"]) + 1j * np.asarray(d["coefficients"]["im"])
        return cls(DensityCoefficients(int(d["L"]), alpha), float(d["alpha_reg"]),
                   float(d["a_prime"]), float(d["k"]), dict(d["residual_by_region"]),
                   float(d["coeff_norm"]), float(d["condition_estimate"]),
                   float(d["discrepancy"]), float(d["delta"]), bool(d["converged"]),
                   float(d["eta1"]), float(d["eta2"]), tuple(d["center"]))


def solve_system(sys: LinearSystem, cfg: PropagatorConfig, delta_rel: float = 1e-3) -> Solution:
    """Morozov-regularised solve with ``delta = delta_rel * ||b||_W``."""
    if sys.L != cfg.L or sys.a_prime != cfg.a_prime:
        raise ValueError("system and propagator configuration disagree")
    meta = dict(eta1=cfg.eta1, eta2=cfg.eta2, center=cfg.center)
    b_norm = sys.b_norm
    if b_norm == 0:
        coeffs = DensityCoefficients.zeros(sys.L)
        return Solution(coeffs, 10.0 ** LOG10_ALPHA_BRACKET[1], sys.a_prime, cfg.k,
                        sys.residual_by_region(coeffs), 0.0, sys.condition_estimate(),
                        0.0, 0.0, True, **meta)
    res = morozov_select(sys, delta_rel * b_norm)
    return Solution(res.coeffs, res.alpha_reg, sys.a_prime, cfg.k,
                    sys.residual_by_region(res.coeffs), res.coeffs.l2_norm(sys.a_prime),
                    sys.condition_estimate(), res.discrepancy, res.delta, res.converged, **meta)


def solve_control_problem(config) -> Solution:
    """Validate, assemble and solve an experiment configuration.

    ``config`` is an :class:`~helmholtz_control.config.ExperimentConfig`
    (anything exposing ``source``, ``regions``, ``propagator``,
    ``morozov_delta`` and ``build_controls()``).
    """
    check_configuration(config.source, [r.region for r in config.regions])
    sys = assemble(config.build_controls(), config.propagator)
    return solve_system(sys, config.propagator, config.morozov_delta)
