"""Time-periodic fields built from single-frequency solves.

Each wavenumber ``k_l`` is solved independently for a unit plane wave in
the loud region(s) and silence elsewhere; the time signal at angular time
``tau = c t`` is ``Re sum_l weight_l u_l(x) exp(-1j k_l tau)``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import (
    ExteriorSphereRegion,
    check_configuration,
    cross_section_grid,
    discretize_sphere_boundary,
)
from .propagator import MediumParams, eval_field
from .solver import Solution, SolverError, TargetField, assemble, solve_system

__all__ = [
    "SynthesisSpec",
    "SynthesisError",
    "TimeSnapshot",
    "TimeAveragedErrors",
    "fourier_solve",
    "frequency_fields",
    "target_fields",
    "time_field",
    "target_time_field",
    "time_averaged_errors",
    "export_snapshots",
]

log = logging.getLogger(__name__)


class SynthesisError(SolverError):
    """A single-frequency solve failed; ``k`` names the offending wavenumber."""

    def __init__(self, k: float, cause: Exception):
        super().__init__(f"solve failed at k={k:g}: {cause}")
        self.k = k


def _default_ells():
    return tuple(range(10, 31))


@dataclass(frozen=True)
class SynthesisSpec:
    """Wavenumbers, their complex weights and time sampling of one period."""

    wavenumbers: tuple[float, ...] = tuple(l / 2 for l in _default_ells())
    weights: tuple[complex, ...] = tuple(2 / l for l in _default_ells())
    L: int = 30
    n_time: int = 2000
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    medium: MediumParams = field(default_factory=MediumParams)

    def __post_init__(self):
        ks = tuple(float(k) for k in self.wavenumbers)
        ws = tuple(complex(w) for w in self.weights)
        if not ks or len(ks) != len(ws):
            raise ValueError("need one weight per wavenumber")
        if min(ks) <= 0 or len(set(ks)) != len(ks):
            raise ValueError("wavenumbers must be distinct and positive")
        if not all(np.isfinite(w) for w in ws):
            raise ValueError("weights must be finite")
        if self.n_time < 0:
            raise ValueError("n_time must be non-negative")
        object.__setattr__(self, "wavenumbers", ks)
        object.__setattr__(self, "weights", ws)

    @property
    def period(self) -> float:
        """Common period in ``tau`` of all components (``4 pi`` for half-integer k)."""
        fracs = [Fraction(k).limit_denominator(10_000) for k in self.wavenumbers]
        num = math.gcd(*[f.numerator for f in fracs])
        den = math.lcm(*[f.denominator for f in fracs])
        return 2 * np.pi / (num / den)

    def taus(self, n: int | None = None) -> np.ndarray:
        n = self.n_time if n is None else n
        return self.period * np.arange(n) / n


@dataclass(frozen=True)
class TimeSnapshot:
    tau: float
    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class TimeAveragedErrors:
    """Pointwise time averages over one period on the loud and quiet grids."""

    rel_error: np.ndarray
    abs_error: np.ndarray
    rel_sup: float
    abs_sup: float
    loud_energy: float
    quiet_energy: float


def _single_frequency_config(config, spec: SynthesisSpec, k: float):
    def retarget(t: TargetField) -> TargetField:
        return TargetField.zero() if t.is_zero else TargetField("plane_wave", spec.direction, 1.0, k)

    regions = tuple(replace(r, target=retarget(r.target)) for r in config.regions)
    prop = replace(config.propagator, k=k, L=spec.L)
    return replace(config, regions=regions, propagator=prop)


def fourier_solve(spec: SynthesisSpec, config) -> list[Solution]:
    """One Morozov solve per wavenumber on the shared geometry."""
    check_configuration(config.source, [r.region for r in config.regions])
    controls = None
    out = []
    for k in spec.wavenumbers:
        try:
            cfg_k = _single_frequency_config(config, spec, k)
            if controls is None:
                controls = cfg_k.build_controls()
            ctl_k = [replace(c, target=r.target) for c, r in zip(controls, cfg_k.regions)]
            sol = solve_system(assemble(ctl_k, cfg_k.propagator), cfg_k.propagator,
                               config.morozov_delta)
        except (SolverError, ValueError, FloatingPointError) as exc:
            raise SynthesisError(k, exc) from exc
        if not np.all(np.isfinite(sol.coeffs.alpha)):
            raise SynthesisError(k, SolverError("non-finite coefficients"))
        log.info("k=%g alpha=%.3e |w|=%.3e", k, sol.alpha_reg, sol.coeff_norm)
        out.append(sol)
    return out


def frequency_fields(solutions: Sequence[Solution], spec: SynthesisSpec, grid) -> np.ndarray:
    """Weighted complex fields ``weight_l u_l(x)``, shape ``(n_freq, n_points)``."""
    rows = []
    for sol, k, w in zip(solutions, spec.wavenumbers, spec.weights):
        if sol.k != k:
            raise ValueError(f"solution for k={sol.k:g} paired with k={k:g}")
        rows.append(w * eval_field(sol.coeffs, sol.propagator(), grid))
    return np.array(rows)


def target_fields(spec: SynthesisSpec, grid) -> np.ndarray:
    pts = np.asarray(getattr(grid, "points", grid), dtype=float).reshape(-1, 3)
    proj = pts @ np.asarray(spec.direction)
    return np.array([w * np.exp(1j * k * proj) for k, w in zip(spec.wavenumbers, spec.weights)])


def _evolve(fields: np.ndarray, ks, taus) -> np.ndarray:
    phases = np.exp(-1j * np.outer(np.atleast_1d(taus), ks))
    return (phases @ fields).real


def time_field(solutions: Sequence[Solution], spec: SynthesisSpec, grid, tau: float) -> np.ndarray:
    """Real generated field at angular time ``tau`` on ``grid``."""
    return _evolve(frequency_fields(solutions, spec, grid), spec.wavenumbers, tau)[0]


def target_time_field(spec: SynthesisSpec, grid, tau: float) -> np.ndarray:
    return _evolve(target_fields(spec, grid), spec.wavenumbers, tau)[0]


def _default_grid(region):
    if isinstance(region, ExteriorSphereRegion):
        return discretize_sphere_boundary(region.R, 200, 100).points
    return cross_section_grid(region, 100)


def time_averaged_errors(solutions: Sequence[Solution], spec: SynthesisSpec, config,
                         n_time: int | None = None, grids=None) -> TimeAveragedErrors:
    """Time-averaged error fields over one period.

    The loud grid error is ``|generated - target|`` divided by the largest
    target magnitude over all grid points and times; the quiet grid error is
    ``|generated|``.  Grids default to equatorial cross sections of the
    first loud and first quiet region.
    """
    loud = next(i for i, r in enumerate(config.regions) if not r.target.is_zero)
    quiet = next(i for i, r in enumerate(config.regions) if r.target.is_zero)
    if grids is None:
        grids = (_default_grid(config.regions[loud].region),
                 _default_grid(config.regions[quiet].region))
    taus = spec.taus(n_time)
    ks = spec.wavenumbers

    gen_l = _evolve(frequency_fields(solutions, spec, grids[0]), ks, taus)
    tgt_l = _evolve(target_fields(spec, grids[0]), ks, taus)
    gen_q = _evolve(frequency_fields(solutions, spec, grids[1]), ks, taus)
    scale = float(np.max(np.abs(tgt_l)))
    rel = np.mean(np.abs(gen_l - tgt_l), axis=0) / scale if scale > 0 else np.zeros(gen_l.shape[1])
    absq = np.mean(np.abs(gen_q), axis=0)
    return TimeAveragedErrors(
        rel_error=rel,
        abs_error=absq,
        rel_sup=float(np.max(rel)) if rel.size else 0.0,
        abs_sup=float(np.max(absq)) if absq.size else 0.0,
        loud_energy=float(np.mean(gen_l**2)),
        quiet_energy=float(np.mean(gen_q**2)),
    )


def export_snapshots(solutions: Sequence[Solution], spec: SynthesisSpec, config, grid,
                     n_snapshots: int, out_dir) -> list[Path]:
    """Write ``snapshot_NNNN.csv`` files over one period plus ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    taus = spec.taus(n_snapshots) if n_snapshots else np.array([])
    gen = _evolve(frequency_fields(solutions, spec, grid), spec.wavenumbers, taus)
    tgt = _evolve(target_fields(spec, grid), spec.wavenumbers, taus)
    paths = []
    for i, tau in enumerate(taus):
        p = out_dir / f"snapshot_{i:04d}.csv"
        with open(p, "w") as fh:
            fh.write("x,y,z,u_generated,u_target\n")
            for (x, y, z), g, t in zip(grid, gen[i], tgt[i]):
                fh.write(f"{x!r},{y!r},{z!r},{g!r},{t!r}\n")
        paths.append(p)
    manifest = {
        "tau": [float(t) for t in taus],
        "period": spec.period,
        "time_parameter": "tau = c * t",
        "files": [p.name for p in paths],
        "grid": {"kind": "equatorial cross section", "n_points": int(len(grid))},
        "wavenumbers": list(spec.wavenumbers),
        "weights": {"re": [w.real for w in spec.weights], "im": [w.imag for w in spec.weights]},
        "L": spec.L,
        "medium": {"rho": spec.medium.rho, "c": spec.medium.c},
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return paths
