"""Error metrics, stability under data noise and parameter sweeps."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geometry import (
    GeometryError,
    SectorRegion,
    check_configuration,
    grow_both_radii,
    grow_outer_radius,
    rotate_about_origin,
    shift_radially,
)
from .propagator import PropagatorConfig, eval_field
from .solver import Control, LinearSystem, Solution, SolverError, assemble, solve_system

__all__ = [
    "RegionErrors",
    "Metrics",
    "NoiseSpec",
    "SweepSpec",
    "SweepRow",
    "region_errors",
    "db_contrast",
    "compute_metrics",
    "uniform_noise",
    "stability_from_system",
    "stability_measure",
    "default_sweep_values",
    "run_sweep",
    "write_sweep_csv",
    "SWEEP_COLUMNS",
    "SWEEP_KINDS",
]

log = logging.getLogger(__name__)

SWEEP_KINDS = ("distance", "outer_radius", "both_radii", "rotation")
SWEEP_COLUMNS = ("param_value", "L", "rel_l2", "rel_sup", "abs_sup", "coeff_norm",
                 "db_contrast", "stability", "alpha_reg", "status")

_EDITS = {
    "distance": shift_radially,
    "outer_radius": grow_outer_radius,
    "both_radii": grow_both_radii,
    "rotation": rotate_about_origin,
}

# ranges of the sensitivity figures; distance/radius values are increments
_DEFAULT_RANGES = {
    "distance": (0.0, 0.28),
    "outer_radius": (0.0, 0.285),
    "both_radii": (0.0, 0.29),
    "rotation": (0.0, np.pi),
}


@dataclass(frozen=True)
class RegionErrors:
    """Mismatch between generated and prescribed field on one boundary cloud.

    Relative entries are NaN when the target vanishes (``relative`` is
    then False).
    """

    rel_l2: float
    rel_sup: float
    abs_l2: float
    abs_sup: float
    field_sup: float
    relative: bool


@dataclass(frozen=True)
class Metrics:
    """Headline numbers of one solve.

    ``rel_*`` come from the first region with a non-zero target, ``abs_*``
    from the first null region, ``db_contrast`` compares their field sups.
    """

    rel_l2: float
    rel_sup: float
    abs_l2: float
    abs_sup: float
    coeff_norm: float
    db_contrast: float


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform additive data noise of relative size ``epsilon``."""

    epsilon: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")


def region_errors(sol: Solution | None, control: Control, cfg: PropagatorConfig,
                  field=None) -> RegionErrors:
    """Errors on a control's boundary; pass ``field`` to skip re-evaluation."""
    if field is None:
        field = eval_field(sol.coeffs, cfg, control.cloud)
    target = control.target.evaluate(control.cloud)
    diff = field - target
    abs_l2 = control.cloud.l2_norm(diff)
    abs_sup = float(np.max(np.abs(diff)))
    t_l2, t_sup = control.cloud.l2_norm(target), float(np.max(np.abs(target)))
    relative = t_sup > 0
    rel_l2 = abs_l2 / t_l2 if relative else float("nan")
    rel_sup = abs_sup / t_sup if relative else float("nan")
    return RegionErrors(rel_l2, rel_sup, abs_l2, abs_sup, float(np.max(np.abs(field))), relative)


def db_contrast(loud_sup: float, quiet_sup: float) -> float:
    """``20 log10`` ratio of field maxima; inf for a perfectly silent region."""
    if quiet_sup == 0:
        return float("inf") if loud_sup > 0 else float("nan")
    return float(20 * np.log10(loud_sup / quiet_sup))


def compute_metrics(sol: Solution, controls: Sequence[Control], cfg: PropagatorConfig,
                    fields=None) -> Metrics:
    """Summarise a solve over its control regions."""
    if fields is None:
        fields = [eval_field(sol.coeffs, cfg, c.cloud) for c in controls]
    errs = [region_errors(sol, c, cfg, f) for c, f in zip(controls, fields)]
    loud = next((e for e in errs if e.relative), None)
    quiet = next((e for e in errs if not e.relative), None)
    nan = float("nan")
    contrast = db_contrast(loud.field_sup, quiet.field_sup) if loud and quiet else nan
    return Metrics(
        rel_l2=loud.rel_l2 if loud else nan,
        rel_sup=loud.rel_sup if loud else nan,
        abs_l2=quiet.abs_l2 if quiet else nan,
        abs_sup=quiet.abs_sup if quiet else nan,
        coeff_norm=sol.coeff_norm,
        db_contrast=contrast,
    )


def uniform_noise(b: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """Independent U[-eps, eps] on real and imaginary parts, scaled by max|b|."""
    rng = np.random.default_rng(noise.seed)
    scale = noise.epsilon * float(np.max(np.abs(b)))
    return scale * (rng.uniform(-1.0, 1.0, b.shape) + 1j * rng.uniform(-1.0, 1.0, b.shape))


def stability_from_system(sys: LinearSystem, noise_vector: np.ndarray, cfg: PropagatorConfig,
                          delta_rel: float = 1e-3, base: Solution | None = None) -> float:
    """Relative change of the density when ``noise_vector`` is added to the data."""
    if base is None:
        base = solve_system(sys, cfg, delta_rel)
    if base.coeff_norm == 0:
        raise SolverError("stability undefined for a zero base density")
    noisy = solve_system(sys.with_rhs(sys.b + noise_vector), cfg, delta_rel)
    return float(np.linalg.norm(base.coeffs.alpha - noisy.coeffs.alpha)
                 / np.linalg.norm(base.coeffs.alpha))


def stability_measure(config, noise: NoiseSpec | None = None) -> float:
    """Stability of an experiment configuration under seeded data noise."""
    noise = config.noise if noise is None else noise
    check_configuration(config.source, [r.region for r in config.regions])
    sys = assemble(config.build_controls(), config.propagator)
    if noise.epsilon == 0:
        return 0.0
    return stability_from_system(sys, uniform_noise(sys.b, noise), config.propagator,
                                 config.morozov_delta)


@dataclass(frozen=True)
class SweepSpec:
    """Which geometric parameter to vary, over which values, at which degrees."""

    kind: str
    values: tuple[float, ...]
    harmonic_orders: tuple[int, ...] = (15, 30)
    region_index: int | None = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        vals = tuple(float(v) for v in self.values)
        if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be non-empty and strictly increasing")
        object.__setattr__(self, "values", vals)
        orders = tuple(int(L) for L in self.harmonic_orders)
        if not orders or min(orders) < 0:
            raise ValueError("harmonic orders must be non-negative integers")
        object.__setattr__(self, "harmonic_orders", orders)

    def target_index(self, config) -> int:
        """Region edited by the sweep: primary sector, or the second one for rotations."""
        if self.region_index is not None:
            return self.region_index
        sectors = [i for i, r in enumerate(config.regions) if isinstance(r.region, SectorRegion)]
        want = 1 if self.kind == "rotation" else 0
        if len(sectors) <= want:
            raise ValueError(f"{self.kind} sweep needs at least {want + 1} sector region(s)")
        return sectors[want]


@dataclass(frozen=True)
class SweepRow:
    param_value: float
    L: int
    metrics: Metrics | None
    stability: float
    alpha_reg: float
    status: str

    def as_record(self) -> dict:
        m = self.metrics
        nan = float("nan")
        return {
            "param_value": self.param_value,
            "L": self.L,
            "rel_l2": m.rel_l2 if m else nan,
            "rel_sup": m.rel_sup if m else nan,
            "abs_sup": m.abs_sup if m else nan,
            "coeff_norm": m.coeff_norm if m else nan,
            "db_contrast": m.db_contrast if m else nan,
            "stability": self.stability,
            "alpha_reg": self.alpha_reg,
            "status": self.status,
        }


def default_sweep_values(kind: str, n: int = 20) -> tuple[float, ...]:
    lo, hi = _DEFAULT_RANGES[kind]
    return tuple(np.linspace(lo, hi, n))


def swept_config(config, spec: SweepSpec, value: float):
    """Copy of ``config`` with the swept region edited by ``value``."""
    idx = spec.target_index(config)
    regions = list(config.regions)
    entry = regions[idx]
    regions[idx] = replace(entry, region=_EDITS[spec.kind](entry.region, value))
    return replace(config, regions=tuple(regions))


def run_sweep(spec: SweepSpec, config, with_stability: bool = True) -> list[SweepRow]:
    """Solve at every ``(value, L)`` pair, in input order.

    The system is assembled once per value at the largest degree and
    truncated for smaller ones.  Failed solves become rows with a
    ``failed:`` status and NaN numbers.
    """
    configs = [swept_config(config, spec, v) for v in spec.values]
    for v, c in zip(spec.values, configs):
        try:
            check_configuration(c.source, [r.region for r in c.regions])
        except GeometryError as exc:
            raise GeometryError(f"{spec.kind}={v:g}: {exc}") from exc

    Lmax = max(spec.harmonic_orders)
    rows = []
    for v, c in zip(spec.values, configs):
        controls = c.build_controls()
        big_cfg = replace(c.propagator, L=Lmax)
        try:
            big = assemble(controls, big_cfg)
        except (SolverError, ValueError) as exc:
            rows += [SweepRow(v, L, None, float("nan"), float("nan"), f"failed: {exc}")
                     for L in spec.harmonic_orders]
            continue
        for L in spec.harmonic_orders:
            cfg = replace(c.propagator, L=L)
            sys = big if L == Lmax else big.truncate(L)
            try:
                sol = solve_system(sys, cfg, c.morozov_delta)
                fields = [sys.A[sl] @ sol.coeffs.alpha for _, sl in sys.blocks]
                metrics = compute_metrics(sol, controls, cfg, fields)
                stab = float("nan")
                if with_stability:
                    stab = (0.0 if c.noise.epsilon == 0 else stability_from_system(
                        sys, uniform_noise(sys.b, c.noise), cfg, c.morozov_delta, sol))
                status = "ok" if sol.converged else "morozov_floor"
                rows.append(SweepRow(v, L, metrics, stab, sol.alpha_reg, status))
            except SolverError as exc:
                log.warning("sweep %s=%g L=%d failed: %s", spec.kind, v, L, exc)
                rows.append(SweepRow(v, L, None, float("nan"), float("nan"), f"failed: {exc}"))
            del sys
        del big
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            rec = row.as_record()
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v)
                             for k, v in rec.items()})
