"""Command-line driver: ``helmholtz-control <command> --config FILE``.

Commands
--------
solve           one regularised solve; solution.json, metrics.csv, field_<region>.csv
sweep           geometric sensitivity sweep; sweep.csv
synthesize      multi-frequency solves, time-averaged errors and snapshots
boundary-input  field (and optionally normal velocity) on a physical source sphere
validate        parse the configuration and check the geometry

Exit status is 0 on success, 2 for configuration or validation problems and
3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    SWEEP_KINDS,
    SweepSpec,
    compute_metrics,
    default_sweep_values,
    region_errors,
    run_sweep,
    stability_from_system,
    uniform_noise,
    write_sweep_csv,
)
from .config import (
    BUNDLED_CONFIGS,
    ConfigError,
    ExperimentConfig,
    bundled_config_path,
    load_config,
    parse_number,
)
from .geometry import GeometryError, SectorRegion, cross_section_grid, discretize_sphere_boundary
from .propagator import dirichlet_trace, neumann_trace
from .solver import SolverError, assemble, solve_system
from .synthesis import SynthesisError, export_snapshots, fourier_solve, time_averaged_errors

__all__ = ["main", "build_parser", "parse_values", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC"]

log = logging.getLogger("helmholtz_control")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValueError):
    """Bad command-line values (mapped to exit status 2)."""


def parse_values(text: str) -> tuple[float, ...]:
    """``start:stop:n`` gives ``n`` equal steps (``n + 1`` values); otherwise a comma list."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"expected start:stop:n, got {text!r}")
            start, stop = parse_number(parts[0]), parse_number(parts[1])
            n = int(parts[2])
            if n < 1:
                raise UsageError("the step count n must be at least 1")
            return tuple(float(v) for v in np.linspace(start, stop, n + 1))
        vals = tuple(parse_number(v) for v in text.split(",") if v.strip())
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    if not vals:
        raise UsageError("no sweep values given")
    return vals


def _parse_orders(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        orders = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"orders must be integers, got {text!r}") from exc
    if not orders or min(orders) < 0:
        raise UsageError("orders must be non-negative integers")
    return orders


def _load(args) -> ExperimentConfig:
    path = Path(args.config)
    if not path.exists() and args.config in BUNDLED_CONFIGS:
        path = bundled_config_path(args.config)
    config = load_config(path)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _out_dir(args, config: ExperimentConfig) -> Path:
    out = Path(args.out if args.out is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single_order(args, config: ExperimentConfig) -> ExperimentConfig:
    orders = _parse_orders(args.orders)
    if orders is None:
        return config
    if len(orders) != 1:
        raise UsageError(f"{args.command} takes a single harmonic order")
    return replace(config, propagator=replace(config.propagator, L=orders[0]))


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _field_rows(points: np.ndarray, values: np.ndarray):
    for (x, y, z), u in zip(points, values):
        yield x, y, z, u.real, u.imag, abs(u)


def _solve(config: ExperimentConfig):
    config.validate()
    controls = config.build_controls()
    sys_ = assemble(controls, config.propagator)
    sol = solve_system(sys_, config.propagator, config.morozov_delta)
    return controls, sys_, sol


def cmd_solve(args) -> int:
    config = _single_order(args, _load(args))
    controls, sys_, sol = _solve(config)
    out = _out_dir(args, config)
    cfg = config.propagator

    fields = [sys_.A[sl] @ sol.coeffs.alpha for _, sl in sys_.blocks]
    metrics = compute_metrics(sol, controls, cfg, fields)
    stability = float("nan")
    if sol.coeff_norm > 0:
        stability = (0.0 if config.noise.epsilon == 0 else stability_from_system(
            sys_, uniform_noise(sys_.b, config.noise), cfg, config.morozov_delta, sol))

    payload = sol.to_dict()
    surface = discretize_sphere_boundary(config.source.a_phys, 200, 100, config.source.center)
    payload["physical_trace_l2"] = surface.l2_norm(dirichlet_trace(sol.coeffs, cfg, surface))
    payload["physical_radius"] = config.source.a_phys
    payload["config_name"] = config.name
    payload["seed"] = config.seed
    payload["format_version"] = __version__
    _write_json(out / "solution.json", payload)

    rows = []
    for c, f in zip(controls, fields):
        e = region_errors(sol, c, cfg, f)
        rows.append((c.name, "loud" if e.relative else "quiet", e.rel_l2, e.rel_sup, e.abs_l2,
                     e.abs_sup, e.field_sup, sol.coeff_norm, metrics.db_contrast, sol.alpha_reg,
                     stability))
    rows.append(("all", "summary", metrics.rel_l2, metrics.rel_sup, metrics.abs_l2, metrics.abs_sup,
                 float("nan"), metrics.coeff_norm, metrics.db_contrast, sol.alpha_reg, stability))
    _write_rows(out / "metrics.csv",
                ("region", "role", "rel_l2", "rel_sup", "abs_l2", "abs_sup", "field_sup",
                 "coeff_norm", "db_contrast", "alpha_reg", "stability"), rows)
    for c, f in zip(controls, fields):
        _write_rows(out / f"field_{c.name}.csv", ("x", "y", "z", "re_u", "im_u", "abs_u"),
                    _field_rows(c.cloud.points, f))

    if not sol.converged:
        log.warning("discrepancy target %.3e not reached; residual floor %.3e at alpha=%.1e",
                    sol.delta, sol.discrepancy, sol.alpha_reg)
    print(f"{config.name}: rel_sup={metrics.rel_sup:.3e} abs_sup={metrics.abs_sup:.3e} "
          f"|w|={metrics.coeff_norm:.3e} contrast={metrics.db_contrast:.1f} dB -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args)
    orders = _parse_orders(args.orders) or config.orders
    values = parse_values(args.values) if args.values else default_sweep_values(args.kind)
    try:
        spec = SweepSpec(args.kind, values, orders)
        spec.target_index(config)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = run_sweep(spec, config, with_stability=not args.no_stability)
    out = _out_dir(args, config)
    write_sweep_csv(rows, out / "sweep.csv")
    failed = sum(r.status.startswith("failed") for r in rows)
    print(f"{config.name}: {args.kind} sweep, {len(rows)} rows ({failed} failed) -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    config = _load(args)
    spec = config.synthesis_spec()
    orders = _parse_orders(args.orders)
    if orders is not None:
        if len(orders) != 1:
            raise UsageError("synthesize takes a single harmonic order")
        spec = replace(spec, L=orders[0])
    if args.n_time is not None:
        if args.n_time < 1:
            raise UsageError("--n-time must be positive")
        spec = replace(spec, n_time=args.n_time)
    if args.snapshots < 0:
        raise UsageError("--snapshots must be non-negative")
    config.validate()
    solutions = fourier_solve(spec, config)
    out = _out_dir(args, config)

    sol_dir = out / "solutions"
    sol_dir.mkdir(exist_ok=True)
    for i, sol in enumerate(solutions):
        _write_json(sol_dir / f"k_{i:02d}.json", sol.to_dict())

    loud = next(r for r in config.regions if not r.target.is_zero)
    quiet = next(r for r in config.regions if r.target.is_zero)
    errs = time_averaged_errors(solutions, spec, config)
    _write_rows(out / "frequencies.csv", ("k", "weight_re", "weight_im", "alpha_reg", "coeff_norm",
                                          "converged"),
                [(s.k, w.real, w.imag, s.alpha_reg, s.coeff_norm, int(s.converged))
                 for s, w in zip(solutions, spec.weights)])
    _write_rows(out / "synthesis_metrics.csv",
                ("loud_region", "quiet_region", "n_time", "rel_sup", "abs_sup", "loud_energy",
                 "quiet_energy"),
                [(loud.name, quiet.name, spec.n_time, errs.rel_sup, errs.abs_sup, errs.loud_energy,
                  errs.quiet_energy)])
    if args.snapshots > 0:
        if not isinstance(loud.region, SectorRegion):
            raise UsageError("snapshots need a bounded loud region")
        grid = cross_section_grid(loud.region, 100)
        export_snapshots(solutions, spec, config, grid, args.snapshots, out / "snapshots")
    print(f"{config.name}: {len(solutions)} frequencies, time-averaged rel={errs.rel_sup:.3e} "
          f"abs={errs.abs_sup:.3e} -> {out}")
    return EXIT_OK


def cmd_boundary_input(args) -> int:
    config = _single_order(args, _load(args))
    radius = config.source.a_phys if args.radius is None else args.radius
    if not radius > config.source.a_prime:
        raise UsageError(f"radius {radius:g} must exceed a_prime = {config.source.a_prime:g}")
    _, _, sol = _solve(config)
    surface = discretize_sphere_boundary(radius, args.n_azimuthal, args.n_polar, config.source.center)
    cfg = config.propagator
    u = dirichlet_trace(sol.coeffs, cfg, surface)
    header = ["x", "y", "z", "re_u", "im_u", "abs_u"]
    rows = list(_field_rows(surface.points, u))
    if args.neumann:
        vn = neumann_trace(sol.coeffs, cfg, config.medium, surface)
        header += ["re_vn", "im_vn", "abs_vn"]
        rows = [r + (v.real, v.imag, abs(v)) for r, v in zip(rows, vn)]
    out = _out_dir(args, config)
    _write_rows(out / "boundary_input.csv", header, rows)
    print(f"{config.name}: trace on |x|={radius:g}, L2 norm {surface.l2_norm(u):.3e} "
          f"-> {out / 'boundary_input.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load(args)
    config.validate()
    for r in config.regions:
        r.build()
    print(f"{config.name}: configuration ok ({len(config.regions)} regions)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="config file, or a bundled name: " + ", ".join(BUNDLED_CONFIGS))
    common.add_argument("--seed", type=int, default=None, help="override the noise seed")
    common.add_argument("--orders", default=None, help="comma-separated harmonic degrees")
    common.add_argument("--out", default=None, help="output directory (default from config)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="helmholtz-control", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="single regularised solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="geometric sensitivity sweep")
    p.add_argument("--kind", required=True, choices=SWEEP_KINDS)
    p.add_argument("--values", default=None, help="start:stop:n or comma list (pi allowed)")
    p.add_argument("--no-stability", action="store_true", help="skip the noisy re-solves")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synthesize", parents=[common], help="multi-frequency time synthesis")
    p.add_argument("--snapshots", type=int, default=16, help="snapshot files over one period")
    p.add_argument("--n-time", type=int, default=None, help="time samples for the error averages")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("boundary-input", parents=[common], help="trace on a physical source sphere")
    p.add_argument("--radius", type=float, default=None, help="sphere radius (default a_phys)")
    p.add_argument("--neumann", action="store_true", help="add normal-velocity columns")
    p.add_argument("--n-azimuthal", type=int, default=200)
    p.add_argument("--n-polar", type=int, default=100)
    p.set_defaults(func=cmd_boundary_input)

    p = sub.add_parser("validate", parents=[common], help="check a configuration")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SynthesisError as exc:
        print(f"error: numerical failure at k={exc.k:g}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SolverError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, GeometryError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
