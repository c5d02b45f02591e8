import csv

import numpy as np
import pytest
from dataclasses import replace

from conftest import small_two_region
from helmholtz_control.analysis import (
    SWEEP_COLUMNS,
    NoiseSpec,
    SweepSpec,
    compute_metrics,
    db_contrast,
    default_sweep_values,
    region_errors,
    run_sweep,
    stability_from_system,
    stability_measure,
    uniform_noise,
    write_sweep_csv,
)
from helmholtz_control.geometry import GeometryError
from helmholtz_control.propagator import DensityCoefficients
from helmholtz_control.solver import SolverError, assemble, solve_control_problem, solve_system


def test_target_against_itself_is_zero(small_config):
    controls = small_config.build_controls()
    fields = [c.target.evaluate(c.cloud) for c in controls]
    sol = solve_control_problem(small_config)
    m = compute_metrics(sol, controls, small_config.propagator, fields)
    assert m.rel_l2 == 0 and m.rel_sup == 0 and m.abs_l2 == 0 and m.abs_sup == 0


def test_zero_target_reports_absolute(small_config):
    c = small_config.build_controls()[1]
    e = region_errors(None, c, small_config.propagator, np.full(len(c.cloud), 2.0 + 0j))
    assert not e.relative and np.isnan(e.rel_sup)
    assert e.abs_sup == pytest.approx(2.0)
    assert e.abs_l2 == pytest.approx(2.0 * np.sqrt(c.cloud.area))


def test_db_contrast():
    assert db_contrast(1.0, 1e-3) == pytest.approx(60.0)
    assert db_contrast(1.0, 0.0) == np.inf
    for s in (3.0, 1e-4 * np.exp(0.7j)):
        assert db_contrast(abs(s) * 2.0, abs(s) * 0.01) == pytest.approx(db_contrast(2.0, 0.01))


def test_metrics_contrast_scale_invariant(small_config):
    sol = solve_control_problem(small_config)
    controls = small_config.build_controls()
    m1 = compute_metrics(sol, controls, small_config.propagator)
    scaled = replace(sol, coeffs=DensityCoefficients(sol.coeffs.L, (2 - 3j) * sol.coeffs.alpha))
    m2 = compute_metrics(scaled, controls, small_config.propagator)
    assert m2.db_contrast == pytest.approx(m1.db_contrast, rel=1e-12)
    assert m1.db_contrast > 20


def test_noise_statistics():
    b = np.array([1.0, -4.0j, 2.0])
    n = uniform_noise(b, NoiseSpec(0.5, seed=3))
    assert np.all(np.abs(n.real) <= 2.0) and np.all(np.abs(n.imag) <= 2.0)
    np.testing.assert_array_equal(n, uniform_noise(b, NoiseSpec(0.5, seed=3)))
    big = uniform_noise(np.ones(200_000), NoiseSpec(1.0, seed=0))
    assert abs(big.real.mean()) < 0.01 and big.real.var() == pytest.approx(1 / 3, rel=0.02)
    with pytest.raises(ValueError):
        NoiseSpec(-1.0)


def test_stability(small_config):
    assert stability_measure(small_config, NoiseSpec(0.0, 0)) == 0.0
    s1 = stability_measure(small_config, NoiseSpec(1e-3, 1))
    s2 = stability_measure(small_config, NoiseSpec(1e-3, 2))
    assert np.isfinite(s1) and np.isfinite(s2) and s1 != s2
    assert stability_measure(small_config, NoiseSpec(1e-3, 1)) == s1


def test_stability_phase_equivariant(small_config):
    cfg = small_config.propagator
    sys_ = assemble(small_config.build_controls(), cfg)
    noise = uniform_noise(sys_.b, NoiseSpec(1e-3, 4))
    s0 = stability_from_system(sys_, noise, cfg)
    rot = np.exp(1.3j)
    s1 = stability_from_system(sys_.with_rhs(rot * sys_.b), rot * noise, cfg)
    assert s1 == pytest.approx(s0, rel=1e-8)


def test_stability_zero_base_rejected():
    cfg = small_two_region(target_dir=(1.0, 0.0, 0.0))
    cfg = replace(cfg, regions=tuple(replace(r, target=r.target.at_wavenumber(10, 0.0))
                                     for r in cfg.regions))
    with pytest.raises(SolverError):
        stability_measure(cfg, NoiseSpec(1e-3, 0))


def test_single_point_sweep_and_csv(small_config, tmp_path):
    spec = SweepSpec("rotation", (0.5,), (4, 8))
    rows = run_sweep(spec, small_config)
    assert len(rows) == 2 and [r.L for r in rows] == [4, 8]
    assert all(r.status in ("ok", "morozov_floor") for r in rows)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(rows, path)
    with open(path) as fh:
        recs = list(csv.DictReader(fh))
    assert tuple(recs[0].keys()) == SWEEP_COLUMNS
    assert float(recs[1]["param_value"]) == 0.5


def test_sweep_validation(small_config):
    with pytest.raises(ValueError):
        SweepSpec("spin", (0.0,))
    with pytest.raises(ValueError):
        SweepSpec("distance", (0.1, 0.0))
    with pytest.raises(GeometryError):
        run_sweep(SweepSpec("both_radii", (-0.005,), (4,)), small_config)
    assert len(default_sweep_values("outer_radius")) == 20
    assert default_sweep_values("rotation")[-1] == pytest.approx(np.pi)


def test_sweep_edits_expected_region(small_config):
    assert SweepSpec("rotation", (0.0,)).target_index(small_config) == 1
    assert SweepSpec("distance", (0.0,)).target_index(small_config) == 0
    rows = run_sweep(SweepSpec("outer_radius", (0.0, 0.01), (4,)), small_config, with_stability=False)
    assert all(np.isnan(r.stability) for r in rows)
    assert rows[0].metrics.coeff_norm != rows[1].metrics.coeff_norm


def test_sweep_determinism(small_config):
    spec = SweepSpec("distance", (0.0, 0.02), (4,))
    a = [r.as_record() for r in run_sweep(spec, small_config)]
    b = [r.as_record() for r in run_sweep(spec, small_config)]
    assert repr(a) == repr(b)


def test_solver_and_metrics_consistent(small_config):
    cfg = small_config.propagator
    sys_ = assemble(small_config.build_controls(), cfg)
    sol = solve_system(sys_, cfg, small_config.morozov_delta)
    assert sol.residual_by_region["D1"] >= 0
    total = np.sqrt(sum(v**2 for v in sol.residual_by_region.values()))
    assert total == pytest.approx(sys_.residual(sol.coeffs), rel=1e-12)
