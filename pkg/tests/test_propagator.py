import numpy as np
import pytest

from helmholtz_control.geometry import discretize_sphere_boundary
from helmholtz_control.propagator import (
    DensityCoefficients,
    MediumParams,
    PropagatorConfig,
    dirichlet_trace,
    eval_field,
    eval_field_quadrature,
    mode_radial_factor,
    moment_matrix,
    moment_row_quadrature,
    neumann_trace,
    radial_factors,
)
from helmholtz_control.specfun import num_coefficients, sph_bessel_j_deriv, sph_hankel1


def random_coeffs(L, rng):
    n = num_coefficients(L)
    return DensityCoefficients(L, rng.normal(size=n) + 1j * rng.normal(size=n))


def random_direction(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_config_validation():
    with pytest.raises(ValueError):
        PropagatorConfig(k=0)
    with pytest.raises(ValueError):
        PropagatorConfig(a_prime=-1)
    with pytest.raises(ValueError):
        PropagatorConfig(eta1=0, eta2=0)
    with pytest.raises(ValueError):
        PropagatorConfig(L=-1)
    with pytest.raises(ValueError):
        MediumParams(rho=0)
    with pytest.raises(ValueError):
        DensityCoefficients(2, np.zeros(8))


def test_zero_coefficients_give_zero_field():
    cfg = PropagatorConfig(L=5)
    pts = np.array([[0.02, 0, 0], [0, 1, 0], [3, 4, 5]])
    assert np.all(eval_field(DensityCoefficients.zeros(5), cfg, pts) == 0)


def test_monopole_closed_form():
    cfg = PropagatorConfig(k=10, a_prime=0.01, eta1=1, eta2=0, L=0)
    x = np.array([[0.0, 0.03, 0.04]])
    ka = cfg.k * cfg.a_prime
    expected = 1j * cfg.k**2 * cfg.a_prime**2 * sph_bessel_j_deriv(0, ka) * sph_hankel1(0, cfg.k * 0.05)
    u = eval_field(DensityCoefficients(0, [1.0]), cfg, x)[0]
    assert u == pytest.approx(expected / np.sqrt(4 * np.pi), rel=1e-13)


def test_l0_factor_against_quadrature():
    cfg = PropagatorConfig(k=10, a_prime=0.01, eta1=1, eta2=0, L=0)
    x = np.array([0.011, 0.0, 0.0])
    quad = moment_row_quadrature(cfg, x, n_quad=64)[0] * np.sqrt(4 * np.pi)
    assert mode_radial_factor(cfg, 0, 0.011) == pytest.approx(quad, rel=1e-8)


def test_factor_decays():
    cfg = PropagatorConfig(L=30)
    assert np.all(np.abs(radial_factors(cfg, 20.0)) < np.abs(radial_factors(cfg, 10.0)))


def test_interior_points_rejected():
    cfg = PropagatorConfig(L=2)
    with pytest.raises(ValueError):
        eval_field(DensityCoefficients.zeros(2), cfg, np.array([[0.005, 0, 0]]))
    with pytest.raises(ValueError):
        mode_radial_factor(cfg, 0, 0.01)
    with pytest.raises(ValueError):
        mode_radial_factor(cfg, 3, 0.1)
    with pytest.raises(ValueError):
        moment_row_quadrature(PropagatorConfig(L=10), np.array([1.0, 0, 0]), n_quad=10)


def test_linearity():
    rng = np.random.default_rng(0)
    cfg = PropagatorConfig(L=8)
    a, b = random_coeffs(8, rng), random_coeffs(8, rng)
    pts = 0.02 + rng.uniform(0, 1, (50, 3))
    lhs = eval_field(DensityCoefficients(8, a.alpha + b.alpha), cfg, pts)
    rhs = eval_field(a, cfg, pts) + eval_field(b, cfg, pts)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=0)


@pytest.mark.parametrize("eta", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.3, -2.0)])
def test_moment_rows_match_quadrature(eta):
    cfg = PropagatorConfig(k=10, a_prime=0.01, eta1=eta[0], eta2=eta[1], L=12)
    rng = np.random.default_rng(7)
    for r in (0.011, 0.1, 10.0):
        x = r * random_direction(rng, 1)[0]
        fast = moment_matrix(cfg, x[None, :])[0]
        slow = moment_row_quadrature(cfg, x, n_quad=64)
        assert np.max(np.abs(fast - slow)) <= 1e-9 * np.max(np.abs(fast))


def test_helmholtz_residual():
    rng = np.random.default_rng(2)
    cfg = PropagatorConfig(k=10, L=6)
    c = random_coeffs(6, rng)
    x0 = np.array([0.4, -0.2, 0.3])
    h = 2e-4
    stencil = [x0]
    for ax in range(3):
        for s in (1, -1):
            e = np.zeros(3)
            e[ax] = s * h
            stencil.append(x0 + e)
    u = eval_field(c, cfg, np.array(stencil))
    lap = (u[1:].sum() - 6 * u[0]) / h**2
    assert abs(lap + cfg.k**2 * u[0]) < 1e-5 * cfg.k**2 * abs(u[0])


def test_radial_derivative_finite_difference():
    cfg = PropagatorConfig(L=10)
    r, h = 0.02, 1e-7
    fd = (radial_factors(cfg, r + h) - radial_factors(cfg, r - h)) / (2 * h)
    np.testing.assert_allclose(radial_factors(cfg, r, derivative=True), fd, rtol=1e-6)


def test_traces():
    rng = np.random.default_rng(4)
    cfg = PropagatorConfig(L=5)
    med = MediumParams()
    c = random_coeffs(5, rng)
    surf = discretize_sphere_boundary(0.0105, 20, 10)
    np.testing.assert_allclose(dirichlet_trace(c, cfg, surf), eval_field(c, cfg, surf))
    vn = neumann_trace(c, cfg, med, surf)
    h = 1e-8
    outer = eval_field(c, cfg, surf.points * (1 + h / 0.0105))
    inner = eval_field(c, cfg, surf.points * (1 - h / 0.0105))
    expected = -1j / (med.rho * med.c * cfg.k) * (outer - inner) / (2 * h)
    np.testing.assert_allclose(vn, expected, rtol=1e-5)


def test_density_values():
    c = DensityCoefficients(1, [2.0, 0, 0, 0])
    assert c.density(0.2, 0.3) == pytest.approx(2 / np.sqrt(4 * np.pi))
    assert c.l2_norm(0.01) == pytest.approx(0.02)
    assert c.truncate(0).alpha.shape == (1,)


def test_oracle_equivalence_small():
    rng = np.random.default_rng(11)
    cfg = PropagatorConfig(k=10, a_prime=0.01, L=15)
    for r in (0.011, 0.1, 10.0):
        c = random_coeffs(15, rng)
        x = r * random_direction(rng, 1)[0]
        fast = eval_field(c, cfg, x[None, :])[0]
        slow = eval_field_quadrature(c, cfg, x, n_quad=64)
        assert abs(fast - slow) <= 1e-8 * abs(slow)
