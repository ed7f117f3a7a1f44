# tests/test_oracle.py

import numpy as np
import pytest

from backend.errors import DomainError
from backend.estimator import make_kstep_weights, make_td_lambda_weights
from backend.oracle import (
    approximation_noise,
    bellman_apply,
    build_oracle,
    check_sigma_bounds,
    contraction_ratio,
    error_decomposition,
    fixed_point_residual,
    noise_report,
    population_operators,
    project,
    projected_fixed_point,
    value_function,
    weighted_bellman,
)

SCHEMES = [make_kstep_weights(1), make_kstep_weights(5), make_td_lambda_weights(10, 0.5)]


def test_oracle_grid_is_fine_enough(fast_mrp, exp_oracle, exp_spec):
    assert exp_oracle.grid.size >= max(64, exp_spec.grid_size)
    assert exp_oracle.features.shape == (exp_oracle.grid.size, exp_spec.truncation)
    with pytest.raises(DomainError):
        build_oracle(fast_mrp, exp_spec, grid_size=4)


def test_value_function_is_bellman_fixed_point(exp_oracle):
    grid = exp_oracle.grid
    value = value_function(grid)
    for w in SCHEMES:
        assert np.max(np.abs(weighted_bellman(grid, value, w) - value)) < 1e-10
    np.testing.assert_allclose(bellman_apply(grid, value, 3), value, atol=1e-10)
    with pytest.raises(DomainError):
        bellman_apply(grid, value, 0)


@pytest.mark.parametrize("w", SCHEMES)
def test_projected_fixed_point_residual(exp_oracle, w):
    fixed = projected_fixed_point(exp_oracle, w)
    assert fixed_point_residual(exp_oracle, w, fixed.values) < 1e-9
    operators = population_operators(exp_oracle, w)
    grid = exp_oracle.grid
    rhs = exp_oracle.features.T @ (grid.weights * (weighted_bellman(grid, grid.reward, w) - grid.reward))
    np.testing.assert_allclose(operators.forward @ fixed.coordinates, rhs, atol=1e-10)


@pytest.mark.parametrize("w", SCHEMES)
def test_weighted_bellman_contracts(exp_oracle, w):
    rng = np.random.default_rng(0)
    gamma_bar = w.effective_discount(exp_oracle.gamma)
    for _ in range(5):
        f, g = rng.normal(size=(2, exp_oracle.grid.size))
        assert contraction_ratio(exp_oracle.grid, w, f, g) <= gamma_bar + 1e-12


def test_projection_is_idempotent(exp_oracle):
    rng = np.random.default_rng(1)
    f = rng.normal(size=exp_oracle.grid.size)
    once, coordinates = project(exp_oracle, f)
    twice, _ = project(exp_oracle, once)
    np.testing.assert_allclose(once, twice, atol=1e-10)
    np.testing.assert_allclose(once, exp_oracle.features @ coordinates, atol=1e-12)


def test_error_decomposition_is_pythagorean(exp_oracle):
    fixed = projected_fixed_point(exp_oracle, make_kstep_weights(1))
    value = value_function(exp_oracle.grid)
    total, inside, perp = error_decomposition(exp_oracle, fixed.values, value)
    assert total == pytest.approx(inside + perp, rel=1e-9, abs=1e-12)


def test_noise_report_quantities(exp_oracle):
    w = make_kstep_weights(5)
    report = noise_report(exp_oracle, w)
    assert report.gamma_bar == pytest.approx(0.9 ** 5)
    assert report.effective_horizon == pytest.approx(1.0 / (1.0 - 0.9 ** 5))
    assert report.fixed_point_residual < 1e-9
    assert report.sigma_value > 0.0
    assert report.zeta0 == pytest.approx(report.effective_horizon * (report.sigma_m + report.sigma_a))
    scalars = report.scalars()
    assert "theta_star" not in scalars
    assert scalars["horizon"] == pytest.approx(10.0)


def test_episode_length_caps_approximation_noise():
    uncapped = approximation_noise(0.2, 0.5, mixing_time=400.0)
    capped = approximation_noise(0.2, 0.5, mixing_time=400.0, episode_length=4)
    assert capped == pytest.approx(2.0 * 0.2 * 2.0)
    assert capped < uncapped
    assert approximation_noise(0.0, 0.0, mixing_time=10.0) == 0.0


def test_sigma_bound_checks(exp_oracle):
    w = make_kstep_weights(1)
    report = noise_report(exp_oracle, w)
    checks = {check.name: check for check in check_sigma_bounds(report, 0.9, report.gamma_bar)}
    assert set(checks) == {"sigma_m", "bellman_residual", "fixed_point_gap", "perp_vs_variance"}
    assert checks["fixed_point_gap"].holds
    # tau* = 2 <= H = 10
    assert checks["perp_vs_variance"].applicable
