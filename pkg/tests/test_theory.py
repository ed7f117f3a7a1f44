# tests/test_theory.py

import math

import numpy as np
import pytest

from backend.errors import DomainError, NumericalError
from backend.estimator import make_kstep_weights
from backend.oracle import noise_report
from backend.theory import (
    auto_ridge,
    bracket_upper,
    build_theory_report,
    critical_radius,
    evaluate_bounds,
    finite_rank_burn_in,
    finite_rank_radius,
    kernel_complexity,
    predicted_slope,
    recommend_lookahead,
    sample_size_condition,
    select_ridge,
    statistical_dimension,
    ub_alpha,
    ub_linear,
)


def test_kernel_complexity_and_dimension():
    eigs = np.array([1.0, 0.25, 0.01])
    assert kernel_complexity(eigs, 1.0) == pytest.approx(math.sqrt(1.0 + 0.25 + 0.01))
    assert kernel_complexity(eigs, 0.1) == pytest.approx(math.sqrt(3.0))
    assert statistical_dimension(eigs, 0.5) == 2
    with pytest.raises(DomainError):
        kernel_complexity(eigs, 0.0)


@pytest.mark.parametrize("d", [1, 2, 4, 8, 16])
@pytest.mark.parametrize("n", [10**3, 10**4, 10**5, 10**6, 10**7])
def test_critical_radius_matches_finite_rank_closed_form(d, n):
    # mu_j = 1 >= delta^2 sehingga C(delta) = sqrt(d)
    delta = critical_radius(np.ones(d), n, 4.0, 2.0, 1.0)
    assert delta <= 1.0
    assert delta == pytest.approx(finite_rank_radius(d, n, 4.0, 2.0, 1.0), rel=1e-8)


def test_bracket_upper_extends_default_bracket(finite_spec):
    assert bracket_upper(finite_spec, 10**6, 1.0, 1.0) == finite_spec.b
    n, radius, zeta = 1, 0.01, 100.0
    upper = bracket_upper(finite_spec, n, radius, zeta)
    assert upper > finite_spec.b
    with pytest.raises(NumericalError):
        critical_radius(finite_spec.eigenvalues, n, radius, finite_spec.kappa, zeta, finite_spec.b)
    delta = critical_radius(finite_spec.eigenvalues, n, radius, finite_spec.kappa, zeta, upper)
    slope = math.sqrt(n) * radius / (finite_spec.kappa * zeta)
    assert finite_spec.b < delta <= upper
    assert kernel_complexity(finite_spec.eigenvalues, delta) <= slope * delta


def test_critical_radius_satisfies_inequality():
    eigs = np.arange(1, 65, dtype=float) ** -1.2
    n, radius, kappa, zeta = 5000, 3.0, 2.0, 12.0
    delta = critical_radius(eigs, n, radius, kappa, zeta)
    slope = math.sqrt(n) * radius / (kappa * zeta)
    assert kernel_complexity(eigs, delta) <= slope * delta
    assert kernel_complexity(eigs, 0.99 * delta) > slope * 0.99 * delta


def test_critical_radius_errors():
    with pytest.raises(DomainError):
        critical_radius(np.ones(2), 10, 1.0, 2.0, 0.0)
    with pytest.raises(NumericalError):
        critical_radius(np.ones(4), 1, 1e-3, 2.0, 10.0, upper=1e-6)


def test_select_ridge_rules():
    assert select_ridge(0.2, 0.9, 1000) == pytest.approx(0.01 * 0.04 * 0.1)
    assert select_ridge(0.2, 0.9, 1000, rule="theorem", c0=2.0) == pytest.approx(2.0 * 0.04 * 0.1 * math.log(1000))
    with pytest.raises(DomainError):
        select_ridge(0.2, 0.9, 1000, rule="cv")


def test_predicted_slopes():
    assert predicted_slope("finite") == -1.0
    assert predicted_slope("exp") == -1.0
    assert predicted_slope("poly", 1.2) == pytest.approx(-6.0 / 11.0)
    assert predicted_slope("poly", 2.4) == pytest.approx(-12.0 / 17.0)
    with pytest.raises(DomainError):
        predicted_slope("poly", None)


def test_recommend_lookahead():
    assert recommend_lookahead(10.0, 400.0, "uniform_reward").K == 10
    assert recommend_lookahead(10.0, 2.0, "uniform_reward").K == 2
    advice = recommend_lookahead(100.0, 100.0, "mild_dependence")
    assert advice.K == 100
    assert advice.td_lambda == pytest.approx(0.99)
    assert recommend_lookahead(10.0, 6.0, "bounded_value").K == 4
    with pytest.raises(DomainError):
        recommend_lookahead(10.0, 6.0, "greedy")


def test_sample_size_conditions():
    check = sample_size_condition(R=1.0, delta=0.01, gamma_bar=0.9, zeta0=5.0, tau=10.0, K=2, n=1000)
    assert check.lhs == pytest.approx(1e-4)
    assert check.rhs == pytest.approx(0.1 * 25.0 / math.sqrt(12.0 * 1000))
    episodic = sample_size_condition(1.0, 0.01, 0.9, 5.0, 10.0, 2, 1000, episode_length=4)
    assert episodic.rhs > check.rhs
    burn_in = finite_rank_burn_in(n=10_000, tau=9.0, K=1, kappa=2.0, d=4, eff_horizon=10.0)
    assert burn_in.lhs == pytest.approx(160.0)
    assert not burn_in.holds


def test_theory_report_ridge_agrees_with_auto_ridge(fast_mrp, exp_spec, exp_oracle):
    w = make_kstep_weights(1)
    report = noise_report(exp_oracle, w)
    theory = build_theory_report(fast_mrp, exp_spec, w, 5000, report=report)
    assert theory.delta_n > 0.0
    assert theory.ridge == pytest.approx(auto_ridge(exp_spec, report, w, 5000))
    assert theory.ridge == pytest.approx(0.01 * theory.delta_n ** 2 * (1.0 - report.gamma_bar))
    assert theory.predicted_slope == -1.0
    assert "linear" in theory.bounds
    scalars = theory.scalars()
    assert "eigenvalues" not in scalars
    assert scalars["d_n"] == theory.d_n


def test_bound_formulas_scale_as_expected():
    base = ub_linear(1.0, 0.5, 2.0, 0.9, 10.0, 8, 1000)
    assert ub_linear(1.0, 0.5, 2.0, 0.9, 10.0, 16, 1000)["bound"] == pytest.approx(2.0 * base["bound"])
    assert ub_linear(1.0, 0.5, 2.0, 0.9, 20.0, 8, 1000)["eps_a"] == pytest.approx(2.0 * base["eps_a"])
    quiet = ub_alpha(1.0, 0.0, 2.0, 0.9, 10.0, 3.0, 0.6, 1000)
    assert quiet["eps_a"] == 0.0
    assert quiet["bound"] > 0.0


def test_evaluate_bounds_picks_kernel_form(exp_spec, exp_oracle):
    report = noise_report(exp_oracle, make_kstep_weights(1))
    bounds = evaluate_bounds(exp_spec, report, 0.9, 2.0, 1, 1.0, 5000)
    assert {"linear", "linear_simple", "uniform_reward", "bounded_value", "burn_in_required"} <= set(bounds)
    assert "alpha" not in bounds
    assert all(value >= 0.0 for value in bounds.values())
