# tests/test_estimator.py

import numpy as np
import pytest

from backend.errors import DomainError, NumericalError
from backend.estimator import (
    WeightVector,
    build_kernel_matrices,
    effective_discount,
    estimate_forward,
    estimate_on_grid,
    evaluate,
    grid_midpoints,
    l2mu_error,
    make_kstep_weights,
    make_td_lambda_weights,
    solve_linear_system,
    solve_lstd,
    solve_lstd_features,
    td_lambda_discount,
    td_lambda_limit_discount,
    transition_windows,
)
from backend.mrp import sample_episodes, sample_iid_pairs


def test_weight_vector_validation():
    with pytest.raises(DomainError):
        WeightVector(np.array([]))
    with pytest.raises(DomainError):
        WeightVector(np.array([0.7, 0.7]))
    with pytest.raises(DomainError):
        WeightVector(np.array([1.5, -0.5]))
    assert WeightVector(np.array([0.25, 0.75])).label == "K=2"


def test_kstep_weights_discount():
    w = make_kstep_weights(5)
    np.testing.assert_array_equal(w.weights, [0, 0, 0, 0, 1])
    assert effective_discount(w, 0.9) == pytest.approx(0.9 ** 5)
    np.testing.assert_array_equal(w.tail_sums(), [1, 1, 1, 1, 1, 0])
    with pytest.raises(DomainError):
        make_kstep_weights(0)


@pytest.mark.parametrize("K, lam", [(1, 0.5), (4, 0.3), (10, 0.9)])
def test_td_lambda_discount_closed_form(K, lam):
    w = make_td_lambda_weights(K, lam)
    assert w.weights.sum() == pytest.approx(1.0)
    assert w.effective_discount(0.9) == pytest.approx(td_lambda_discount(K, lam, 0.9), rel=1e-12)
    assert w.effective_discount(0.9) >= td_lambda_limit_discount(lam, 0.9) - 1e-12


def test_td_lambda_rejects_lambda_one():
    with pytest.raises(DomainError):
        make_td_lambda_weights(3, 1.0)


def test_return_coefficients_match_manual_sum():
    gamma = 0.8
    w = make_td_lambda_weights(3, 0.5)
    # sum_k w_k sum_{l<=k} gamma^l r_l
    manual = np.zeros(3)
    for k in range(1, 4):
        for ell in range(1, k + 1):
            manual[ell - 1] += w.weights[k - 1] * gamma ** ell
    np.testing.assert_allclose(w.return_coefficients(gamma), manual)


def test_transition_windows_respect_episodes(fast_mrp):
    data = sample_episodes(fast_mrp, 12, 4, seed=0)
    anchors, ahead = transition_windows(data, 2)
    np.testing.assert_array_equal(anchors, [0, 1, 4, 5, 8, 9])
    np.testing.assert_array_equal(ahead[:, -1], anchors + 2)
    with pytest.raises(DomainError):
        transition_windows(data, 4)
    pairs = sample_iid_pairs(fast_mrp, 5, seed=0)
    with pytest.raises(DomainError):
        transition_windows(pairs, 2)


def test_kernel_path_matches_feature_path(path_data, finite_spec):
    w = make_td_lambda_weights(3, 0.5)
    kernel = solve_lstd(build_kernel_matrices(path_data, finite_spec, w, 0.9), ridge=1e-3)
    features = solve_lstd_features(path_data, finite_spec, w, 0.9, ridge=1e-3)
    assert kernel.method == "forward-kernel"
    assert features.method == "forward-features"
    grid = grid_midpoints(64)
    np.testing.assert_allclose(evaluate(kernel, grid), evaluate(features, grid), atol=1e-8)
    np.testing.assert_allclose(evaluate(kernel, grid, kernel_form=True), evaluate(features, grid), atol=1e-8)


@pytest.mark.parametrize("seed", range(50))
def test_kernel_and_feature_paths_agree_on_random_instances(seed, random_instance, relative_l2):
    data, spec, w, gamma, ridge = random_instance(seed, max_n=200)
    kernel = estimate_forward(data, spec, w, gamma, ridge, path="kernel")
    features = estimate_forward(data, spec, w, gamma, ridge, path="features")
    grid = grid_midpoints(max(64, spec.grid_size))
    # mu Lebesgue: norma L2(mu) = norma Euclid pada titik tengah grid seragam
    assert relative_l2(evaluate(kernel, grid, kernel_form=True), evaluate(features, grid)) < 1e-8


def test_estimate_forward_paths(path_data, finite_spec, one_step):
    auto = estimate_forward(path_data, finite_spec, one_step, 0.9, 1e-3)
    assert auto.method == "forward-features"
    kernel = estimate_forward(path_data, finite_spec, one_step, 0.9, 1e-3, path="kernel")
    np.testing.assert_allclose(estimate_on_grid(auto, 16), estimate_on_grid(kernel, 16), atol=1e-8)
    with pytest.raises(DomainError):
        estimate_forward(path_data, finite_spec, one_step, 0.9, 1e-3, path="dense")
    with pytest.raises(DomainError):
        estimate_forward(path_data, finite_spec, one_step, 0.9, 0.0)


def test_feature_form_rejects_kernel_evaluation(path_data, finite_spec, one_step):
    estimate = solve_lstd_features(path_data, finite_spec, one_step, 0.9, 1e-3)
    with pytest.raises(DomainError):
        evaluate(estimate, 0.3, kernel_form=True)
    assert np.isscalar(evaluate(estimate, 0.3)) or np.ndim(evaluate(estimate, 0.3)) == 0


def test_solve_linear_system_detects_singular_matrix():
    with pytest.raises(NumericalError) as excinfo:
        solve_linear_system(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    assert "condition" in excinfo.value.diagnostics or "error" in excinfo.value.diagnostics


def test_l2mu_error():
    reference = np.array([1.0, 2.0, 3.0, 4.0])
    weights = np.full(4, 0.25)
    assert l2mu_error(reference, reference, weights) == 0.0
    assert l2mu_error(reference + 1.0, reference, weights) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        l2mu_error(reference, reference, np.full(3, 1 / 3))
