# tests/test_rkhs.py

import math

import numpy as np
import pytest

from backend.errors import DomainError
from backend.rkhs import (
    KernelSpec,
    choose_truncation,
    feature,
    feature_grid_size,
    feature_map,
    feature_table,
    gram_matrix,
    hilbert_norm,
    kernel_eval,
    make_kernel_spec,
    walsh,
    walsh_table,
)


def test_walsh_low_orders():
    assert walsh(0, 0.9) == 1
    assert walsh(1, 0.25) == 1
    assert walsh(1, 0.75) == -1
    assert [walsh(2, x) for x in (0.1, 0.3, 0.6, 0.9)] == [1, -1, 1, -1]


def test_walsh_rejects_out_of_range():
    with pytest.raises(DomainError):
        walsh(-1, 0.5)
    with pytest.raises(DomainError):
        walsh(1, 1.0)


def test_walsh_table_matches_scalar_evaluation():
    table = walsh_table(8, 8)
    midpoints = (np.arange(8) + 0.5) / 8
    expected = np.array([[walsh(j, x) for x in midpoints] for j in range(8)])
    np.testing.assert_array_equal(table, expected)


@pytest.mark.parametrize("num_features", [2, 4, 8])
@pytest.mark.parametrize("theta", [0.0, math.pi / 16, math.pi / 4])
def test_features_are_orthonormal_under_lebesgue(num_features, theta):
    table = feature_table(num_features, theta)
    gram = table @ table.T / table.shape[1]
    np.testing.assert_allclose(gram, np.eye(num_features), atol=1e-12)


def test_first_feature_is_constant_and_second_follows_angle():
    table = feature_table(2, 0.0, 4)
    np.testing.assert_array_equal(table[0], np.ones(4))
    np.testing.assert_array_equal(table[1], [1.0, 1.0, -1.0, -1.0])

    theta = math.pi / 4
    rotated = feature_table(2, theta, 4)[1]
    c, s = math.cos(theta), math.sin(theta)
    np.testing.assert_allclose(rotated, [c + math.sqrt(2) * s, c - math.sqrt(2) * s, -c, -c])


def test_scalar_feature_agrees_with_table():
    theta = 0.4
    table = feature_table(6, theta)
    grid = table.shape[1]
    for j in range(1, 7):
        for cell in range(grid):
            x = (cell + 0.5) / grid
            assert feature(j, x, theta) == pytest.approx(table[j - 1, cell], abs=1e-12)


def test_feature_grid_size_is_dyadic():
    assert feature_grid_size(1) == 4
    assert feature_grid_size(2) == 4
    assert feature_grid_size(8) == 16
    with pytest.raises(DomainError):
        feature_grid_size(0)


def test_choose_truncation():
    assert choose_truncation("exp") == 8
    assert choose_truncation("poly", 1.2) == 512
    assert choose_truncation("poly", 3.0) < 512
    with pytest.raises(DomainError):
        choose_truncation("poly", 1.0)


def test_make_kernel_spec_families():
    poly = make_kernel_spec("poly", truncation=16, exponent=1.2)
    np.testing.assert_allclose(poly.eigenvalues, np.arange(1, 17) ** -1.2)
    exp = make_kernel_spec("exp")
    assert exp.truncation == 8
    assert exp.eigenvalues[1] == pytest.approx(math.exp(-1.0))
    with pytest.raises(DomainError):
        make_kernel_spec("finite")
    with pytest.raises(DomainError):
        make_kernel_spec("gauss")


def test_kernel_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec(np.array([]))
    with pytest.raises(DomainError):
        KernelSpec(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        KernelSpec(np.array([0.5, 1.0]))


def test_gram_matrix_is_psd_and_matches_kernel_eval(finite_spec):
    rng = np.random.default_rng(3)
    xs = rng.random(12)
    gram = gram_matrix(finite_spec, xs)
    np.testing.assert_allclose(gram, gram.T)
    assert np.min(np.linalg.eigvalsh(gram)) > -1e-12
    assert gram[2, 5] == pytest.approx(kernel_eval(finite_spec, xs[2], xs[5]))
    phi = feature_map(finite_spec, xs)
    np.testing.assert_allclose(np.sum(phi ** 2, axis=1), np.diag(gram), atol=1e-12)


def test_sup_bound_b(finite_spec):
    assert finite_spec.b <= finite_spec.kappa * math.sqrt(np.sum(finite_spec.eigenvalues)) + 1e-12
    assert finite_spec.b >= math.sqrt(finite_spec.eigenvalues[0])


def test_hilbert_norm(finite_spec):
    coefficients = np.array([1.0, 0.5, 0.0, 0.0])
    assert hilbert_norm(finite_spec, coefficients) == pytest.approx(math.sqrt(1.0 + 0.25 / 0.5))
    with pytest.raises(DomainError):
        hilbert_norm(finite_spec, np.ones(3))
