# tests/test_lowerbound.py

import math

import numpy as np
import pytest

from backend.errors import DomainError
from backend.lowerbound import (
    BASE_STATIONARY,
    Certificate,
    admissible_rho_interval,
    approximation_error_identity,
    build_full_mrp,
    build_packing,
    certificate_frame,
    chi_square,
    divergence_certificates,
    eigendecomp_check,
    expected_row_chi_square,
    hamming_distance,
    hard_family,
    min_packing_distance,
    stationarity_residual,
    three_state,
    value_3state,
    value_gap,
    verify_family,
)
from backend.rkhs import feature_table

TAU_BAR = 20.0
RHO = 0.02


def test_three_state_base_model():
    model = three_state(0.0, 0.0, TAU_BAR)
    np.testing.assert_allclose(model.stationary, BASE_STATIONARY)
    np.testing.assert_allclose(model.eigenvalues, [1.0, 1.0 - 4.0 * model.varsigma, 0.0])
    assert stationarity_residual(model) < 1e-12
    assert eigendecomp_check(model) < 1e-10
    assert model.varsigma == pytest.approx(1.0 / 160.0)


def test_three_state_perturbed_model():
    model = three_state(0.1, 0.002, TAU_BAR, rho_perp=RHO)
    assert stationarity_residual(model) < 1e-12
    assert eigendecomp_check(model) < 1e-10
    np.testing.assert_allclose(model.transition.sum(axis=1), np.ones(3), atol=1e-12)
    assert value_3state(model).eigen_mismatch < 1e-10


def test_three_state_rejects_out_of_range_parameters():
    with pytest.raises(DomainError):
        three_state(0.5, 0.0, TAU_BAR)
    with pytest.raises(DomainError):
        three_state(0.0, 0.01, TAU_BAR, rho_perp=0.0)
    with pytest.raises(DomainError):
        three_state(0.0, 0.0, 0.5)


def test_approximation_error_identity():
    first = three_state(0.1, 0.002, TAU_BAR, rho_perp=RHO)
    second = three_state(0.0, 0.0, TAU_BAR, rho_perp=RHO)
    assert np.max(np.abs(approximation_error_identity(first, second))) < 1e-10
    assert np.max(np.abs(approximation_error_identity(second, first))) < 1e-10


def test_local_chi_square_bounds():
    dp, dq = 0.1, 0.002
    first = three_state(dp, dq, TAU_BAR, rho_perp=RHO)
    second = three_state(0.0, 0.0, TAU_BAR, rho_perp=RHO)
    assert chi_square(first.stationary, second.stationary) <= 2 * dp ** 2 + 2 * dq ** 2
    row = expected_row_chi_square(first.stationary, first.transition, second.transition)
    assert row <= 12 * first.varsigma * dp ** 2 + 8 * dq ** 2
    assert chi_square(first.stationary, first.stationary) == 0.0
    assert chi_square([0.5, 0.5], [1.0, 0.0]) == math.inf


@pytest.mark.parametrize("U, size", [(2, 2), (4, 6), (8, 70)])
def test_packing_sizes(U, size):
    packing = build_packing(U)
    assert packing.shape == (size, U)
    np.testing.assert_array_equal(packing.sum(axis=1), np.full(size, U // 2))
    assert min_packing_distance(packing) >= 0.25
    assert math.log(size) >= U / 11.0


def test_packing_rejects_non_power_of_two():
    with pytest.raises(DomainError):
        build_packing(6)
    assert hamming_distance([1, 0, 1, 0], [0, 0, 1, 1]) == 0.5


def test_admissible_interval():
    lower, upper = admissible_rho_interval(1.0, 0.9, 20.0, 16, 10_000)
    assert lower == pytest.approx(10.0 * 0.04 / 50.0)
    assert upper == pytest.approx(math.sqrt(20.0) / 108.0)


def test_all_zero_vector_gives_lebesgue_chain():
    lower, upper = admissible_rho_interval(1.0, 0.9, TAU_BAR, 16, 10_000)
    mrp = build_full_mrp(np.zeros(8, dtype=int), 1.0, 0.5 * (lower + upper), TAU_BAR, 0.9, 10_000)
    assert mrp.base_grid_size == 32
    np.testing.assert_allclose(mrp.stationary, np.full(32, 1.0 / 32), atol=1e-15)
    np.testing.assert_allclose(mrp.stationary @ mrp.transition, mrp.stationary, atol=1e-12)


def test_full_chain_reward_is_scaled_second_feature():
    lower, upper = admissible_rho_interval(1.0, 0.9, TAU_BAR, 16, 10_000)
    rho = 0.5 * (lower + upper)
    z = build_packing(8)[3]
    mrp = build_full_mrp(z, 1.0, rho, TAU_BAR, 0.9, 10_000)
    theta_bar = three_state(0.0, 0.0, TAU_BAR, rho_perp=rho).theta
    np.testing.assert_allclose(mrp.reward_cells, 0.25 * feature_table(2, theta_bar, 32)[1], atol=1e-12)


def test_full_chain_reports_violations():
    with pytest.raises(DomainError) as excinfo:
        build_full_mrp(np.zeros(8, dtype=int), 1.0, 5.0, TAU_BAR, 0.9, 10_000)
    assert "rho_perp" in str(excinfo.value)
    with pytest.raises(DomainError):
        build_full_mrp(np.zeros(8, dtype=int), 1.0, 0.02, 5.0, 0.9, 10_000)


@pytest.fixture(scope="module")
def small_family():
    return hard_family(sigma_bar=1.0, tau_bar=TAU_BAR, gamma=0.9, n=10_000, U=4)


def test_identical_members_have_no_divergence(small_family):
    divergence = divergence_certificates(small_family, 2, 2)
    assert divergence.chi2_stationary == 0.0
    assert divergence.chi2_transition == 0.0
    assert divergence.kl_bound == 0.0
    assert value_gap(small_family, 2, 2) == 0.0


def test_family_summary(small_family):
    summary = small_family.summary()
    assert summary["U"] == 4
    assert summary["M"] == 6
    assert summary["d_n"] == 8
    assert summary["rho_lower"] <= summary["rho_perp"] <= summary["rho_upper"]
    assert small_family.spec.truncation == 8


def test_structural_certificates_pass(small_family):
    frame = certificate_frame(verify_family(small_family))
    assert list(frame.columns) == ["check", "value", "bound", "slack", "passed"]
    structural = {
        "packing_log_size",
        "packing_min_distance",
        "packing_weight_deviation",
        "stationarity_residual",
        "eigen_value_formula",
        "approximation_error_identity",
        "block_aggregation",
        "value_gap_positive",
        "value_gap_block_identity",
    }
    rows = frame[frame["check"].isin(structural)]
    assert len(rows) == len(structural)
    assert rows["passed"].all(), rows[~rows["passed"]].to_dict("records")


def test_certificate_senses():
    assert Certificate("a", 1.0, 2.0).passed
    assert not Certificate("a", 3.0, 2.0).passed
    assert Certificate("b", 3.0, 2.0, ">=").slack == 1.0
    assert not Certificate("c", 0.0, 0.0, ">").passed


@pytest.mark.slow
def test_acceptance_family_passes_every_certificate():
    family = hard_family(sigma_bar=1.0, tau_bar=TAU_BAR, gamma=0.9, n=10_000, U=8)
    assert family.M == 70
    frame = certificate_frame(verify_family(family))
    assert frame["passed"].all(), frame[~frame["passed"]].to_dict("records")
