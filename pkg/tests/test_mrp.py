# tests/test_mrp.py

import math

import numpy as np
import pytest

from backend.errors import DomainError
from backend.mrp import (
    Dataset,
    build_experiment_mrp,
    cell_chain_mrp,
    check_discount,
    discretize,
    minorization_slack,
    sample_episodes,
    sample_iid_pairs,
    sample_single_path,
    stationary_distribution,
    switch_probability,
)
from backend.rkhs import feature_table


def test_check_discount():
    assert check_discount(0.0) == 0.0
    with pytest.raises(DomainError):
        check_discount(1.0)
    with pytest.raises(DomainError):
        check_discount(-0.1)


def test_experiment_mrp_structure():
    tau, theta = math.exp(4) / 2, math.pi / 16
    mrp = build_experiment_mrp(tau, theta)
    assert mrp.base_grid_size == 4
    np.testing.assert_allclose(mrp.stationary, np.full(4, 0.25))
    np.testing.assert_allclose(mrp.transition.sum(axis=1), np.ones(4), atol=1e-12)
    np.testing.assert_allclose(mrp.reward_cells, feature_table(2, theta, 4)[1])
    # peluang berpindah paruh
    assert mrp.transition[0, 2:].sum() == pytest.approx(switch_probability(tau))
    assert mrp.horizon == pytest.approx(10.0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(tau_star=0.5, theta=0.0), dict(tau_star=2.0, theta=2.0), dict(tau_star=2.0, theta=0.0, r0=0.0)],
)
def test_experiment_mrp_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        build_experiment_mrp(**kwargs)


def test_mrp_instance_validation():
    with pytest.raises(DomainError):
        cell_chain_mrp([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]], [0, 0, 0], 0.9)
    with pytest.raises(DomainError):
        cell_chain_mrp([[0.6, 0.6], [0.5, 0.5]], [0, 1], 0.9, stationary=[0.5, 0.5])
    with pytest.raises(DomainError):
        cell_chain_mrp([[1.0, 0.0], [0.0, 1.0]], [0, 1], 0.9, mixing_time=0.5, stationary=[0.5, 0.5])


def test_stationary_distribution():
    transition = np.array([[0.9, 0.1], [0.3, 0.7]])
    mu = stationary_distribution(transition)
    np.testing.assert_allclose(mu, [0.75, 0.25], atol=1e-12)


def test_single_path_is_seeded(fast_mrp):
    first = sample_single_path(fast_mrp, 50, seed=4)
    second = sample_single_path(fast_mrp, 50, seed=4)
    other = sample_single_path(fast_mrp, 50, seed=5)
    np.testing.assert_array_equal(first.states, second.states)
    assert not np.array_equal(first.states, other.states)
    assert first.n == 50
    assert np.all((first.states >= 0.0) & (first.states < 1.0))
    np.testing.assert_array_equal(first.rewards, fast_mrp.reward(first.states))
    with pytest.raises(DomainError):
        sample_single_path(fast_mrp, 0, seed=1)


def test_single_path_visits_cells_evenly(fast_mrp):
    data = sample_single_path(fast_mrp, 20000, seed=0)
    counts = np.bincount((data.states * 4).astype(int), minlength=4) / data.n
    np.testing.assert_allclose(counts, np.full(4, 0.25), atol=0.03)


def test_episodes_cover_exactly_n_states(fast_mrp):
    data = sample_episodes(fast_mrp, 23, 5, seed=2)
    assert data.n == 23
    assert data.segment_bounds() == [(0, 5), (5, 10), (10, 15), (15, 20), (20, 23)]
    with pytest.raises(DomainError):
        sample_episodes(fast_mrp, 10, 1, seed=2)


def test_iid_pairs_layout(fast_mrp):
    data = sample_iid_pairs(fast_mrp, 7, seed=3)
    assert data.mode == "iid_pairs"
    assert data.n == 14
    assert data.episode_length == 2
    assert len(data.segment_bounds()) == 7


def test_dataset_rejects_unknown_mode():
    with pytest.raises(DomainError):
        Dataset(mode="replay", states=np.zeros(3), rewards=np.zeros(3))
    with pytest.raises(DomainError):
        Dataset(mode="episodes", states=np.zeros(3), rewards=np.zeros(3))


def test_discretize_refines_exactly(fast_mrp):
    grid = discretize(fast_mrp, 16)
    assert grid.size == 16
    np.testing.assert_allclose(grid.transition.sum(axis=1), np.ones(16), atol=1e-12)
    np.testing.assert_allclose(grid.weights @ grid.transition, grid.weights, atol=1e-12)
    np.testing.assert_array_equal(grid.reward, np.repeat(fast_mrp.reward_cells, 4))
    with pytest.raises(DomainError):
        discretize(fast_mrp, 2)
    with pytest.raises(DomainError):
        discretize(fast_mrp, 12)


def test_minorization_of_experiment_family():
    mrp = build_experiment_mrp(20.0, 0.0)
    assert minorization_slack(mrp) == pytest.approx(0.0, abs=1e-15)
    assert minorization_slack(mrp, constant=2.0 / mrp.mixing_time) < 0.0
