# tests/conftest.py

"""Fixture bersama untuk seluruh pengujian backend."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from backend.estimator import make_kstep_weights, make_td_lambda_weights
from backend.mrp import build_experiment_mrp, sample_episodes, sample_single_path
from backend.oracle import build_oracle
from backend.rkhs import make_kernel_spec

SMALL_EIGENVALUES = (1.0, 0.5, 0.25, 0.125)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: simulasi Monte Carlo atau keluarga sulit berukuran penuh")


@pytest.fixture
def fast_mrp():
    return build_experiment_mrp(tau_star=2.0, theta=0.3, r0=1.0, gamma=0.9)


@pytest.fixture
def finite_spec():
    return make_kernel_spec("finite", theta=0.3, eigenvalues=SMALL_EIGENVALUES)


@pytest.fixture
def exp_spec():
    return make_kernel_spec("exp", theta=0.3)


@pytest.fixture
def path_data(fast_mrp):
    return sample_single_path(fast_mrp, 300, seed=11)


@pytest.fixture
def exp_oracle(fast_mrp, exp_spec):
    return build_oracle(fast_mrp, exp_spec)


@pytest.fixture
def one_step():
    return make_kstep_weights(1)


def draw_instance(seed, max_n):
    """Instans acak (data, kernel, bobot, gamma, ridge) untuk uji kesetaraan solver."""
    rng = np.random.default_rng(seed)
    gamma = float(rng.uniform(0.5, 0.95))
    mrp = build_experiment_mrp(
        tau_star=float(np.exp(rng.uniform(0.0, 4.0))),
        theta=float(rng.uniform(0.0, np.pi / 2)),
        gamma=gamma,
    )
    K = int(rng.integers(1, 5))
    if rng.random() < 0.5:
        w = make_td_lambda_weights(K, float(rng.uniform(0.0, 0.9)))
    else:
        w = make_kstep_weights(K)
    theta = float(rng.uniform(0.0, np.pi / 2))
    if rng.random() < 0.3:
        spec = make_kernel_spec("exp", theta=theta, truncation=int(rng.choice([2, 4, 8])))
    else:
        spec = make_kernel_spec("poly", theta=theta, truncation=int(rng.choice([2, 4, 8, 16, 32])))
    n = int(rng.integers(max(40, 4 * K), max_n + 1))
    if rng.random() < 0.5:
        data = sample_single_path(mrp, n, seed=seed)
    else:
        data = sample_episodes(mrp, n, int(rng.integers(K + 2, K + 12)), seed=seed)
    ridge = float(10.0 ** rng.uniform(-2.5, -0.5))
    return data, spec, w, gamma, ridge


def relative_gap(values, reference):
    return float(np.linalg.norm(values - reference) / np.linalg.norm(reference))


@pytest.fixture
def random_instance():
    return draw_instance


@pytest.fixture
def relative_l2():
    return relative_gap
