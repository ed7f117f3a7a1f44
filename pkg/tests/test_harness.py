# tests/test_harness.py

import dataclasses
import json
import math

import numpy as np
import pandas as pd
import pytest

from backend.errors import DomainError
from backend.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentResult,
    TrialOutcome,
    WeightScheme,
    combine_results,
    emit_csv,
    figure_configs,
    fit_loglog_slope,
    load_experiment_config,
    rate_consistent,
    read_results_csv,
    run_experiment,
    sample_size_grid,
    summarize_trials,
)
from backend.theory import predicted_slope

SMALL_CONFIG = {
    "name": "smoke",
    "family": {"tau_star": 2.0, "theta": 0.3},
    "kernel": {"decay": "finite", "eigenvalues": [1.0, 0.5, 0.25, 0.125]},
    "sampling": {"mode": "single_path"},
    "schemes": [1, {"type": "kstep", "K": 3}],
    "sample_sizes": [40, 80, 160],
    "trials": 4,
    "base_seed": 5,
    "ridge": 1e-3,
}


def _table(method, ns, mses):
    return pd.DataFrame(
        {"method": method, "n": ns, "mse_mean": mses, "mse_stderr": 0.0, "trials": 1, "failures": 0}
    )


def test_sample_size_grid():
    grid = sample_size_grid(7)
    assert grid[0] == 1096
    assert grid == sorted(grid)
    assert len(sample_size_grid(15)) == 15
    assert sample_size_grid(15)[-1] == math.floor(math.exp(7 + 0.3 * 14))


def test_weight_scheme():
    assert WeightScheme("kstep", 5).label == "K=5"
    scheme = WeightScheme("td_lambda", 10, 0.5)
    assert scheme.label == "td0.5-K10"
    assert scheme.weights().K == 10
    with pytest.raises(DomainError):
        WeightScheme("td_lambda", 4, None)
    with pytest.raises(DomainError):
        WeightScheme("td_lambda", 4, 1.0)
    with pytest.raises(DomainError):
        WeightScheme("sarsa", 1)


def test_load_config_from_mapping_and_file(tmp_path):
    config = load_experiment_config(SMALL_CONFIG)
    assert config.ridge_rule == "fixed"
    assert config.ridge_value == pytest.approx(1e-3)
    assert [scheme.K for scheme in config.schemes] == [1, 3]
    assert config.modes == ("single_path",)

    path = tmp_path / "config.json"
    path.write_text(json.dumps(config.to_dict()), encoding="utf-8")
    again = load_experiment_config(str(path))
    assert again == config


@pytest.mark.parametrize(
    "patch",
    [
        {"seed": 1},
        {"family": {"tau": 2.0}},
        {"ridge": {"rule": "fixed", "lambda": 1.0}},
        {"schemes": [{"type": "kstep", "K": 1, "decay": 2}]},
    ],
)
def test_load_config_rejects_unknown_keys(patch):
    with pytest.raises(DomainError):
        load_experiment_config({**SMALL_CONFIG, **patch})


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(tau_star=0.5),
        dict(gamma=1.0),
        dict(sample_sizes=(100, 50)),
        dict(sample_sizes=()),
        dict(trials=0),
        dict(modes=("episodes",)),
        dict(modes=("iid_pairs",), schemes=(WeightScheme("kstep", 2),)),
        dict(ridge_rule="fixed"),
        dict(method="newton"),
        dict(workers=0),
        dict(decay="gauss"),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(DomainError):
        ExperimentConfig(**kwargs)


def test_ridge_dict_with_value_defaults_to_fixed():
    config = load_experiment_config({**SMALL_CONFIG, "ridge": {"value": 0.01}})
    assert config.ridge_rule == "fixed"
    assert load_experiment_config({**SMALL_CONFIG, "ridge": "theorem"}).ridge_rule == "theorem"


def test_figure_presets():
    fig1a = figure_configs("fig1a")
    assert [c.theta for c in fig1a] == [0.0, 0.0]
    assert [round(c.tau_star, 3) for c in fig1a] == [round(math.exp(4) / 2, 3), round(math.exp(6) / 2, 3)]
    assert fig1a[0].modes == ("iid_pairs", "single_path")
    assert fig1a[0].decay == "poly" and fig1a[0].exponent == 1.2
    assert fig1a[0].trials == 200
    fig2a = figure_configs("fig2a", full_scale=True)
    assert [scheme.K for scheme in fig2a[0].schemes] == [1, 5, 10]
    assert fig2a[0].tau_star == 2.0 and fig2a[0].theta == pytest.approx(math.pi / 16)
    assert len(fig2a[0].sample_sizes) == 15 and fig2a[0].trials == 5000
    assert len(figure_configs("fig2b")) == 1
    with pytest.raises(DomainError):
        figure_configs("fig3")


def test_summarize_trials_stderr_two_pass():
    values = [1.0, 2.0, 4.0, 8.0]
    outcomes = [TrialOutcome(v, False, False) for v in values] + [TrialOutcome(float("nan"), False, True, "x")]
    row = summarize_trials("m", 100, outcomes)
    mean = sum(values) / 4
    variance = sum((v - mean) ** 2 for v in values) / 3
    assert row["mse_mean"] == pytest.approx(mean)
    assert row["mse_stderr"] == pytest.approx(math.sqrt(variance) / 2.0)
    assert row["trials"] == 4
    assert row["failures"] == 1
    single = summarize_trials("m", 100, [TrialOutcome(3.0, False, False)])
    assert single["mse_stderr"] == 0.0


def test_fit_loglog_slope_on_synthetic_rates():
    ns = np.array(sample_size_grid(7))
    exact = _table("a", ns, 5.0 / ns)
    assert fit_loglog_slope(exact, "a") == pytest.approx(-1.0)
    poly = _table("b", ns, 3.0 * ns ** (-12.0 / 17.0))
    assert fit_loglog_slope(poly, "b") == pytest.approx(-12.0 / 17.0)
    assert fit_loglog_slope(exact, "a", n_min=2000) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        fit_loglog_slope(exact.head(2), "a")
    with pytest.raises(DomainError):
        fit_loglog_slope(exact, "missing")


def test_emit_csv_empty_writes_header_only(tmp_path):
    path = emit_csv(ExperimentResult(table=pd.DataFrame()), tmp_path / "out" / "empty.csv")
    with open(path, encoding="utf-8") as f:
        assert f.read() == ",".join(CSV_COLUMNS) + "\n"


def test_run_experiment_with_fixed_ridge(tmp_path):
    config = load_experiment_config(SMALL_CONFIG)
    result = run_experiment(config, progress=False)
    assert list(result.table.columns) == CSV_COLUMNS
    assert len(result.table) == 2 * 3
    assert set(result.methods()) == {"single_path/K=1", "single_path/K=3"}
    assert all(value == pytest.approx(1e-3) for value in result.ridges.values())
    assert (result.table["trials"] + result.table["failures"] == 4).all()
    assert result.trials["seed"].min() == 5
    assert (result.table["mse_mean"] >= 0.0).all()

    path = emit_csv(result, tmp_path / "results.csv")
    loaded = read_results_csv(path)
    assert list(loaded.columns) == CSV_COLUMNS
    assert len(loaded) == 6


def test_single_trial_csv_is_deterministic(tmp_path):
    config = load_experiment_config({**SMALL_CONFIG, "trials": 1})
    first = emit_csv(run_experiment(config, progress=False), tmp_path / "first.csv")
    second = emit_csv(run_experiment(config, progress=False), tmp_path / "second.csv")
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()


def test_parallel_matches_serial():
    serial = load_experiment_config({**SMALL_CONFIG, "schemes": [1], "trials": 6})
    parallel = load_experiment_config({**SMALL_CONFIG, "schemes": [1], "trials": 6, "workers": 2})
    left = run_experiment(serial, progress=False).table
    right = run_experiment(parallel, progress=False).table
    pd.testing.assert_frame_equal(left, right)


def test_backward_and_sa_agree_per_trial():
    backward = load_experiment_config({**SMALL_CONFIG, "schemes": [1], "ridge": 0.5, "method": "backward"})
    online = load_experiment_config({**SMALL_CONFIG, "schemes": [1], "ridge": 0.5, "method": "sa"})
    left = run_experiment(backward, progress=False).table
    right = run_experiment(online, progress=False).table
    np.testing.assert_allclose(left["mse_mean"], right["mse_mean"], rtol=1e-6, atol=1e-12)


def test_combine_results_keeps_order():
    first = ExperimentResult(table=_table("a", [1, 2, 3], [1.0, 0.5, 0.3]))
    second = ExperimentResult(table=_table("b", [1, 2, 3], [2.0, 1.0, 0.6]))
    combined = combine_results([first, second])
    assert combined.methods() == ["a", "b"]
    assert combine_results([]).table.empty


def test_auto_ridge_run():
    config = load_experiment_config({**SMALL_CONFIG, "ridge": "experiment", "schemes": [1], "trials": 2})
    result = run_experiment(config, progress=False)
    ridges = [result.ridges[("single_path/K=1", n)] for n in config.sample_sizes]
    assert all(r > 0.0 for r in ridges)
    assert ridges[0] >= ridges[-1]
    assert "zeta0" in result.population["single_path/K=1"]


@pytest.mark.slow
def test_well_specified_rate_is_near_minus_one():
    config = ExperimentConfig(
        tau_star=2.0,
        theta=0.0,
        decay="finite",
        eigenvalues=(1.0, 0.5, 0.25, 0.125),
        sample_sizes=(250, 500, 1000, 2000, 4000),
        trials=60,
        ridge_rule="fixed",
        ridge_value=1e-4,
    )
    slope = fit_loglog_slope(run_experiment(config, progress=False), "single_path/K=1")
    assert -1.3 < slope < -0.7


def test_rate_consistent_is_one_sided():
    expected = predicted_slope("poly", 1.2)
    assert rate_consistent(-1.0, expected)
    assert rate_consistent(expected + 0.05, expected)
    assert not rate_consistent(-0.3, expected)
    assert not rate_consistent(float("nan"), expected)


def test_rate_checks_use_first_config_kernel():
    ns = [100, 200, 400]
    table = pd.DataFrame(
        {
            "method": ["fast"] * 3 + ["slow"] * 3,
            "n": ns * 2,
            "mse_mean": [0.4, 0.2, 0.1, 0.4, 0.35, 0.3],
            "mse_stderr": 0.01,
            "trials": 3,
            "failures": 0,
        },
        columns=CSV_COLUMNS,
    )
    result = ExperimentResult(table=table, configs=[ExperimentConfig(decay="poly", exponent=1.2)])
    assert result.rate_checks() == {"fast": True, "slow": False}
    assert ExperimentResult(table=table).rate_checks() == {}


@pytest.mark.slow
def test_poly_single_path_rate_meets_upper_bound():
    # theta = 0: V* berada di rentang {phi_1, phi_2}, kemiringan mendekati -1
    config = dataclasses.replace(figure_configs("fig1a")[0], modes=("single_path",), trials=20)
    result = run_experiment(config, progress=False)
    slope = fit_loglog_slope(result, result.methods()[0])
    assert -1.3 < slope <= predicted_slope("poly", 1.2) + 0.1
    assert all(result.rate_checks().values())
