# backend/harness.py

"""
Penggerak eksperimen Monte Carlo untuk estimator kernel LSTD.

Fokus:
- Konfigurasi eksperimen (JSON atau dict) dengan validasi dan nilai default.
- Preset gambar fig1a, fig1b, fig2a, fig2b beserta mode skala penuh.
- Menjalankan percobaan per (metode, n) dengan seed berbasis indeks,
  serial maupun paralel, dan merangkum MSE terpotong.
- Menulis tabel hasil ke CSV dan mencocokkan kemiringan log-log.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from backend.errors import DomainError, NumericalError
from backend.estimator import (
    KernelEstimate,
    WeightVector,
    estimate_forward,
    l2mu_error,
    make_kstep_weights,
    make_td_lambda_weights,
)
from backend.mrp import SAMPLING_MODES, Dataset, MrpInstance, build_experiment_mrp, check_discount
from backend.mrp import sample_episodes, sample_iid_pairs, sample_single_path
from backend.oracle import PopulationReport, build_oracle, noise_report
from backend.rkhs import DECAY_FAMILIES, KernelSpec, make_kernel_spec
from backend.theory import RIDGE_RULES, auto_ridge, predicted_slope
from backend.trace import sa_run, solve_backward

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["method", "n", "mse_mean", "mse_stderr", "trials", "failures"]
METHODS = ("forward", "backward", "sa")
FIGURES = ("fig1a", "fig1b", "fig2a", "fig2b")

DESK_GRID_COUNT = 7
FULL_GRID_COUNT = 15
DESK_TRIALS = 200
FULL_TRIALS = 5000
FAST_MIXING = math.exp(4) / 2.0
SLOW_MIXING = math.exp(6) / 2.0
RATE_TOLERANCE = 0.1

CONFIG_KEYS = {
    "name", "label", "family", "kernel", "sampling", "schemes", "sample_sizes",
    "trials", "base_seed", "ridge", "truncation_multiplier", "method", "workers",
}
FAMILY_KEYS = {"tau_star", "theta", "r0", "gamma"}
KERNEL_KEYS = {"decay", "exponent", "truncation", "eigenvalues"}
SAMPLING_KEYS = {"mode", "modes", "episode_length"}
SCHEME_KEYS = {"type", "K", "lambda"}
RIDGE_KEYS = {"rule", "value", "c0"}


def sample_size_grid(count: int = DESK_GRID_COUNT) -> List[int]:
    """n_i = floor(exp(7 + 0.3 i)) untuk i = 0..count-1."""
    return [int(math.floor(math.exp(7.0 + 0.3 * i))) for i in range(count)]


@dataclass(frozen=True)
class WeightScheme:
    """Satu skema bobot: K-langkah atau TD(lambda) terpotong pada K."""

    kind: str
    K: int
    lam: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("kstep", "td_lambda"):
            raise DomainError(f"Jenis skema tidak dikenal: {self.kind}")
        if self.K < 1:
            raise DomainError(f"K minimal 1, diterima {self.K}")
        if self.kind == "td_lambda" and (self.lam is None or not 0.0 <= self.lam < 1.0):
            raise DomainError(f"TD(lambda) membutuhkan lambda di [0, 1), diterima {self.lam}")

    @property
    def label(self) -> str:
        if self.kind == "kstep":
            return f"K={self.K}"
        return f"td{self.lam:g}-K{self.K}"

    def weights(self) -> WeightVector:
        if self.kind == "kstep":
            return make_kstep_weights(self.K)
        return make_td_lambda_weights(self.K, float(self.lam))

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"type": self.kind, "K": self.K}
        if self.lam is not None:
            data["lambda"] = self.lam
        return data


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Konfigurasi satu eksperimen Monte Carlo.

    Attributes:
        tau_star, theta, r0, gamma: Parameter keluarga MRP dua-paruh.
        decay, exponent, truncation, eigenvalues: Kernel.
        modes: Mode sampling yang dibandingkan ("single_path", "episodes", "iid_pairs").
        episode_length: L untuk mode episode.
        schemes: Skema bobot multi-langkah.
        sample_sizes: Grid n, naik tegas.
        trials: Jumlah percobaan per (metode, n).
        base_seed: Seed percobaan ke-i adalah base_seed + i.
        ridge_rule: "experiment", "theorem", atau "fixed".
        ridge_value: lambda_n tetap bila ridge_rule = "fixed".
        c0: Konstanta aturan "theorem".
        truncation_multiplier: MSE dipotong pada multiplier * ||theta*||^2_mu.
        method: "forward", "backward", atau "sa".
        workers: Jumlah proses; 1 berarti serial.
        label: Prefiks label metode pada tabel hasil.
    """

    tau_star: float = FAST_MIXING
    theta: float = 0.0
    r0: float = 1.0
    gamma: float = 0.9
    decay: str = "poly"
    exponent: float = 1.2
    truncation: Optional[int] = None
    eigenvalues: Optional[Tuple[float, ...]] = None
    modes: Tuple[str, ...] = ("single_path",)
    episode_length: Optional[int] = None
    schemes: Tuple[WeightScheme, ...] = (WeightScheme("kstep", 1),)
    sample_sizes: Tuple[int, ...] = tuple(sample_size_grid())
    trials: int = DESK_TRIALS
    base_seed: int = 0
    ridge_rule: str = "experiment"
    ridge_value: Optional[float] = None
    c0: float = 1.0
    truncation_multiplier: float = 100.0
    method: str = "forward"
    workers: int = 1
    label: str = ""
    name: str = "experiment"

    def __post_init__(self):
        if self.tau_star < 1.0:
            raise DomainError(f"tau* harus >= 1, diterima {self.tau_star}")
        check_discount(self.gamma)
        if self.decay not in DECAY_FAMILIES:
            raise DomainError(f"Keluarga peluruhan tidak dikenal: {self.decay}")
        if self.trials < 1:
            raise DomainError(f"Jumlah percobaan minimal 1, diterima {self.trials}")
        if not self.sample_sizes:
            raise DomainError("Grid ukuran sampel kosong")
        if any(n < 1 for n in self.sample_sizes):
            raise DomainError(f"Ukuran sampel harus positif: {list(self.sample_sizes)}")
        if any(b <= a for a, b in zip(self.sample_sizes, self.sample_sizes[1:])):
            raise DomainError(f"Ukuran sampel harus naik tegas: {list(self.sample_sizes)}")
        if not self.modes or any(mode not in SAMPLING_MODES for mode in self.modes):
            raise DomainError(f"Mode sampling tidak valid: {list(self.modes)}")
        if "episodes" in self.modes and (self.episode_length is None or self.episode_length < 2):
            raise DomainError("Mode episode membutuhkan episode_length >= 2")
        if not self.schemes:
            raise DomainError("Minimal satu skema bobot dibutuhkan")
        if "iid_pairs" in self.modes and any(scheme.K > 1 for scheme in self.schemes):
            raise DomainError("Pasangan i.i.d. hanya mendukung K = 1")
        if self.ridge_rule not in RIDGE_RULES + ("fixed",):
            raise DomainError(f"Aturan ridge tidak dikenal: {self.ridge_rule}")
        if self.ridge_rule == "fixed" and (self.ridge_value is None or self.ridge_value <= 0.0):
            raise DomainError(f"Ridge tetap harus positif, diterima {self.ridge_value}")
        if self.truncation_multiplier <= 0.0:
            raise DomainError(f"Pengali pemotongan harus positif, diterima {self.truncation_multiplier}")
        if self.method not in METHODS:
            raise DomainError(f"Metode tidak dikenal: {self.method}")
        if self.workers < 1:
            raise DomainError(f"Jumlah worker minimal 1, diterima {self.workers}")

    def build_mrp(self) -> MrpInstance:
        return build_experiment_mrp(self.tau_star, self.theta, self.r0, self.gamma)

    def build_kernel(self) -> KernelSpec:
        return make_kernel_spec(
            self.decay,
            theta=self.theta,
            truncation=self.truncation,
            exponent=self.exponent,
            eigenvalues=self.eigenvalues,
        )

    def method_label(self, mode: str, scheme: WeightScheme) -> str:
        parts = [self.label] if self.label else []
        return "/".join(parts + [mode, scheme.label])

    def to_dict(self) -> Dict[str, Any]:
        """Bentuk JSON yang dapat dibaca ulang oleh `load_experiment_config`."""
        ridge: Dict[str, Any] = {"rule": self.ridge_rule, "c0": self.c0}
        if self.ridge_value is not None:
            ridge["value"] = self.ridge_value
        kernel: Dict[str, Any] = {"decay": self.decay, "exponent": self.exponent}
        if self.truncation is not None:
            kernel["truncation"] = self.truncation
        if self.eigenvalues is not None:
            kernel["eigenvalues"] = list(self.eigenvalues)
        sampling: Dict[str, Any] = {"modes": list(self.modes)}
        if self.episode_length is not None:
            sampling["episode_length"] = self.episode_length
        return {
            "name": self.name,
            "label": self.label,
            "family": {"tau_star": self.tau_star, "theta": self.theta, "r0": self.r0, "gamma": self.gamma},
            "kernel": kernel,
            "sampling": sampling,
            "schemes": [scheme.to_dict() for scheme in self.schemes],
            "sample_sizes": list(self.sample_sizes),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "ridge": ridge,
            "truncation_multiplier": self.truncation_multiplier,
            "method": self.method,
            "workers": self.workers,
        }


def _reject_unknown(section: str, data: Mapping[str, Any], allowed: set) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise DomainError(f"Kunci tidak dikenal pada '{section}': {unknown}")


def _section(raw: Mapping[str, Any], key: str, allowed: set) -> Mapping[str, Any]:
    value = raw.get(key, {})
    if not isinstance(value, Mapping):
        raise DomainError(f"Bagian '{key}' harus berupa objek")
    _reject_unknown(key, value, allowed)
    return value


def _parse_scheme(entry: Any) -> WeightScheme:
    if isinstance(entry, int):
        return WeightScheme("kstep", entry)
    if not isinstance(entry, Mapping):
        raise DomainError(f"Skema tidak valid: {entry!r}")
    _reject_unknown("schemes", entry, SCHEME_KEYS)
    lam = entry.get("lambda")
    return WeightScheme(str(entry.get("type", "kstep")), int(entry.get("K", 1)), None if lam is None else float(lam))


def _parse_ridge(value: Any) -> Dict[str, Any]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return {"ridge_rule": "fixed", "ridge_value": float(value)}
    if isinstance(value, str):
        return {"ridge_rule": value}
    if not isinstance(value, Mapping):
        raise DomainError(f"Konfigurasi ridge tidak valid: {value!r}")
    _reject_unknown("ridge", value, RIDGE_KEYS)
    default_rule = "fixed" if "value" in value else "experiment"
    parsed: Dict[str, Any] = {"ridge_rule": str(value.get("rule", default_rule))}
    if "value" in value:
        parsed["ridge_value"] = float(value["value"])
    if "c0" in value:
        parsed["c0"] = float(value["c0"])
    return parsed


def load_experiment_config(source: Union[str, os.PathLike, Mapping[str, Any]]) -> ExperimentConfig:
    """
    Membaca dan memvalidasi konfigurasi eksperimen.

    Args:
        source: Path file JSON atau dict dengan kunci family, kernel, sampling,
            schemes, sample_sizes, trials, base_seed, ridge,
            truncation_multiplier, method, workers.

    Returns:
        `ExperimentConfig` lengkap dengan nilai default.

    Raises:
        DomainError: Kunci tidak dikenal atau nilai di luar domain.
    """
    if isinstance(source, Mapping):
        raw = source
    else:
        try:
            with open(source, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            logger.error("Gagal membaca konfigurasi %s: %s", source, exc)
            raise
    if not isinstance(raw, Mapping):
        raise DomainError("Konfigurasi eksperimen harus berupa objek JSON")
    _reject_unknown("config", raw, CONFIG_KEYS)

    family = _section(raw, "family", FAMILY_KEYS)
    kernel = _section(raw, "kernel", KERNEL_KEYS)
    sampling = _section(raw, "sampling", SAMPLING_KEYS)

    kwargs: Dict[str, Any] = {}
    for key in ("tau_star", "theta", "r0", "gamma"):
        if key in family:
            kwargs[key] = float(family[key])
    if "decay" in kernel:
        kwargs["decay"] = str(kernel["decay"])
    if "exponent" in kernel:
        kwargs["exponent"] = float(kernel["exponent"])
    if kernel.get("truncation") is not None:
        kwargs["truncation"] = int(kernel["truncation"])
    if kernel.get("eigenvalues") is not None:
        kwargs["eigenvalues"] = tuple(float(v) for v in kernel["eigenvalues"])

    if "modes" in sampling:
        kwargs["modes"] = tuple(str(mode) for mode in sampling["modes"])
    elif "mode" in sampling:
        kwargs["modes"] = (str(sampling["mode"]),)
    if sampling.get("episode_length") is not None:
        kwargs["episode_length"] = int(sampling["episode_length"])

    if "schemes" in raw:
        kwargs["schemes"] = tuple(_parse_scheme(entry) for entry in raw["schemes"])
    if "sample_sizes" in raw:
        kwargs["sample_sizes"] = tuple(int(n) for n in raw["sample_sizes"])
    for key, cast in (("trials", int), ("base_seed", int), ("workers", int),
                      ("truncation_multiplier", float), ("method", str), ("label", str), ("name", str)):
        if key in raw:
            kwargs[key] = cast(raw[key])
    if "ridge" in raw:
        kwargs.update(_parse_ridge(raw["ridge"]))
    return ExperimentConfig(**kwargs)


def _figure_family(figure: str) -> List[Tuple[float, float]]:
    if figure == "fig1a":
        return [(FAST_MIXING, 0.0), (SLOW_MIXING, 0.0)]
    if figure == "fig1b":
        return [(FAST_MIXING, math.pi / 4), (SLOW_MIXING, math.pi / 4)]
    if figure == "fig2a":
        return [(2.0, math.pi / 16), (SLOW_MIXING, 0.0)]
    if figure == "fig2b":
        return [(SLOW_MIXING, math.pi / 16)]
    raise DomainError(f"Preset gambar tidak dikenal: {figure}; pilihan {list(FIGURES)}")


def figure_configs(
    figure: str,
    full_scale: bool = False,
    trials: Optional[int] = None,
    base_seed: int = 0,
    workers: int = 1,
    sample_sizes: Optional[Sequence[int]] = None,
) -> List[ExperimentConfig]:
    """
    Konfigurasi preset untuk satu panel gambar.

    fig1*: kernel polinomial mu_j = j^-1.2, K = 1, pasangan i.i.d. vs satu lintasan.
    fig2*: kernel eksponensial mu_j = exp(-(j-1)^2), satu lintasan, K in {1, 5, 10}.

    Args:
        figure: "fig1a", "fig1b", "fig2a", atau "fig2b".
        full_scale: Grid i = 0..14 dan 5000 percobaan.
        trials: Menimpa jumlah percobaan.
        base_seed: Seed dasar.
        workers: Jumlah proses.
        sample_sizes: Menimpa grid n.
    """
    pairs = _figure_family(figure)
    count = FULL_GRID_COUNT if full_scale else DESK_GRID_COUNT
    sizes = tuple(sample_sizes) if sample_sizes is not None else tuple(sample_size_grid(count))
    repeats = trials if trials is not None else (FULL_TRIALS if full_scale else DESK_TRIALS)

    configs = []
    for tau_star, theta in pairs:
        common: Dict[str, Any] = dict(
            tau_star=tau_star,
            theta=theta,
            sample_sizes=sizes,
            trials=repeats,
            base_seed=base_seed,
            workers=workers,
            label=f"tau={tau_star:.1f}|theta={theta:.4f}",
            name=figure,
        )
        if figure.startswith("fig1"):
            configs.append(ExperimentConfig(decay="poly", exponent=1.2, modes=("iid_pairs", "single_path"), **common))
        else:
            schemes = tuple(WeightScheme("kstep", K) for K in (1, 5, 10))
            configs.append(ExperimentConfig(decay="exp", modes=("single_path",), schemes=schemes, **common))
    return configs


@dataclass(frozen=True, eq=False)
class TrialContext:
    """Semua masukan percobaan selain seed; dikirim sekali per potongan seed ke proses lain."""

    mrp: MrpInstance
    spec: KernelSpec
    weights: WeightVector
    mode: str
    episode_length: Optional[int]
    n: int
    ridge: float
    method: str
    reference: np.ndarray
    grid_weights: np.ndarray
    cap: float


@dataclass(frozen=True)
class TrialOutcome:
    mse: float
    truncated: bool
    failed: bool
    error: str = ""


def draw_dataset(mrp: MrpInstance, mode: str, n: int, seed: int, episode_length: Optional[int] = None) -> Dataset:
    """Data berukuran n menurut mode sampling."""
    if mode == "single_path":
        return sample_single_path(mrp, n, seed)
    if mode == "iid_pairs":
        return sample_iid_pairs(mrp, n, seed)
    if mode == "episodes":
        return sample_episodes(mrp, n, int(episode_length), seed)
    raise DomainError(f"Mode sampling tidak dikenal: {mode}")


def fit_estimate(
    data: Dataset, spec: KernelSpec, w: WeightVector, gamma: float, ridge: float, method: str = "forward"
) -> KernelEstimate:
    """Menjalankan estimator "forward", "backward", atau "sa"."""
    if method == "forward":
        return estimate_forward(data, spec, w, gamma, ridge)
    if method == "backward":
        return solve_backward(data, spec, w, gamma, ridge)
    if method == "sa":
        return sa_run(data, spec, w, gamma, ridge)
    raise DomainError(f"Metode tidak dikenal: {method}")


def run_trial(task: TrialContext, seed: int) -> TrialOutcome:
    """Satu percobaan; `NumericalError` dicatat sebagai kegagalan."""
    data = draw_dataset(task.mrp, task.mode, task.n, seed, task.episode_length)
    try:
        estimate = fit_estimate(data, task.spec, task.weights, task.mrp.gamma, task.ridge, task.method)
    except NumericalError as exc:
        return TrialOutcome(mse=float("nan"), truncated=False, failed=True, error=str(exc))
    error = l2mu_error(estimate, task.reference, task.grid_weights)
    if not np.isfinite(error) or error > task.cap:
        return TrialOutcome(mse=task.cap, truncated=True, failed=False)
    return TrialOutcome(mse=error, truncated=False, failed=False)


def summarize_trials(method: str, n: int, outcomes: Sequence[TrialOutcome]) -> Dict[str, Any]:
    """Baris tabel: rata-rata MSE dan galat baku std/sqrt(trials) atas percobaan yang berhasil."""
    values = np.array([outcome.mse for outcome in outcomes if not outcome.failed], dtype=float)
    trials = int(values.size)
    mean = float(np.mean(values)) if trials else float("nan")
    stderr = float(np.std(values, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return {
        "method": method,
        "n": int(n),
        "mse_mean": mean,
        "mse_stderr": stderr,
        "trials": trials,
        "failures": len(outcomes) - trials,
    }


@dataclass
class ExperimentResult:
    """
    Hasil eksperimen.

    Attributes:
        table: Tabel agregat dengan kolom `CSV_COLUMNS`.
        trials: Tabel per percobaan (method, n, trial, seed, mse, truncated, failed, error).
        ridges: lambda_n per (method, n).
        configs: Konfigurasi yang dijalankan.
        population: Ringkasan populasi per label metode.
    """

    table: pd.DataFrame
    trials: pd.DataFrame = field(default_factory=pd.DataFrame)
    ridges: Dict[Tuple[str, int], float] = field(default_factory=dict)
    configs: List[ExperimentConfig] = field(default_factory=list)
    population: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def truncation_count(self, method: Optional[str] = None, n_min: int = 0) -> int:
        if self.trials.empty:
            return 0
        rows = self.trials[self.trials["n"] >= n_min]
        if method is not None:
            rows = rows[rows["method"] == method]
        return int(rows["truncated"].sum())

    def methods(self) -> List[str]:
        return list(dict.fromkeys(self.table["method"])) if not self.table.empty else []

    def slopes(self, n_min: int = 0) -> Dict[str, float]:
        """Kemiringan log-log per metode; NaN bila titik kurang dari tiga."""
        slopes = {}
        for method in self.methods():
            try:
                slopes[method] = fit_loglog_slope(self.table, method, n_min)
            except DomainError:
                slopes[method] = float("nan")
        return slopes

    def rate_checks(self, n_min: int = 0, tolerance: float = RATE_TOLERANCE) -> Dict[str, bool]:
        """Per metode: apakah kemiringan log-log tidak lebih lambat dari laju batas atas kernel."""
        if not self.configs:
            return {}
        config = self.configs[0]
        expected = predicted_slope(config.decay, config.exponent)
        return {method: rate_consistent(slope, expected, tolerance) for method, slope in self.slopes(n_min).items()}


def rate_consistent(slope: float, expected: float, tolerance: float = RATE_TOLERANCE) -> bool:
    """
    Kemiringan empiris konsisten dengan batas atas bila slope <= expected + tolerance.

    Batas atas hanya membatasi dari atas: fungsi nilai yang berada dalam rentang
    berhingga fitur (theta = 0) meluruh mendekati laju parametrik -1.
    """
    return bool(np.isfinite(slope) and slope <= expected + tolerance)


def empty_table() -> pd.DataFrame:
    return pd.DataFrame({column: pd.Series(dtype=dtype) for column, dtype in zip(
        CSV_COLUMNS, ["object", "int64", "float64", "float64", "int64", "int64"]
    )})


def _ridge_for(config: ExperimentConfig, spec: KernelSpec, report: PopulationReport, w: WeightVector, n: int) -> float:
    if config.ridge_rule == "fixed":
        return float(config.ridge_value)
    return auto_ridge(spec, report, w, n, rule=config.ridge_rule, c0=config.c0)


def run_trials(context: TrialContext, seeds: Sequence[int]) -> List[TrialOutcome]:
    return [run_trial(context, seed) for seed in seeds]


def _execute(context: TrialContext, seeds: List[int], workers: int, desc: str, progress: bool) -> List[TrialOutcome]:
    if workers <= 1:
        return [run_trial(context, seed) for seed in tqdm(seeds, desc=desc, leave=False, disable=not progress)]
    size = max(1, math.ceil(len(seeds) / workers))
    chunks = [seeds[start : start + size] for start in range(0, len(seeds), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_trials, context, chunk) for chunk in chunks]
        # urutan hasil mengikuti indeks percobaan
        return [outcome for future in futures for outcome in future.result()]


def run_experiment(config: ExperimentConfig, progress: bool = True) -> ExperimentResult:
    """
    Menjalankan seluruh percobaan satu konfigurasi.

    Untuk setiap skema bobot dihitung theta* dan ||theta*||^2_mu dari oracle
    sekali; untuk setiap (mode, skema, n) dijalankan `trials` percobaan
    dengan seed base_seed + i. Hasil agregat tidak bergantung pada jumlah worker.

    Args:
        config: Konfigurasi tervalidasi.
        progress: Tampilkan progress bar tqdm.

    Returns:
        `ExperimentResult` dengan tabel per (metode, n).
    """
    logger.info("=" * 60)
    logger.info(
        "Eksperimen %s: tau*=%.4g, theta=%.4g, kernel %s, metode %s, %d percobaan",
        config.label or config.name,
        config.tau_star,
        config.theta,
        config.decay,
        config.method,
        config.trials,
    )
    mrp = config.build_mrp()
    spec = config.build_kernel()
    oracle = build_oracle(mrp, spec)

    rows: List[Dict[str, Any]] = []
    trial_rows: List[Dict[str, Any]] = []
    ridges: Dict[Tuple[str, int], float] = {}
    population: Dict[str, Dict[str, float]] = {}
    seeds = [config.base_seed + i for i in range(config.trials)]

    combos = [(mode, scheme) for mode in config.modes for scheme in config.schemes]
    with tqdm(total=len(combos) * len(config.sample_sizes), desc="Eksperimen", disable=not progress) as bar:
        for mode, scheme in combos:
            w = scheme.weights()
            length = config.episode_length if mode == "episodes" else None
            report = noise_report(oracle, w, episode_length=length)
            cap = config.truncation_multiplier * oracle.norm(report.theta_star) ** 2
            label = config.method_label(mode, scheme)
            population[label] = report.scalars()
            for n in config.sample_sizes:
                ridge = _ridge_for(config, spec, report, w, n)
                ridges[(label, n)] = ridge
                context = TrialContext(
                    mrp=mrp,
                    spec=spec,
                    weights=w,
                    mode=mode,
                    episode_length=length,
                    n=n,
                    ridge=ridge,
                    method=config.method,
                    reference=report.theta_star,
                    grid_weights=report.weights,
                    cap=cap,
                )
                outcomes = _execute(context, seeds, config.workers, f"{label} n={n}", progress)
                row = summarize_trials(label, n, outcomes)
                rows.append(row)
                for index, (seed, outcome) in enumerate(zip(seeds, outcomes)):
                    trial_rows.append(
                        {"method": label, "n": n, "trial": index, "seed": seed, **asdict(outcome)}
                    )
                failures = [outcome.error for outcome in outcomes if outcome.failed]
                if failures:
                    logger.error("Gagal %d/%d percobaan %s n=%d: %s",
                                 len(failures), len(outcomes), label, n, failures[0])
                bar.update(1)

    table = pd.DataFrame(rows, columns=CSV_COLUMNS) if rows else empty_table()
    result = ExperimentResult(
        table=table,
        trials=pd.DataFrame(trial_rows),
        ridges=ridges,
        configs=[config],
        population=population,
    )
    logger.info("Eksperimen selesai: %d baris, %d MSE terpotong", len(table), result.truncation_count())
    logger.info("=" * 60)
    return result


def combine_results(results: Sequence[ExperimentResult]) -> ExperimentResult:
    """Menggabungkan hasil beberapa konfigurasi (misalnya dua tau* pada satu panel)."""
    if not results:
        return ExperimentResult(table=empty_table())
    tables = [result.table for result in results if not result.table.empty]
    trials = [result.trials for result in results if not result.trials.empty]
    combined = ExperimentResult(
        table=pd.concat(tables, ignore_index=True) if tables else empty_table(),
        trials=pd.concat(trials, ignore_index=True) if trials else pd.DataFrame(),
    )
    for result in results:
        combined.ridges.update(result.ridges)
        combined.configs.extend(result.configs)
        combined.population.update(result.population)
    return combined


def run_figure(figure: str, full_scale: bool = False, progress: bool = True, **overrides: Any) -> ExperimentResult:
    """Menjalankan seluruh konfigurasi preset satu panel gambar."""
    configs = figure_configs(figure, full_scale=full_scale, **overrides)
    return combine_results([run_experiment(config, progress=progress) for config in configs])


def _as_table(results: Union[ExperimentResult, pd.DataFrame]) -> pd.DataFrame:
    return results.table if isinstance(results, ExperimentResult) else results


def emit_csv(results: Union[ExperimentResult, pd.DataFrame], path: Union[str, os.PathLike]) -> str:
    """
    Menulis tabel hasil ke CSV UTF-8 dengan header.

    Returns:
        Path file yang ditulis.

    Raises:
        OSError: Gagal menulis file.
    """
    table = _as_table(results)
    missing = [column for column in CSV_COLUMNS if column not in table.columns]
    if missing and not table.empty:
        raise DomainError(f"Tabel hasil tidak memiliki kolom {missing}")
    table = empty_table() if table.empty else table[CSV_COLUMNS]
    try:
        directory = os.path.dirname(os.fspath(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        table.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    except OSError as exc:
        logger.error("Gagal menulis CSV %s: %s", path, exc)
        raise
    logger.info("CSV hasil ditulis: %s (%d baris)", path, len(table))
    return os.fspath(path)


def read_results_csv(path: Union[str, os.PathLike]) -> pd.DataFrame:
    return pd.read_csv(path, encoding="utf-8")


def fit_loglog_slope(results: Union[ExperimentResult, pd.DataFrame], method: str, n_min: int = 0) -> float:
    """
    Kemiringan kuadrat terkecil log MSE terhadap log n.

    Args:
        results: Tabel hasil.
        method: Label metode.
        n_min: Hanya titik dengan n >= n_min.

    Raises:
        DomainError: Kurang dari tiga titik berhingga dan positif.
    """
    table = _as_table(results)
    rows = table[(table["method"] == method) & (table["n"] >= n_min)]
    rows = rows[np.isfinite(rows["mse_mean"]) & (rows["mse_mean"] > 0.0)]
    if len(rows) < 3:
        raise DomainError(f"Kemiringan membutuhkan >= 3 titik untuk '{method}' dengan n >= {n_min}, ada {len(rows)}")
    slope, _ = np.polyfit(np.log(rows["n"].to_numpy(dtype=float)), np.log(rows["mse_mean"].to_numpy(dtype=float)), 1)
    return float(slope)
