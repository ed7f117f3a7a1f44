# backend/theory.py

"""Kompleksitas kernel, radius kritis, pemilihan ridge, dan evaluasi batas laju galat.

Seluruh konstanta universal (c, c0, c') pada batas dilaporkan bernilai 1 kecuali
diberikan eksplisit; batas dipakai untuk bentuk dan kemiringan, bukan level absolut.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.optimize import bisect

from backend.errors import DomainError, NumericalError
from backend.estimator import WeightVector
from backend.mrp import MrpInstance
from backend.oracle import PopulationReport, build_oracle, noise_report
from backend.rkhs import KernelSpec

logger = logging.getLogger(__name__)

BISECTION_LOWER = 1e-12
BISECTION_RTOL = 1e-10
RIDGE_RULES = ("experiment", "theorem")
LOOKAHEAD_REGIMES = ("uniform_reward", "bounded_value", "mild_dependence")


def kernel_complexity(eigenvalues: np.ndarray, delta: float) -> float:
    """C(delta) = sqrt(sum_j min{mu_j / delta^2, 1})."""
    if delta <= 0.0:
        raise DomainError(f"Skala delta harus positif, diterima {delta}")
    eigs = np.asarray(eigenvalues, dtype=float)
    return float(np.sqrt(np.sum(np.minimum(eigs / delta ** 2, 1.0))))


def statistical_dimension(eigenvalues: np.ndarray, delta: float) -> int:
    """d_n = #{j : mu_j >= delta^2}."""
    return int(np.sum(np.asarray(eigenvalues) >= delta ** 2))


def critical_radius(
    eigenvalues: np.ndarray,
    n: int,
    radius: float,
    kappa: float,
    zeta: float,
    upper: Optional[float] = None,
) -> float:
    """
    Solusi positif terkecil dari C(delta) <= (sqrt(n) R / (kappa zeta)) delta.

    Args:
        eigenvalues: mu_j.
        n: Ukuran sampel (>= 1).
        radius: R > 0.
        kappa: Konstanta kappa.
        zeta: Tingkat derau zeta > 0.
        upper: Ujung atas bracket bisection, biasanya b; default kappa sqrt(sum mu_j) >= b.

    Raises:
        NumericalError: Tidak ada perpotongan di [1e-12, upper].
    """
    if zeta <= 0.0 or n < 1 or radius <= 0.0:
        raise DomainError(f"Butuh zeta > 0, n >= 1, R > 0 (zeta={zeta}, n={n}, R={radius})")
    slope = math.sqrt(n) * radius / (kappa * zeta)
    if upper is None:
        upper = kappa * math.sqrt(float(np.sum(eigenvalues)))

    def gap(delta: float) -> float:
        return kernel_complexity(eigenvalues, delta) - slope * delta

    lower = BISECTION_LOWER
    if gap(lower) <= 0.0:
        return lower
    if gap(upper) > 0.0:
        raise NumericalError(
            "Ketaksamaan kritis tidak berpotongan di dalam bracket",
            {"upper": upper, "gap_upper": gap(upper), "slope": slope},
        )
    root = bisect(gap, lower, upper, xtol=1e-300, rtol=BISECTION_RTOL, maxiter=500)
    # geser ke sisi yang memenuhi ketaksamaan
    while gap(root) > 0.0:
        root *= 1.0 + BISECTION_RTOL
    return float(root)


def finite_rank_radius(d: int, n: int, radius: float, kappa: float, zeta: float) -> float:
    """Bentuk tertutup (kappa zeta / R) sqrt(d / n), berlaku bila seluruh mu_j >= delta^2."""
    return kappa * zeta / radius * math.sqrt(d / n)


def select_ridge(delta: float, gamma_bar: float, n: int, rule: str = "experiment", c0: float = 1.0) -> float:
    """
    lambda_n dari radius kritis.

    "experiment": 0.01 delta^2 (1 - gamma_bar); "theorem": c0 delta^2 (1 - gamma_bar) log n.
    """
    if rule == "experiment":
        return 0.01 * delta ** 2 * (1.0 - gamma_bar)
    if rule == "theorem":
        return c0 * delta ** 2 * (1.0 - gamma_bar) * math.log(max(n, 2))
    raise DomainError(f"Aturan ridge tidak dikenal: {rule}")


def radius(correction_norm: float, reward_sup: float, b: float) -> float:
    """R = max{||theta* - r||_H, ||r||_inf / b}."""
    return max(correction_norm, reward_sup / b)


def _log_sq(n: int) -> float:
    return math.log(max(n, 2)) ** 2


def ub_linear(
    sigma_m: float, residual_norm: float, kappa: float, gamma_bar: float, tau: float, d: int, n: int
) -> Dict[str, float]:
    """Batas kernel rank-hingga: (eps_m^2 + eps_a^2) log^2 n."""
    scale = kappa ** 2 / (1.0 - gamma_bar) ** 2 * d / n
    eps_m = scale * sigma_m ** 2
    eps_a = scale * tau * residual_norm ** 2
    return {"eps_m": eps_m, "eps_a": eps_a, "bound": (eps_m + eps_a) * _log_sq(n)}


def ub_alpha(
    sigma_m: float,
    residual_norm: float,
    kappa: float,
    gamma_bar: float,
    tau: float,
    R: float,
    alpha: float,
    n: int,
) -> Dict[str, float]:
    """Batas peluruhan alpha-polinomial: R^{2/(2a+1)} (eps_m^2 + eps_a^2)^{2a/(2a+1)} log^2 n."""
    scale = kappa ** 2 / (1.0 - gamma_bar) ** 2 / n
    eps_m = scale * sigma_m ** 2
    eps_a = scale * tau * residual_norm ** 2
    power = 2.0 * alpha / (2.0 * alpha + 1.0)
    bound = R ** (2.0 / (2.0 * alpha + 1.0)) * (eps_m + eps_a) ** power * _log_sq(n)
    return {"eps_m": eps_m, "eps_a": eps_a, "bound": bound}


def ub_linear_simple(sigma_value: float, kappa: float, gamma: float, d: int, n: int) -> float:
    return kappa ** 2 * sigma_value ** 2 / (1.0 - gamma) ** 2 * d * _log_sq(n) / n


def ub_alpha_simple(sigma_value: float, kappa: float, gamma: float, R: float, alpha: float, n: int) -> float:
    power = 2.0 * alpha / (2.0 * alpha + 1.0)
    inner = kappa ** 2 * sigma_value ** 2 / (R ** 2 * (1.0 - gamma) ** 2 * n)
    return R ** 2 * inner ** power * _log_sq(n)


def ub_uniform_reward(reward_bound: float, gamma: float, tau: float, n: int, d: Optional[int] = None,
                      alpha: Optional[float] = None) -> float:
    """Batas untuk imbalan terbatas seragam ||r||_inf <= rho_r (rank-hingga bila `d`, selain itu alpha)."""
    horizon = 1.0 / (1.0 - gamma)
    effective = max(horizon, tau)
    if d is not None:
        return reward_bound ** 2 * horizon ** 2 * effective * d / n * _log_sq(n)
    if alpha is None:
        raise DomainError("Butuh d atau alpha")
    power = 2.0 * alpha / (2.0 * alpha + 1.0)
    return reward_bound ** 2 * horizon ** 2 * (effective / n) ** power * _log_sq(n)


def ub_bounded_value(value_bound: float, gamma: float, tau: float, n: int, d: Optional[int] = None,
                     alpha: Optional[float] = None) -> float:
    """Batas untuk ||V*||_mu <= rho_V."""
    horizon = 1.0 / (1.0 - gamma)
    effective = max(horizon ** 2, tau)
    if d is not None:
        return value_bound ** 2 * effective * d / n * _log_sq(n)
    if alpha is None:
        raise DomainError("Butuh d atau alpha")
    power = 2.0 * alpha / (2.0 * alpha + 1.0)
    return value_bound ** 2 * (effective / n) ** power * _log_sq(n)


@dataclass(frozen=True)
class SampleSizeCheck:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def sample_size_condition(
    R: float,
    delta: float,
    gamma_bar: float,
    zeta0: float,
    tau: float,
    K: int,
    n: int,
    episode_length: Optional[int] = None,
    c: float = 1.0,
) -> SampleSizeCheck:
    """
    R^2 delta^2 <= c (1 - gamma_bar) zeta0^2 / sqrt((tau* + K) n).

    Untuk data episode, tau* + K diganti min{L, tau* + K}.
    """
    blocks = tau + K if episode_length is None else min(episode_length, tau + K)
    return SampleSizeCheck(lhs=R ** 2 * delta ** 2, rhs=c * (1.0 - gamma_bar) * zeta0 ** 2 / math.sqrt(blocks * n))


def finite_rank_burn_in(n: int, tau: float, K: int, kappa: float, d: int, eff_horizon: float,
                        c: float = 1.0) -> SampleSizeCheck:
    """sqrt(n / (tau* + K)) >= c kappa^2 d H_bar, ditulis sebagai lhs <= rhs."""
    return SampleSizeCheck(lhs=c * kappa ** 2 * d * eff_horizon, rhs=math.sqrt(n / (tau + K)))


@dataclass(frozen=True)
class LookaheadAdvice:
    regime: str
    K: int
    td_lambda: float


def recommend_lookahead(horizon: float, tau: float, regime: str) -> LookaheadAdvice:
    """
    Saran look-ahead K (dan lambda setara dengan (1 - lambda)^{-1} = K).

    - uniform_reward: K ~ min{H, tau*}
    - bounded_value: K ~ min{H, sqrt(H + tau*)}
    - mild_dependence: K ~ sqrt(H tau*)
    """
    if regime == "uniform_reward":
        target = min(horizon, tau)
    elif regime == "bounded_value":
        target = min(horizon, math.sqrt(horizon + tau))
    elif regime == "mild_dependence":
        target = math.sqrt(horizon * tau)
    else:
        raise DomainError(f"Rezim look-ahead tidak dikenal: {regime}")
    K = max(1, math.ceil(target))
    return LookaheadAdvice(regime=regime, K=K, td_lambda=1.0 - 1.0 / K)


def predicted_slope(decay: str, exponent: Optional[float] = None) -> float:
    """Kemiringan log-log MSE terhadap n dari suku eps_m: -1 (rank-hingga/eksponensial), -e/(e+1) (poly j^-e)."""
    if decay in ("finite", "exp"):
        return -1.0
    if decay == "poly":
        if exponent is None or exponent <= 1.0:
            raise DomainError("Peluruhan polinomial membutuhkan eksponen > 1")
        return -exponent / (exponent + 1.0)
    raise DomainError(f"Keluarga peluruhan tidak dikenal: {decay}")


@dataclass(frozen=True, eq=False)
class TheoryReport:
    """
    Ringkasan teori untuk satu konfigurasi (MRP, kernel, w, n).

    Konstanta c, c0, c' bernilai 1 kecuali `c0` yang dipakai aturan ridge.
    """

    n: int
    K: int
    gamma: float
    gamma_bar: float
    mixing_time: float
    kappa: float
    b: float
    R: float
    zeta0: float
    delta_n: float
    ridge: float
    ridge_rule: str
    d_n: int
    sample_size: SampleSizeCheck
    bounds: Dict[str, float] = field(default_factory=dict)
    predicted_slope: float = float("nan")
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))

    def complexity(self, delta: float) -> float:
        return kernel_complexity(self.eigenvalues, delta)

    def scalars(self) -> Dict[str, float]:
        data = asdict(self)
        data.pop("eigenvalues")
        data.pop("bounds")
        data["sample_size_lhs"] = self.sample_size.lhs
        data["sample_size_rhs"] = self.sample_size.rhs
        data["sample_size_holds"] = self.sample_size.holds
        data.pop("sample_size")
        data.update({f"bound_{key}": value for key, value in self.bounds.items()})
        return data


def bracket_upper(spec: KernelSpec, n: int, R: float, zeta: float) -> float:
    """max{b, sqrt(J) kappa zeta / (sqrt(n) R)}; C(delta) <= sqrt(J) menjamin perpotongan."""
    return max(spec.b, math.sqrt(spec.truncation) * spec.kappa * zeta / (math.sqrt(n) * R))


def auto_ridge(
    spec: KernelSpec,
    report: PopulationReport,
    w: WeightVector,
    n: int,
    rule: str = "experiment",
    c0: float = 1.0,
) -> float:
    """lambda_n dari radius kritis dengan zeta = zeta_0 dan R dari oracle."""
    R = radius(report.correction_norm, report.reward_sup, spec.b)
    zeta = report.zeta0 if report.zeta0 > 0.0 else report.zeta0_tilde
    if zeta <= 0.0 or R <= 0.0:
        raise DomainError("Ridge otomatis membutuhkan zeta0 > 0 dan R > 0")
    delta = critical_radius(spec.eigenvalues, n, R, spec.kappa, zeta, bracket_upper(spec, n, R, zeta))
    return select_ridge(delta, report.gamma_bar, n, rule, c0)


def evaluate_bounds(
    spec: KernelSpec,
    report: PopulationReport,
    gamma: float,
    tau: float,
    K: int,
    R: float,
    n: int,
) -> Dict[str, float]:
    """
    Evaluasi seluruh batas atas untuk satu konfigurasi.

    Kernel polinomial memakai bentuk alpha (alpha = eksponen / 2); kernel lain
    memakai bentuk rank-hingga dengan d = J beserta syarat burn-in.
    """
    gamma_bar = report.gamma_bar
    value_norm = float(np.sqrt(np.sum(report.weights * report.value ** 2)))
    bounds: Dict[str, float] = {}
    if spec.decay == "poly":
        alpha = spec.exponent / 2.0
        alpha_terms = ub_alpha(report.sigma_m, report.residual_norm, spec.kappa, gamma_bar, tau, R, alpha, n)
        bounds["alpha"] = alpha_terms["bound"]
        bounds["alpha_simple"] = ub_alpha_simple(report.sigma_value, spec.kappa, gamma, R, alpha, n)
        bounds["uniform_reward"] = ub_uniform_reward(report.reward_sup, gamma, tau, n, alpha=alpha)
        bounds["bounded_value"] = ub_bounded_value(value_norm, gamma, tau, n, alpha=alpha)
        return bounds

    d = spec.truncation
    bounds["linear"] = ub_linear(report.sigma_m, report.residual_norm, spec.kappa, gamma_bar, tau, d, n)["bound"]
    bounds["linear_simple"] = ub_linear_simple(report.sigma_value, spec.kappa, gamma, d, n)
    bounds["uniform_reward"] = ub_uniform_reward(report.reward_sup, gamma, tau, n, d=d)
    bounds["bounded_value"] = ub_bounded_value(value_norm, gamma, tau, n, d=d)
    burn_in = finite_rank_burn_in(n, tau, K, spec.kappa, d, report.effective_horizon)
    bounds["burn_in_required"] = burn_in.lhs
    bounds["burn_in_available"] = burn_in.rhs
    return bounds


def build_theory_report(
    mrp: MrpInstance,
    spec: KernelSpec,
    w: WeightVector,
    n: int,
    ridge_rule: str = "experiment",
    c0: float = 1.0,
    episode_length: Optional[int] = None,
    report: Optional[PopulationReport] = None,
) -> TheoryReport:
    """
    Menyusun `TheoryReport`: radius kritis, ridge, dimensi statistik, dan seluruh batas.

    Args:
        mrp: Instans MRP.
        spec: Kernel.
        w: Bobot multi-langkah.
        n: Ukuran sampel.
        ridge_rule: "experiment" atau "theorem".
        c0: Konstanta aturan "theorem".
        episode_length: L untuk data episode.
        report: Laporan populasi yang sudah dihitung (opsional).
    """
    if report is None:
        report = noise_report(build_oracle(mrp, spec), w, episode_length=episode_length)
    gamma, gamma_bar, tau = mrp.gamma, report.gamma_bar, mrp.mixing_time
    R = radius(report.correction_norm, report.reward_sup, spec.b)
    zeta = report.zeta0 if report.zeta0 > 0.0 else report.zeta0_tilde
    if zeta <= 0.0:
        raise DomainError("Tingkat derau nol: instans tanpa fluktuasi tidak memiliki radius kritis")
    delta = critical_radius(spec.eigenvalues, n, R, spec.kappa, zeta, bracket_upper(spec, n, R, zeta))
    ridge = select_ridge(delta, gamma_bar, n, ridge_rule, c0)
    d_n = statistical_dimension(spec.eigenvalues, delta)

    bounds = evaluate_bounds(spec, report, gamma, tau, w.K, R, n)

    theory = TheoryReport(
        n=int(n),
        K=w.K,
        gamma=gamma,
        gamma_bar=gamma_bar,
        mixing_time=tau,
        kappa=spec.kappa,
        b=spec.b,
        R=R,
        zeta0=zeta,
        delta_n=delta,
        ridge=ridge,
        ridge_rule=ridge_rule,
        d_n=d_n,
        sample_size=sample_size_condition(R, delta, gamma_bar, zeta, tau, w.K, n, episode_length),
        bounds=bounds,
        predicted_slope=predicted_slope(spec.decay, spec.exponent),
        eigenvalues=spec.eigenvalues,
    )
    logger.info("Teori n=%d: delta_n=%.4g, lambda_n=%.4g, d_n=%d", n, delta, ridge, d_n)
    return theory
