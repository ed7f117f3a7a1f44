# backend/oracle.py

"""Besaran populasi eksak pada MRP yang didiskretisasi.

Fokus modul:
- Fungsi nilai V*, operator Bellman k-langkah dan berbobot.
- Proyeksi L2(mu) ke r + H dan titik tetap terproyeksi theta*.
- Fungsional derau: sigma(V*), sigma_m(theta*), sigma_a(theta*), zeta_0, dan zeta_0 tilde.
- Operator populasi bentuk mundur/maju untuk verifikasi A theta* = b.

Semua fungsi bernilai konstan sepotong-sepotong pada grid, sehingga integral
terhadap mu dihitung tepat sebagai jumlah berbobot.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg

from backend.errors import DomainError, NumericalError
from backend.estimator import WeightVector
from backend.mrp import GridMrp, MrpInstance, discretize
from backend.rkhs import KernelSpec

logger = logging.getLogger(__name__)

MIN_ORACLE_GRID = 64


@dataclass(frozen=True, eq=False)
class OracleGrid:
    """MRP terdiskretisasi beserta koordinat fitur varphi pada setiap sel (m, J)."""

    grid: GridMrp
    spec: KernelSpec
    features: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def gamma(self) -> float:
        return self.grid.gamma

    def norm(self, values: np.ndarray) -> float:
        """Norma L2(mu)."""
        return float(np.sqrt(np.sum(self.grid.weights * np.asarray(values) ** 2)))

    def sup_norm(self, values: np.ndarray) -> float:
        """Norma sup atas sel bermassa positif."""
        support = self.grid.weights > 0.0
        return float(np.max(np.abs(np.asarray(values)[support])))

    def gram(self) -> np.ndarray:
        """G = Phi^T D Phi."""
        return self.features.T @ (self.grid.weights[:, None] * self.features)


def oracle_grid_size(mrp: MrpInstance, spec: KernelSpec, minimum: int = MIN_ORACLE_GRID) -> int:
    return max(spec.grid_size, minimum, mrp.base_grid_size)


def build_oracle(mrp: MrpInstance, spec: KernelSpec, grid_size: Optional[int] = None) -> OracleGrid:
    """Diskretisasi MRP pada grid yang cukup halus untuk imbalan dan seluruh fitur."""
    size = oracle_grid_size(mrp, spec) if grid_size is None else int(grid_size)
    if size < spec.grid_size:
        raise DomainError(f"Grid oracle {size} lebih kasar dari grid fitur {spec.grid_size}")
    grid = discretize(mrp, size)
    features = spec.table_on(size).T * spec.sqrt_eigenvalues
    return OracleGrid(grid=grid, spec=spec, features=features)


def value_function(grid: GridMrp) -> np.ndarray:
    """V* = (I - gamma P)^{-1} r."""
    system = np.eye(grid.size) - grid.gamma * grid.transition
    return linalg.solve(system, grid.reward)


def bellman_apply(grid: GridMrp, f: np.ndarray, k: int) -> np.ndarray:
    """B^k f = sum_{l<k} gamma^l P^l r + gamma^k P^k f."""
    if k < 1:
        raise DomainError(f"Orde operator Bellman minimal 1, diterima {k}")
    result = np.asarray(f, dtype=float)
    for _ in range(k):
        result = grid.reward + grid.gamma * (grid.transition @ result)
    return result


def discounted_reward_sum(grid: GridMrp, w: WeightVector) -> np.ndarray:
    """g = sum_{l=0}^{K-1} W_l gamma^l P^l r, bagian B^w yang tidak bergantung pada f."""
    tails = w.tail_sums()
    g = np.zeros(grid.size)
    propagated = grid.reward.copy()
    for ell in range(w.K):
        g += tails[ell] * grid.gamma ** ell * propagated
        propagated = grid.transition @ propagated
    return g


def bootstrap_operator(grid: GridMrp, w: WeightVector, values: np.ndarray) -> np.ndarray:
    """M f = sum_k w_k gamma^k P^k f; `values` boleh berbentuk (m,) atau (m, J)."""
    result = np.zeros_like(values, dtype=float)
    propagated = np.asarray(values, dtype=float)
    for coefficient in w.bootstrap_coefficients(grid.gamma):
        propagated = grid.transition @ propagated
        result += coefficient * propagated
    return result


def weighted_bellman(grid: GridMrp, f: np.ndarray, w: WeightVector) -> np.ndarray:
    """B^w f = sum_k w_k B^k f = g + M f."""
    return discounted_reward_sum(grid, w) + bootstrap_operator(grid, w, f)


def project(oracle: OracleGrid, f: np.ndarray, offset: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Proyeksi L2(mu) ke offset + span(varphi).

    Returns:
        (values, coordinates) dengan values = offset + Phi c.
    """
    base = np.zeros(oracle.grid.size) if offset is None else np.asarray(offset, dtype=float)
    rhs = oracle.features.T @ (oracle.weights * (np.asarray(f, dtype=float) - base))
    coordinates = linalg.solve(oracle.gram(), rhs, assume_a="pos")
    return base + oracle.features @ coordinates, coordinates


@dataclass(frozen=True, eq=False)
class FixedPoint:
    values: np.ndarray
    coordinates: np.ndarray


def projected_fixed_point(oracle: OracleGrid, w: WeightVector) -> FixedPoint:
    """
    theta* = r + Phi c dengan Phi^T D (B^w theta* - theta*) = 0.

    Sistem (G - Phi^T D M Phi) c = Phi^T D (B^w r - r) dengan M = sum_k w_k gamma^k P^k.
    """
    grid = oracle.grid
    if w.effective_discount(grid.gamma) >= 1.0:
        raise DomainError("Diskon efektif harus < 1")
    weighted = grid.weights[:, None] * oracle.features
    system = oracle.gram() - weighted.T @ bootstrap_operator(grid, w, oracle.features)
    rhs = weighted.T @ (weighted_bellman(grid, grid.reward, w) - grid.reward)
    try:
        coordinates = linalg.solve(system, rhs)
    except linalg.LinAlgError as exc:
        raise NumericalError("Sistem titik tetap terproyeksi singular", {"error": str(exc)}) from exc
    return FixedPoint(values=grid.reward + oracle.features @ coordinates, coordinates=coordinates)


def fixed_point_residual(oracle: OracleGrid, w: WeightVector, theta: np.ndarray) -> float:
    """||Pi_H (B^w theta - theta)||_mu."""
    residual = weighted_bellman(oracle.grid, theta, w) - theta
    projected, _ = project(oracle, residual)
    return oracle.norm(projected)


def contraction_ratio(grid: GridMrp, w: WeightVector, f: np.ndarray, g: np.ndarray) -> float:
    """||B^w f - B^w g||_mu / ||f - g||_mu."""
    weights = grid.weights
    diff = weighted_bellman(grid, f, w) - weighted_bellman(grid, g, w)
    base = np.sqrt(np.sum(weights * (np.asarray(f) - np.asarray(g)) ** 2))
    return float(np.sqrt(np.sum(weights * diff ** 2)) / base)


def conditional_variance(grid: GridMrp, values: np.ndarray) -> float:
    """E_mu[Var[f(X') | X]] = sum_x mu(x) (P f^2 - (P f)^2)(x)."""
    values = np.asarray(values, dtype=float)
    variance = grid.transition @ values ** 2 - (grid.transition @ values) ** 2
    return float(np.sum(grid.weights * np.clip(variance, 0.0, None)))


def bellman_fluctuation(grid: GridMrp, theta: np.ndarray, w: WeightVector) -> float:
    """
    sigma_m(theta) = sum_{l=1}^{K} gamma^l sqrt(E Var[g_l(X') | X]),
    dengan g_l = sum_{k >= l} w_k B^{k-l} theta.
    """
    iterates = [np.asarray(theta, dtype=float)]
    for _ in range(w.K - 1):
        iterates.append(grid.reward + grid.gamma * (grid.transition @ iterates[-1]))
    total = 0.0
    for ell in range(1, w.K + 1):
        g_ell = sum(w.weights[k - 1] * iterates[k - ell] for k in range(ell, w.K + 1))
        total += grid.gamma ** ell * math.sqrt(conditional_variance(grid, g_ell))
    return total


def approximation_noise(
    residual_norm: float,
    residual_sup: float,
    mixing_time: float,
    episode_length: Optional[int] = None,
) -> float:
    """
    sigma_a = 2 sqrt(tau*) ||res||_mu (1 + log(||res||_inf / ||res||_mu) / 4).

    Untuk data episode sepanjang L faktor sqrt(tau*)(...) diganti min{sqrt(L), sqrt(tau*)(...)}.
    """
    if residual_norm <= 0.0:
        return 0.0
    mixing_factor = math.sqrt(mixing_time) * (1.0 + 0.25 * math.log(max(residual_sup / residual_norm, 1.0)))
    if episode_length is not None:
        mixing_factor = min(math.sqrt(episode_length), mixing_factor)
    return 2.0 * residual_norm * mixing_factor


@dataclass(frozen=True, eq=False)
class PopulationReport:
    """
    Ringkasan besaran populasi satu instans.

    `zeta0_tilde` memakai prefaktor c' = 1.
    """

    value: np.ndarray
    theta_star: np.ndarray
    theta_coordinates: np.ndarray
    weights: np.ndarray
    gamma: float
    gamma_bar: float
    mixing_time: float
    v_perp_norm: float
    theta_gap: float
    residual_norm: float
    residual_sup: float
    fixed_point_residual: float
    sigma_value: float
    sigma_m: float
    sigma_a: float
    zeta0: float
    zeta0_tilde: float
    correction_norm: float
    reward_sup: float
    episode_length: Optional[int] = None

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    @property
    def effective_horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma_bar)

    def scalars(self) -> Dict[str, float]:
        """Nilai-nilai skalar untuk dicetak atau ditulis ke laporan."""
        data = asdict(self)
        for key in ("value", "theta_star", "theta_coordinates", "weights"):
            data.pop(key)
        data["horizon"] = self.horizon
        data["effective_horizon"] = self.effective_horizon
        return data


def noise_report(oracle: OracleGrid, w: WeightVector, episode_length: Optional[int] = None) -> PopulationReport:
    """
    Menghitung seluruh fungsional derau dengan jumlah variansi bersyarat eksak pada grid.

    Args:
        oracle: Grid oracle.
        w: Bobot multi-langkah.
        episode_length: L untuk varian multi-episode dari sigma_a.
    """
    grid = oracle.grid
    gamma = grid.gamma
    gamma_bar = w.effective_discount(gamma)
    horizon = 1.0 / (1.0 - gamma)
    eff_horizon = 1.0 / (1.0 - gamma_bar)

    value = value_function(grid)
    v_hilbert, _ = project(oracle, value, offset=grid.reward)
    v_perp_norm = oracle.norm(value - v_hilbert)

    fixed = projected_fixed_point(oracle, w)
    residual = weighted_bellman(grid, fixed.values, w) - fixed.values
    residual_norm = oracle.norm(residual)
    residual_sup = oracle.sup_norm(residual) if residual_norm > 0.0 else 0.0

    sigma_value = math.sqrt(conditional_variance(grid, value))
    sigma_m = bellman_fluctuation(grid, fixed.values, w)
    sigma_a = approximation_noise(residual_norm, residual_sup, grid.mixing_time, episode_length)
    zeta0 = eff_horizon * (sigma_m + sigma_a)
    zeta0_tilde = horizon * sigma_value + eff_horizon * math.sqrt(max(horizon, grid.mixing_time)) * v_perp_norm

    report = PopulationReport(
        value=value,
        theta_star=fixed.values,
        theta_coordinates=fixed.coordinates,
        weights=grid.weights,
        gamma=gamma,
        gamma_bar=gamma_bar,
        mixing_time=grid.mixing_time,
        v_perp_norm=v_perp_norm,
        theta_gap=oracle.norm(fixed.values - value),
        residual_norm=residual_norm,
        residual_sup=residual_sup,
        fixed_point_residual=fixed_point_residual(oracle, w, fixed.values),
        sigma_value=sigma_value,
        sigma_m=sigma_m,
        sigma_a=sigma_a,
        zeta0=zeta0,
        zeta0_tilde=zeta0_tilde,
        correction_norm=float(np.linalg.norm(fixed.coordinates)),
        reward_sup=oracle.sup_norm(grid.reward),
        episode_length=episode_length,
    )
    logger.debug("Laporan populasi: zeta0=%.4g, sigma_m=%.4g, sigma_a=%.4g", zeta0, sigma_m, sigma_a)
    return report


@dataclass(frozen=True)
class BoundCheck:
    """Satu ketaksamaan lhs <= rhs; `applicable` False bila prasyaratnya tidak terpenuhi."""

    name: str
    lhs: float
    rhs: float
    applicable: bool = True
    tol: float = 1e-10

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.lhs <= self.rhs + self.tol * max(1.0, abs(self.rhs))


def check_sigma_bounds(report: PopulationReport, gamma: float, gamma_bar: float) -> List[BoundCheck]:
    """
    Mengevaluasi kedua sisi ketaksamaan derau.

    - sigma_m(theta*) <= g sigma(V*) + sqrt(g) ||theta* - V*||, g = gamma (1 - gamma_bar) / (1 - gamma);
    - ||B^w theta* - theta*|| <= 2 ||V_perp||;
    - ||theta* - V*|| <= sqrt(H_bar) ||V_perp||;
    - ||V_perp|| <= sqrt(tau*) sigma(V*), hanya bila tau* <= H.
    """
    factor = gamma * (1.0 - gamma_bar) / (1.0 - gamma)
    horizon = 1.0 / (1.0 - gamma)
    return [
        BoundCheck(
            "sigma_m",
            report.sigma_m,
            factor * report.sigma_value + math.sqrt(factor) * report.theta_gap,
        ),
        BoundCheck("bellman_residual", report.residual_norm, 2.0 * report.v_perp_norm),
        BoundCheck("fixed_point_gap", report.theta_gap, math.sqrt(1.0 / (1.0 - gamma_bar)) * report.v_perp_norm),
        BoundCheck(
            "perp_vs_variance",
            report.v_perp_norm,
            math.sqrt(report.mixing_time) * report.sigma_value,
            applicable=report.mixing_time <= horizon,
        ),
    ]


def error_decomposition(oracle: OracleGrid, values: np.ndarray, value: np.ndarray) -> Tuple[float, float, float]:
    """
    (||theta - V*||^2, ||theta - V_H||^2, ||V_perp||^2) untuk theta di r + H.

    Untuk theta di r + H berlaku suku pertama = suku kedua + suku ketiga.
    """
    v_hilbert, _ = project(oracle, value, offset=oracle.grid.reward)
    return (
        oracle.norm(values - value) ** 2,
        oracle.norm(values - v_hilbert) ** 2,
        oracle.norm(value - v_hilbert) ** 2,
    )


@dataclass(frozen=True, eq=False)
class PopulationOperators:
    """
    Operator populasi dalam koordinat fitur.

    Attributes:
        backward: A = sum_k W_k gamma^k Phi^T D P^k (I - gamma P) Phi.
        forward: Sigma_cov - Cr^(w) = G - sum_k w_k gamma^k Phi^T D P^k Phi.
        backward_target: b - A r = sum_k W_k gamma^k Phi^T D P^k gamma P r.
    """

    backward: np.ndarray
    forward: np.ndarray
    backward_target: np.ndarray


def population_operators(oracle: OracleGrid, w: WeightVector) -> PopulationOperators:
    grid = oracle.grid
    gamma = grid.gamma
    tails = w.tail_sums()
    weighted = grid.weights[:, None] * oracle.features
    difference = oracle.features - gamma * (grid.transition @ oracle.features)
    next_reward = gamma * (grid.transition @ grid.reward)

    backward = np.zeros((oracle.spec.truncation, oracle.spec.truncation))
    target = np.zeros(oracle.spec.truncation)
    forward = oracle.gram()
    left = weighted.T
    for k in range(w.K):
        # left = Phi^T D P^k
        backward += tails[k] * gamma ** k * (left @ difference)
        target += tails[k] * gamma ** k * (left @ next_reward)
        left = left @ grid.transition
        forward -= w.weights[k] * gamma ** (k + 1) * (left @ oracle.features)
    return PopulationOperators(backward=backward, forward=forward, backward_target=target)
