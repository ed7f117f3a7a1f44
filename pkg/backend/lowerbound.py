# backend/lowerbound.py

"""Keluarga MRP sulit untuk batas bawah minimax beserta sertifikat numeriknya.

Isi modul:
- Model lokal tiga-state P(dp, dq) dengan distribusi stasioner, basis eigen, dan
  fungsi nilai terproyeksi ke span{phi1, phi2}.
- Packing vektor boolean berbobot U/2 dengan jarak Hamming ternormalisasi >= 1/4.
- Rantai kontinu pada 4U sel diadik yang menggabungkan U blok lokal dengan
  restart ke distribusi stasioner berpeluang varsigma = 1 / (8 tau_bar).
- Sertifikat: kendala keluarga, divergensi chi^2 dan KL lintasan, selisih nilai
  terproyeksi, serta identitas galat aproksimasi.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from backend.errors import DomainError, NumericalError
from backend.mrp import MrpInstance, check_discount, minorization_slack
from backend.oracle import build_oracle, conditional_variance, project, value_function
from backend.rkhs import KAPPA, KernelSpec, is_power_of_two, make_kernel_spec
from backend.theory import critical_radius, statistical_dimension

logger = logging.getLogger(__name__)

BASE_STATIONARY = np.array([0.25, 0.25, 0.5])
BASE_BASIS = np.array(
    [
        [1.0, 1.0, math.sqrt(2.0)],
        [1.0, 1.0, -math.sqrt(2.0)],
        [1.0, -1.0, 0.0],
    ]
)
STATIONARY_TOL = 1e-12
IDENTITY_TOL = 1e-10
EIGEN_TOL = 1e-12
LEXICOGRAPHIC_PACKING_LIMIT = 16
LOWER_BOUND_EXPONENT = 1.2
PERTURBATION_SCALE = 60.0
KL_DIVISOR = 45.0
GAP_CONSTANT = 10.0


def chi_square(p: np.ndarray, q: np.ndarray) -> float:
    """Divergensi Pearson chi^2(p || q) = sum (p - q)^2 / q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    support = q > 0.0
    if np.any(p[~support] > 0.0):
        return math.inf
    return float(np.sum((p[support] - q[support]) ** 2 / q[support]))


def expected_row_chi_square(weights: np.ndarray, first: np.ndarray, second: np.ndarray) -> float:
    """E_{i ~ weights}[chi^2(first(. | i) || second(. | i))]."""
    return float(sum(w * chi_square(a, b) for w, a, b in zip(weights, first, second) if w > 0.0))


def restart_probability(tau_bar: float) -> float:
    if tau_bar < 1.0:
        raise DomainError(f"tau_bar harus >= 1, diterima {tau_bar}")
    return 1.0 / (8.0 * tau_bar)


def lb_angle(sigma_bar: float, rho_perp: float, gamma: float, varsigma: float) -> float:
    """
    Sudut theta_bar yang membuat galat mis-spesifikasi mendekati rho_perp.

    theta_bar = pi/2 - arcsin{4 rho (1 - g + 5 g s - 4 g s^2) / (sigma g (1 - s)(1 - 4 s))} / 2.
    """
    if rho_perp == 0.0:
        return math.pi / 2
    if gamma <= 0.0:
        raise DomainError("Sudut batas bawah membutuhkan gamma > 0 bila rho_perp > 0")
    numerator = 4.0 * rho_perp * (1.0 - gamma + 5.0 * gamma * varsigma - 4.0 * gamma * varsigma ** 2)
    denominator = sigma_bar * gamma * (1.0 - varsigma) * (1.0 - 4.0 * varsigma)
    argument = numerator / denominator
    if not 0.0 <= argument <= 1.0:
        raise DomainError(f"Argumen arcsin {argument:.4g} di luar [0, 1]; rho_perp terlalu besar")
    return math.pi / 2 - 0.5 * math.asin(argument)


def delta_q_limit(varsigma: float, gamma: float, sigma_bar: float, rho_perp: float) -> float:
    """Batas atas dq agar model lokal tetap sah."""
    gamma_tilde = gamma * (1.0 - varsigma)
    slack = 1.0 - gamma_tilde + 4.0 * gamma_tilde * varsigma
    return min(
        1.0 / 3.0,
        slack / (2.0 * math.sqrt(2.0 * varsigma)),
        2.0 * math.sqrt(2.0) * rho_perp / (3.0 * sigma_bar) * slack,
    )


def local_transition(delta_p: float, delta_q: float, varsigma: float) -> np.ndarray:
    """Matriks P(dp, dq) berukuran 3 x 3."""
    stay = 0.5 - varsigma * (1.0 - delta_p)
    leave = varsigma * (1.0 + delta_p)
    return np.array(
        [
            [stay * (1.0 + delta_q), stay * (1.0 - delta_q), 2.0 * varsigma * (1.0 - delta_p)],
            [stay * (1.0 + delta_q), stay * (1.0 - delta_q), 2.0 * varsigma * (1.0 - delta_p)],
            [leave * (1.0 + delta_q), leave * (1.0 - delta_q), 1.0 - 2.0 * leave],
        ]
    )


def local_stationary(delta_p: float, delta_q: float) -> np.ndarray:
    return np.array(
        [
            0.25 * (1.0 + delta_p) * (1.0 + delta_q),
            0.25 * (1.0 + delta_p) * (1.0 - delta_q),
            0.5 * (1.0 - delta_p),
        ]
    )


@dataclass(frozen=True, eq=False)
class ThreeStateModel:
    """
    MRP lokal tiga-state dengan diskon gamma_tilde = gamma (1 - varsigma).

    Attributes:
        delta_p, delta_q: Parameter gangguan.
        varsigma: 1 / (8 tau_bar).
        gamma: Faktor diskon rantai penuh.
        sigma_bar, rho_perp: Parameter kelas.
        theta: Sudut theta_bar.
        transition: P(dp, dq).
        stationary: mu dengan mu^T P = mu^T.
    """

    delta_p: float
    delta_q: float
    varsigma: float
    gamma: float
    sigma_bar: float
    rho_perp: float
    theta: float
    transition: np.ndarray
    stationary: np.ndarray

    @property
    def tau_bar(self) -> float:
        return 1.0 / (8.0 * self.varsigma)

    @property
    def gamma_tilde(self) -> float:
        return self.gamma * (1.0 - self.varsigma)

    @property
    def omega_r(self) -> np.ndarray:
        scale = self.sigma_bar / 4.0
        return np.array([0.0, scale * math.cos(self.theta), scale * math.sin(self.theta)])

    @property
    def features(self) -> np.ndarray:
        """Kolom phi1, phi2 di R^3."""
        rotation = np.array(
            [[1.0, 0.0], [0.0, math.cos(self.theta)], [0.0, math.sin(self.theta)]]
        )
        return BASE_BASIS @ rotation

    @property
    def reward(self) -> np.ndarray:
        return self.sigma_bar / 4.0 * self.features[:, 1]

    @property
    def basis(self) -> np.ndarray:
        """Basis U ortonormal terhadap diag(mu); kolom untuk nilai eigen 1, 1 - 4 varsigma, 0."""
        p, q = self.delta_p, self.delta_q
        second = math.sqrt((1.0 - p) / (1.0 + p))
        return np.array(
            [
                [1.0, second, math.sqrt(2.0 * (1.0 - q) / ((1.0 + p) * (1.0 + q)))],
                [1.0, second, -math.sqrt(2.0 * (1.0 + q) / ((1.0 + p) * (1.0 - q)))],
                [1.0, -1.0 / second, 0.0],
            ]
        )

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([1.0, 1.0 - 4.0 * self.varsigma, 0.0])


def three_state(
    delta_p: float,
    delta_q: float,
    tau_bar: float,
    sigma_bar: float = 1.0,
    rho_perp: float = 0.0,
    gamma: float = 0.9,
) -> ThreeStateModel:
    """
    Membangun model lokal P(dp, dq) dan memverifikasi stasioneritasnya.

    Args:
        delta_p: dp di [0, 1/3].
        delta_q: dq di [0, `delta_q_limit`].
        tau_bar: tau_bar >= 1; varsigma = 1 / (8 tau_bar).
        sigma_bar: Skala imbalan (> 0).
        rho_perp: Target galat mis-spesifikasi (>= 0).
        gamma: Faktor diskon rantai penuh.

    Raises:
        DomainError: Parameter di luar daerah sah.
        NumericalError: mu^T P = mu^T gagal pada toleransi 1e-12.
    """
    check_discount(gamma)
    if sigma_bar <= 0.0 or rho_perp < 0.0:
        raise DomainError(f"Butuh sigma_bar > 0 dan rho_perp >= 0 (sigma_bar={sigma_bar}, rho_perp={rho_perp})")
    varsigma = restart_probability(tau_bar)
    if not 0.0 <= delta_p <= 1.0 / 3.0:
        raise DomainError(f"dp harus di [0, 1/3], diterima {delta_p}")
    limit = delta_q_limit(varsigma, gamma, sigma_bar, rho_perp)
    if not 0.0 <= delta_q <= limit + 1e-15:
        raise DomainError(f"dq harus di [0, {limit:.4g}], diterima {delta_q}")

    theta = lb_angle(sigma_bar, rho_perp, gamma, varsigma)
    transition = local_transition(delta_p, delta_q, varsigma)
    stationary = local_stationary(delta_p, delta_q)
    residual = float(np.max(np.abs(stationary @ transition - stationary)))
    if residual > STATIONARY_TOL or np.any(transition < 0.0):
        raise NumericalError("Model lokal tidak stasioner", {"residual": residual})
    return ThreeStateModel(
        delta_p=float(delta_p),
        delta_q=float(delta_q),
        varsigma=varsigma,
        gamma=float(gamma),
        sigma_bar=float(sigma_bar),
        rho_perp=float(rho_perp),
        theta=theta,
        transition=transition,
        stationary=stationary,
    )


def stationarity_residual(model: ThreeStateModel) -> float:
    return float(np.max(np.abs(model.stationary @ model.transition - model.stationary)))


def eigendecomp_check(model: ThreeStateModel) -> float:
    """Norma Frobenius P - U diag{1, 1 - 4 varsigma, 0} U^T diag(mu)."""
    basis = model.basis
    rebuilt = basis @ np.diag(model.eigenvalues) @ basis.T @ np.diag(model.stationary)
    return float(np.linalg.norm(model.transition - rebuilt))


def _project_local(features: np.ndarray, weights: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    weighted = weights[:, None] * features
    coefficients = np.linalg.solve(features.T @ weighted, weighted.T @ values)
    return features @ coefficients, coefficients


@dataclass(frozen=True, eq=False)
class ThreeStateValue:
    """V*, proyeksinya ke span{phi1, phi2} di L2(mu), dan pembanding rumus basis eigen."""

    value: np.ndarray
    projected: np.ndarray
    perp: np.ndarray
    coefficients: np.ndarray
    eigen_value: np.ndarray
    perp_norm: float

    @property
    def eigen_mismatch(self) -> float:
        return float(np.max(np.abs(self.value - self.eigen_value)))


def value_3state(model: ThreeStateModel) -> ThreeStateValue:
    """
    Fungsi nilai lokal V* = (I - gamma_tilde P)^{-1} r dan dekomposisinya.

    Rumus basis eigen: V* = U diag{(1 - g)^{-1}, (1 - g + 4 g varsigma)^{-1}, 1} U^T diag(mu) U0 omega_r.
    """
    g = model.gamma_tilde
    value = np.linalg.solve(np.eye(3) - g * model.transition, model.reward)

    basis = model.basis
    omega = basis.T @ np.diag(model.stationary) @ BASE_BASIS @ model.omega_r
    scaling = np.array([1.0 / (1.0 - g), 1.0 / (1.0 - g + 4.0 * g * model.varsigma), 1.0])
    eigen_value = basis @ (scaling * omega)

    projected, coefficients = _project_local(model.features, model.stationary, value)
    perp = value - projected
    result = ThreeStateValue(
        value=value,
        projected=projected,
        perp=perp,
        coefficients=coefficients,
        eigen_value=eigen_value,
        perp_norm=float(np.sqrt(np.sum(model.stationary * perp ** 2))),
    )
    if result.eigen_mismatch > IDENTITY_TOL * max(1.0, float(np.max(np.abs(value)))):
        logger.warning("Rumus basis eigen berbeda dari solusi langsung: %.2e", result.eigen_mismatch)
    return result


def block_value_gap(first: ThreeStateModel, second: ThreeStateModel, weights: Optional[np.ndarray] = None) -> float:
    """||V_H,1 - V_H,2|| pada L2(weights), default mu0 = (1/4, 1/4, 1/2)."""
    weights = BASE_STATIONARY if weights is None else np.asarray(weights, dtype=float)
    diff = value_3state(first).projected - value_3state(second).projected
    return float(np.sqrt(np.sum(weights * diff ** 2)))


def approximation_error_identity(first: ThreeStateModel, second: ThreeStateModel) -> np.ndarray:
    """
    Selisih kedua sisi <f, Delta_A>_{mu_1} = <f, V_perp,2>_{mu_1 - mu_2} untuk f = phi1, phi2.

    Delta_A = (Pi_{mu_1} - Pi_{mu_2}) V*_2.
    """
    value = value_3state(second)
    shifted, _ = _project_local(first.features, first.stationary, value.value)
    delta_a = shifted - value.projected
    features = first.features
    lhs = features.T @ (first.stationary * delta_a)
    rhs = features.T @ ((first.stationary - second.stationary) * value.perp)
    return lhs - rhs


def build_packing(U: int, seed: int = 0, max_draws: Optional[int] = None) -> np.ndarray:
    """
    Packing-1/4 serakah dari vektor {0,1}^U berbobot U/2.

    Untuk U <= 16 kandidat diperiksa dalam urutan leksikografis sehingga packing
    maksimal; di atasnya kandidat diundi dengan `seed`.

    Returns:
        Array (M, U) bernilai 0/1.

    Raises:
        DomainError: U bukan pangkat dua >= 2.
        NumericalError: log M < U / 11.
    """
    if U < 2 or not is_power_of_two(U):
        raise DomainError(f"U harus pangkat dua >= 2, diterima {U}")
    half = U // 2
    min_distance = math.ceil(U / 4)

    def candidates():
        if U <= LEXICOGRAPHIC_PACKING_LIMIT:
            for ones in itertools.combinations(range(U), half):
                vector = np.zeros(U, dtype=np.int8)
                vector[list(ones)] = 1
                yield vector
            return
        rng = np.random.default_rng(seed)
        draws = max_draws if max_draws is not None else 200 * U
        for _ in range(draws):
            vector = np.zeros(U, dtype=np.int8)
            vector[rng.choice(U, size=half, replace=False)] = 1
            yield vector

    result = np.empty((0, U), dtype=np.int8)
    for vector in tqdm(candidates(), desc="Packing", disable=U <= 8, leave=False):
        if result.shape[0] == 0 or int(np.min(np.sum(result != vector, axis=1))) >= min_distance:
            result = np.vstack([result, vector])

    size = result.shape[0]
    if math.log(size) < U / 11.0:
        raise NumericalError("Packing terlalu kecil", {"U": U, "M": size, "log_M": math.log(size)})
    logger.info("Packing U=%d: M=%d vektor (log M = %.3f >= U/11 = %.3f)", U, size, math.log(size), U / 11.0)
    return result


def hamming_distance(first: np.ndarray, second: np.ndarray) -> float:
    """Jarak Hamming ternormalisasi (1/U) sum |z - z'|."""
    return float(np.mean(np.asarray(first) != np.asarray(second)))


def min_packing_distance(packing: np.ndarray) -> float:
    """Jarak Hamming ternormalisasi terkecil antar baris berbeda."""
    rows = np.asarray(packing, dtype=float)
    if rows.shape[0] < 2:
        return 1.0
    overlap = rows @ rows.T
    weights = np.diag(overlap)
    distance = weights[:, None] + weights[None, :] - 2.0 * overlap
    np.fill_diagonal(distance, np.inf)
    return float(np.min(distance) / rows.shape[1])


@dataclass(frozen=True)
class HardnessParams:
    """
    Parameter kelas (sigma_bar, rho_perp, tau_bar) beserta gamma, n, dan jumlah blok U.

    `radius_bar` None berarti R_bar diambil dari batas bawahnya.
    """

    sigma_bar: float
    rho_perp: float
    tau_bar: float
    gamma: float
    n: int
    U: int
    radius_bar: Optional[float] = None

    @property
    def varsigma(self) -> float:
        return 1.0 / (8.0 * self.tau_bar)

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    @property
    def d_n(self) -> int:
        return 2 * self.U

    @property
    def sigma_m_bar(self) -> float:
        return self.horizon * self.sigma_bar

    @property
    def sigma_a_bar(self) -> float:
        return math.sqrt(self.tau_bar) * self.rho_perp

    @property
    def zeta_bar(self) -> float:
        return self.sigma_m_bar + self.sigma_a_bar

    @property
    def delta_p_max(self) -> float:
        return math.sqrt(self.d_n / (self.n * self.varsigma)) / PERTURBATION_SCALE

    @property
    def delta_q_max(self) -> float:
        return math.sqrt(self.d_n / self.n) / PERTURBATION_SCALE

    def violations(self) -> List[str]:
        """Daftar kendala yang dilanggar; kosong bila parameter sah."""
        problems = []
        if self.U < 2 or not is_power_of_two(self.U):
            return [f"U={self.U} harus pangkat dua >= 2"]
        if self.n < 1 or self.sigma_bar <= 0.0 or not 0.0 < self.gamma < 1.0:
            return ["Butuh n >= 1, sigma_bar > 0, dan gamma di (0, 1)"]
        if self.tau_bar < self.horizon:
            problems.append(f"tau_bar={self.tau_bar:.4g} < H={self.horizon:.4g}")
        lower, upper = admissible_rho_interval(self.sigma_bar, self.gamma, self.tau_bar, self.d_n, self.n)
        if self.rho_perp < lower:
            problems.append(f"rho_perp={self.rho_perp:.4g} < batas bawah {lower:.4g}")
        if self.rho_perp > upper:
            problems.append(f"rho_perp={self.rho_perp:.4g} > batas atas {upper:.4g}")
        if self.delta_p_max > 1.0 / 3.0:
            problems.append(f"dp={self.delta_p_max:.4g} > 1/3")
        limit = delta_q_limit(self.varsigma, self.gamma, self.sigma_bar, self.rho_perp)
        if self.delta_q_max > limit:
            problems.append(f"dq={self.delta_q_max:.4g} > batas {limit:.4g}")
        return problems


def admissible_rho_interval(sigma_bar: float, gamma: float, tau_bar: float, d: int, n: int) -> Tuple[float, float]:
    """[sigma H sqrt(d/n) / 50, sigma min{H, sqrt(tau_bar)} / 108]."""
    horizon = 1.0 / (1.0 - gamma)
    lower = sigma_bar * horizon * math.sqrt(d / n) / 50.0
    upper = sigma_bar * min(horizon, math.sqrt(tau_bar)) / 108.0
    return lower, upper


def radius_lower_bound(spec: KernelSpec, sigma_bar: float, rho_perp: float) -> float:
    """max{2 (sigma + rho) / sqrt(mu_2), sigma / (4 b)}."""
    if spec.truncation < 2:
        raise DomainError("Batas R_bar membutuhkan minimal dua nilai eigen")
    return max(2.0 * (sigma_bar + rho_perp) / math.sqrt(spec.eigenvalues[1]), sigma_bar / (4.0 * spec.b))


@dataclass(frozen=True)
class CellLayout:
    """Pemetaan 4U sel diadik ke (blok u, state lokal i, porsi sel dalam interval)."""

    block: np.ndarray
    state: np.ndarray
    share: np.ndarray

    @property
    def size(self) -> int:
        return int(self.block.size)


def cell_layout(U: int) -> CellLayout:
    """I_u^1 = sel u, I_u^2 = sel U + u, I_u^3 = sel 2U + 2u dan 2U + 2u + 1 (u mulai dari 0)."""
    blocks = np.arange(U)
    block = np.concatenate([blocks, blocks, np.repeat(blocks, 2)])
    state = np.concatenate([np.zeros(U, int), np.ones(U, int), np.full(2 * U, 2)])
    share = np.concatenate([np.ones(2 * U), np.full(2 * U, 0.5)])
    return CellLayout(block=block, state=state, share=share)


def lift_local(layout: CellLayout, transitions: np.ndarray) -> np.ndarray:
    """Kernel blok-diagonal P_tilde pada 4U sel dari matriks lokal (U, 3, 3)."""
    same_block = layout.block[:, None] == layout.block[None, :]
    local = transitions[layout.block[:, None], layout.state[:, None], layout.state[None, :]]
    return local * layout.share[None, :] * same_block


def lift_stationary(layout: CellLayout, stationaries: np.ndarray) -> np.ndarray:
    """Massa sel mu(u, i) * porsi / U."""
    U = stationaries.shape[0]
    return stationaries[layout.block, layout.state] * layout.share / U


def block_models(z: Sequence[int], params: HardnessParams) -> List[ThreeStateModel]:
    """Model lokal per blok: dp = z_u dp_max, dq = z_u dq_max."""
    return [
        three_state(
            bit * params.delta_p_max,
            bit * params.delta_q_max,
            params.tau_bar,
            params.sigma_bar,
            params.rho_perp,
            params.gamma,
        )
        for bit in np.asarray(z, dtype=int)
    ]


def build_full_mrp(
    z: Sequence[int],
    sigma_bar: float,
    rho_perp: float,
    tau_bar: float,
    gamma: float,
    n: int,
) -> MrpInstance:
    """
    Instans kontinu pada 4U sel untuk satu vektor packing.

    P(. | x) = (1 - varsigma) P_tilde(. | x) + varsigma mu, dengan P_tilde blok-diagonal.

    Raises:
        DomainError: Kendala parameter dilanggar; pesan memuat seluruh pelanggaran.
    """
    z = np.asarray(z, dtype=int)
    params = HardnessParams(sigma_bar, rho_perp, tau_bar, gamma, int(n), int(z.size))
    problems = params.violations()
    if problems:
        raise DomainError("Kendala batas bawah dilanggar: " + "; ".join(problems))
    if np.any((z != 0) & (z != 1)):
        raise DomainError("Vektor packing harus bernilai 0/1")

    models = block_models(z, params)
    layout = cell_layout(z.size)
    local = lift_local(layout, np.stack([m.transition for m in models]))
    stationary = lift_stationary(layout, np.stack([m.stationary for m in models]))
    varsigma = params.varsigma
    transition = (1.0 - varsigma) * local + varsigma * stationary[None, :]
    reward = models[0].reward[layout.state]
    return MrpInstance(
        transition=transition,
        reward_cells=reward,
        gamma=gamma,
        mixing_time=float(tau_bar),
        stationary=stationary,
        name="hard(z=" + "".join(str(int(b)) for b in z) + ")",
    )


@dataclass(frozen=True, eq=False)
class MemberSummary:
    """Besaran populasi satu anggota keluarga pada grid 4U sel."""

    value: np.ndarray
    projected: np.ndarray
    coordinates: np.ndarray
    stationary: np.ndarray
    local_kernel: np.ndarray
    hilbert_norm: float
    variance: float
    perp_norm: float
    minorization_slack: float
    chi2_to_base: float
    density_ratio_min: float
    density_ratio_max: float
    stationarity_residual: float


@dataclass(frozen=True, eq=False)
class HardFamily:
    """
    Keluarga MRP sulit yang diindeks packing.

    Attributes:
        params: Parameter kelas dan ukuran sampel.
        packing: Array (M, U) bernilai 0/1.
        spec: Kernel polinomial j^{-6/5} dengan J = 2U dan sudut theta_bar.
        radius_bar: R_bar.
        delta_n: Radius kritis dari ketaksamaan kritis batas bawah.
        nu_n: Radius chi^2 tau_bar R_bar^2 delta_n^2 / (400 zeta_bar^2).
        instances: Instans kontinu per anggota.
        models: Model lokal untuk bit 0 dan bit 1.
    """

    params: HardnessParams
    packing: np.ndarray
    spec: KernelSpec
    radius_bar: float
    delta_n: float
    nu_n: float
    instances: List[MrpInstance]
    models: Tuple[ThreeStateModel, ThreeStateModel]

    @cached_property
    def layout(self) -> CellLayout:
        return cell_layout(self.U)

    @cached_property
    def block_gaps(self) -> np.ndarray:
        """Tabel 2 x 2 selisih nilai terproyeksi lokal antar bit."""
        return np.array(
            [[block_value_gap(self.models[a], self.models[b]) for b in (0, 1)] for a in (0, 1)]
        )

    @property
    def M(self) -> int:
        return int(self.packing.shape[0])

    @property
    def U(self) -> int:
        return self.params.U

    @property
    def base_weights(self) -> np.ndarray:
        """Ukuran Lebesgue pada 4U sel (= mu0 per blok)."""
        return np.full(4 * self.U, 1.0 / (4 * self.U))

    def delta_p(self, m: int) -> np.ndarray:
        return self.packing[m] * self.params.delta_p_max

    def delta_q(self, m: int) -> np.ndarray:
        return self.packing[m] * self.params.delta_q_max

    @cached_property
    def summaries(self) -> List[MemberSummary]:
        return [summarize_member(self, m) for m in tqdm(range(self.M), desc="Anggota keluarga", leave=False)]

    def summary(self) -> Dict[str, float]:
        lower, upper = admissible_rho_interval(
            self.params.sigma_bar, self.params.gamma, self.params.tau_bar, self.params.d_n, self.params.n
        )
        return {
            "U": self.U,
            "M": self.M,
            "d_n": self.params.d_n,
            "statistical_dimension": statistical_dimension(self.spec.eigenvalues, self.delta_n),
            "delta_n": self.delta_n,
            "nu_n": self.nu_n,
            "radius_bar": self.radius_bar,
            "zeta_bar": self.params.zeta_bar,
            "rho_perp": self.params.rho_perp,
            "rho_lower": lower,
            "rho_upper": upper,
            "theta_bar": self.models[0].theta,
            "varsigma": self.params.varsigma,
            "delta_p": self.params.delta_p_max,
            "delta_q": self.params.delta_q_max,
        }


def hard_family(
    sigma_bar: float,
    tau_bar: float,
    gamma: float,
    n: int,
    U: int,
    rho_perp: Optional[float] = None,
    radius_bar: Optional[float] = None,
    seed: int = 0,
) -> HardFamily:
    """
    Menyusun keluarga sulit lengkap beserta anggaran nu_n.

    Args:
        sigma_bar: Skala deviasi standar sigma_bar.
        tau_bar: Waktu pencampuran tau_bar >= H.
        gamma: Faktor diskon di (0, 1).
        n: Ukuran sampel.
        U: Jumlah blok (pangkat dua); d_n = 2U.
        rho_perp: Default titik tengah interval yang diizinkan.
        radius_bar: Default batas bawah R_bar.
        seed: Seed packing acak untuk U > 16.
    """
    d = 2 * U
    if rho_perp is None:
        lower, upper = admissible_rho_interval(sigma_bar, gamma, tau_bar, d, n)
        rho_perp = 0.5 * (lower + upper)
    params = HardnessParams(sigma_bar, rho_perp, tau_bar, gamma, int(n), int(U), radius_bar)
    problems = params.violations()
    if problems:
        raise DomainError("Kendala batas bawah dilanggar: " + "; ".join(problems))

    logger.info("=" * 60)
    logger.info("Keluarga sulit: sigma=%.4g, rho=%.4g, tau=%.4g, gamma=%.4g, n=%d, U=%d",
                sigma_bar, rho_perp, tau_bar, gamma, n, U)
    models = (block_models([0], params)[0], block_models([1], params)[0])
    spec = make_kernel_spec("poly", theta=models[0].theta, truncation=d, exponent=LOWER_BOUND_EXPONENT)
    minimum_radius = radius_lower_bound(spec, sigma_bar, rho_perp)
    if radius_bar is None:
        radius_bar = minimum_radius
    elif radius_bar < minimum_radius:
        raise DomainError(f"R_bar={radius_bar:.4g} di bawah batas {minimum_radius:.4g}")

    delta_n = critical_radius(spec.eigenvalues, n, radius_bar, KAPPA, params.zeta_bar)
    nu_n = tau_bar * radius_bar ** 2 * delta_n ** 2 / (400.0 * params.zeta_bar ** 2)
    packing = build_packing(U, seed=seed)
    instances = [
        build_full_mrp(z, sigma_bar, rho_perp, tau_bar, gamma, n)
        for z in tqdm(packing, desc="Instans", leave=False)
    ]
    logger.info("Keluarga siap: M=%d, delta_n=%.4g, nu_n=%.4g", packing.shape[0], delta_n, nu_n)
    logger.info("=" * 60)
    return HardFamily(
        params=params,
        packing=packing,
        spec=spec,
        radius_bar=float(radius_bar),
        delta_n=float(delta_n),
        nu_n=float(nu_n),
        instances=instances,
        models=models,
    )


def summarize_member(family: HardFamily, m: int) -> MemberSummary:
    """Nilai, proyeksi, dan kendala kelas anggota ke-m dihitung pada grid 4U sel."""
    mrp = family.instances[m]
    oracle = build_oracle(mrp, family.spec, grid_size=mrp.base_grid_size)
    value = value_function(oracle.grid)
    projected, coordinates = project(oracle, value)
    stationary = oracle.weights
    ratio = stationary / family.base_weights
    local = lift_local(
        family.layout,
        np.stack([family.models[bit].transition for bit in family.packing[m]]),
    )
    return MemberSummary(
        value=value,
        projected=projected,
        coordinates=coordinates,
        stationary=stationary,
        local_kernel=local,
        hilbert_norm=float(np.linalg.norm(coordinates)),
        variance=conditional_variance(oracle.grid, value),
        perp_norm=oracle.norm(value - projected),
        minorization_slack=minorization_slack(mrp, measure=stationary, constant=family.params.varsigma),
        chi2_to_base=chi_square(stationary, family.base_weights),
        density_ratio_min=float(np.min(ratio)),
        density_ratio_max=float(np.max(ratio)),
        stationarity_residual=float(np.max(np.abs(stationary @ mrp.transition - stationary))),
    )


@dataclass(frozen=True)
class DivergenceCertificate:
    """
    Divergensi antar dua anggota.

    `*_blocks` adalah rata-rata divergensi lokal per blok; `*_bound` adalah batas
    analitik dari selisih parameter.
    """

    chi2_stationary: float
    chi2_transition: float
    kl_bound: float
    chi2_stationary_blocks: float
    chi2_transition_blocks: float
    chi2_stationary_bound: float
    chi2_transition_bound: float
    kl_bound_formula: float


def divergence_certificates(family: HardFamily, m: int, m_prime: int, n: Optional[int] = None) -> DivergenceCertificate:
    """
    chi^2 stasioner, chi^2 transisi lokal yang diharapkan, dan batas KL lintasan.

    KL(P_m^{1:n} || P_m'^{1:n}) <= (1 + 2 n s) chi^2(mu_m || mu_m') + 2 n (1 - s) E chi^2(P_tilde).
    """
    n = family.params.n if n is None else int(n)
    varsigma = family.params.varsigma
    first, second = family.summaries[m], family.summaries[m_prime]
    chi2_stationary = chi_square(first.stationary, second.stationary)
    chi2_transition = expected_row_chi_square(first.stationary, first.local_kernel, second.local_kernel)

    local_stationary_chi = []
    local_transition_chi = []
    for a, b in zip(family.packing[m], family.packing[m_prime]):
        model_a, model_b = family.models[a], family.models[b]
        local_stationary_chi.append(chi_square(model_a.stationary, model_b.stationary))
        local_transition_chi.append(
            expected_row_chi_square(model_a.stationary, model_a.transition, model_b.transition)
        )

    dp = family.delta_p(m) - family.delta_p(m_prime)
    dq = family.delta_q(m) - family.delta_q(m_prime)
    stationary_bound = float(np.mean(2.0 * dp ** 2 + 2.0 * dq ** 2))
    transition_bound = float(np.mean(12.0 * varsigma * dp ** 2 + 8.0 * dq ** 2))

    def kl(stationary_term: float, transition_term: float) -> float:
        return (1.0 + 2.0 * n * varsigma) * stationary_term + 2.0 * n * (1.0 - varsigma) * transition_term

    return DivergenceCertificate(
        chi2_stationary=chi2_stationary,
        chi2_transition=chi2_transition,
        kl_bound=kl(chi2_stationary, chi2_transition),
        chi2_stationary_blocks=float(np.mean(local_stationary_chi)),
        chi2_transition_blocks=float(np.mean(local_transition_chi)),
        chi2_stationary_bound=stationary_bound,
        chi2_transition_bound=transition_bound,
        kl_bound_formula=kl(stationary_bound, transition_bound),
    )


def value_gap(family: HardFamily, m: int, m_prime: int) -> float:
    """||V*_H,m - V*_H,m'|| pada L2 Lebesgue."""
    diff = family.summaries[m].projected - family.summaries[m_prime].projected
    return float(np.sqrt(np.sum(family.base_weights * diff ** 2)))


def block_gap_aggregate(family: HardFamily, m: int, m_prime: int) -> float:
    """sqrt((1/U) sum_u ||V_H^(u),m - V_H^(u),m'||_{mu0}^2) dari model lokal."""
    gaps = family.block_gaps[family.packing[m], family.packing[m_prime]]
    return float(math.sqrt(np.mean(gaps ** 2)))


@dataclass(frozen=True)
class Certificate:
    """Satu pemeriksaan numerik value <= bound, value >= bound, atau value > bound menurut `sense`."""

    check: str
    value: float
    bound: float
    sense: str = "<="
    tol: float = 0.0

    @property
    def slack(self) -> float:
        return self.bound - self.value if self.sense == "<=" else self.value - self.bound

    @property
    def passed(self) -> bool:
        if self.sense == ">":
            return bool(self.slack > 0.0)
        return bool(self.slack >= -self.tol)

    def to_row(self) -> Dict[str, object]:
        return {
            "check": self.check,
            "value": self.value,
            "bound": self.bound,
            "slack": self.slack,
            "passed": self.passed,
        }


def _pairs(M: int, max_pairs: int, seed: int) -> List[Tuple[int, int]]:
    pairs = list(itertools.combinations(range(M), 2))
    if len(pairs) <= max_pairs:
        return pairs
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pairs), size=max_pairs, replace=False)
    return [pairs[i] for i in sorted(chosen)]


def verify_family(family: HardFamily, max_pairs: int = 5000, seed: int = 0) -> List[Certificate]:
    """
    Seluruh sertifikat numerik keluarga sulit.

    Pemeriksaan per anggota diambil sebagai maksimum/minimum atas anggota; pemeriksaan
    per pasangan memakai seluruh pasangan bila jumlahnya <= `max_pairs`, selain itu
    sampel acak ber-seed.
    """
    params = family.params
    summaries = family.summaries
    base, perturbed = family.models
    certificates: List[Certificate] = []

    # packing
    weights = family.packing.sum(axis=1)
    certificates += [
        Certificate("packing_log_size", math.log(family.M), family.U / 11.0, ">="),
        Certificate("packing_min_distance", min_packing_distance(family.packing), 0.25, ">="),
        Certificate("packing_weight_deviation", float(np.max(np.abs(weights - family.U / 2))), 0.0),
    ]

    # model lokal
    certificates += [
        Certificate(
            "stationarity_residual",
            max(stationarity_residual(base), stationarity_residual(perturbed),
                max(s.stationarity_residual for s in summaries)),
            1e-10,
        ),
        Certificate(
            "eigendecomposition_residual",
            max(eigendecomp_check(base), eigendecomp_check(perturbed)),
            EIGEN_TOL,
        ),
        Certificate(
            "eigen_value_formula",
            max(value_3state(base).eigen_mismatch, value_3state(perturbed).eigen_mismatch),
            IDENTITY_TOL,
        ),
        Certificate(
            "approximation_error_identity",
            max(
                float(np.max(np.abs(approximation_error_identity(base, perturbed)))),
                float(np.max(np.abs(approximation_error_identity(perturbed, base)))),
            ),
            IDENTITY_TOL,
        ),
    ]

    reward_ratio = max(float(np.max(np.abs(mrp.reward_cells))) for mrp in family.instances) / family.spec.b
    # kendala kelas per anggota
    certificates += [
        Certificate("radius_bar", max(max(s.hilbert_norm for s in summaries), reward_ratio), family.radius_bar),
        Certificate("variance_bar", max(s.variance for s in summaries), params.sigma_bar ** 2),
        Certificate("perp_norm_bar", max(s.perp_norm for s in summaries), params.rho_perp),
        Certificate("minorization", min(s.minorization_slack for s in summaries), 0.0, ">=", tol=1e-12),
        Certificate("chi2_radius", max(s.chi2_to_base for s in summaries), family.nu_n),
        Certificate("density_ratio_min", min(s.density_ratio_min for s in summaries), 0.5, ">="),
        Certificate("density_ratio_max", max(s.density_ratio_max for s in summaries), 2.0),
    ]

    # per pasangan
    kl_direct, kl_formula, aggregation, gap_upper, gap_lower, gap_identity = [], [], [], [], [], []
    for a, b in tqdm(_pairs(family.M, max_pairs, seed), desc="Pasangan", leave=False):
        divergence = divergence_certificates(family, a, b)
        kl_direct.append(divergence.kl_bound)
        kl_formula.append(divergence.kl_bound_formula)
        aggregation.append(
            max(
                abs(divergence.chi2_stationary - divergence.chi2_stationary_blocks),
                abs(divergence.chi2_transition - divergence.chi2_transition_blocks),
            )
        )
        gap = value_gap(family, a, b)
        rms_dq = float(np.sqrt(np.mean((family.delta_q(a) - family.delta_q(b)) ** 2)))
        gap_upper.append(gap / (params.zeta_bar * rms_dq))
        gap_lower.append(gap)
        gap_identity.append(abs(gap - block_gap_aggregate(family, a, b)) / max(gap, 1e-300))

    budget = params.d_n / KL_DIVISOR
    local_gap = block_value_gap(base, perturbed) / (params.zeta_bar * params.delta_q_max)
    certificates += [
        Certificate("kl_trajectory", max(kl_direct), budget),
        Certificate("kl_trajectory_formula", max(kl_formula), budget),
        Certificate("block_aggregation", max(aggregation), IDENTITY_TOL),
        Certificate("value_gap_positive", min(gap_lower), 0.0, ">"),
        Certificate("value_gap_upper_ratio", max(gap_upper), GAP_CONSTANT),
        Certificate("value_gap_block_identity", max(gap_identity), 1e-8),
        Certificate("block_gap_ratio", local_gap, GAP_CONSTANT),
    ]
    failed = [c.check for c in certificates if not c.passed]
    if failed:
        logger.warning("Sertifikat gagal: %s", ", ".join(failed))
    else:
        logger.info("Seluruh %d sertifikat lolos", len(certificates))
    return certificates


def certificate_frame(certificates: Sequence[Certificate]) -> pd.DataFrame:
    """Tabel sertifikat dengan kolom check, value, bound, slack, passed."""
    return pd.DataFrame([c.to_row() for c in certificates], columns=["check", "value", "bound", "slack", "passed"])
