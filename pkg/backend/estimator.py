# backend/estimator.py

"""Estimator LSTD kernel multi-langkah bentuk maju (forward).

Fokus modul:
- `WeightVector` untuk operator Bellman berbobot (K-langkah dan TD(lambda) terpotong).
- Matriks kernel K_cov, K_cr dan vektor imbalan majemuk y dari data lintasan.
- Penyelesaian sistem (K_cov + lambda I - K_cr) alpha = y, atau padanannya
  dalam koordinat fitur berdimensi J.
- Evaluasi estimasi dan galat L2(mu) pada grid diadik.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from backend.errors import DomainError, NumericalError
from backend.mrp import Dataset, check_discount
from backend.rkhs import MAX_TRUNCATION, KernelSpec, feature_map, gram_matrix

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-12
CONDITION_LIMIT = 1e14
RESIDUAL_TOL = 1e-10
SOLVE_PATHS = ("auto", "kernel", "features")


@dataclass(frozen=True, eq=False)
class WeightVector:
    """
    Bobot w_1..w_K pada simplex untuk operator B^w = sum_k w_k B^k.

    Attributes:
        weights: Vektor w (panjang K), nonnegatif dan berjumlah 1.
        label: Nama skema untuk laporan, misalnya "K=5" atau "TD(0.5),K=4".
    """

    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.array(self.weights, dtype=float).reshape(-1)
        if values.size == 0:
            raise DomainError("Vektor bobot tidak boleh kosong")
        if np.any(values < 0.0):
            raise DomainError("Bobot multi-langkah harus nonnegatif")
        if abs(values.sum() - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"Bobot harus berjumlah 1, diterima {values.sum():.15f}")
        values.setflags(write=False)
        object.__setattr__(self, "weights", values)
        if not self.label:
            object.__setattr__(self, "label", f"K={values.size}")

    @property
    def K(self) -> int:
        return int(self.weights.size)

    def tail_sums(self) -> np.ndarray:
        """W_k = sum_{l > k} w_l untuk k = 0..K (W_0 = 1, W_K = 0)."""
        tails = np.cumsum(self.weights[::-1])[::-1]
        return np.append(tails, 0.0)

    def effective_discount(self, gamma: float) -> float:
        return effective_discount(self, gamma)

    def effective_horizon(self, gamma: float) -> float:
        """H_bar = 1 / (1 - gamma_bar)."""
        return 1.0 / (1.0 - self.effective_discount(gamma))

    def return_coefficients(self, gamma: float) -> np.ndarray:
        """c_l = gamma^l W_{l-1}, koefisien r(x_{t+l}) pada imbalan majemuk, l = 1..K."""
        powers = gamma ** np.arange(1, self.K + 1)
        return powers * self.tail_sums()[: self.K]

    def bootstrap_coefficients(self, gamma: float) -> np.ndarray:
        """w_k gamma^k untuk k = 1..K."""
        return self.weights * gamma ** np.arange(1, self.K + 1)


def make_kstep_weights(K: int) -> WeightVector:
    """Operator Bellman K-langkah murni: w = e_K."""
    if K < 1:
        raise DomainError(f"Look-ahead K minimal 1, diterima {K}")
    weights = np.zeros(int(K))
    weights[-1] = 1.0
    return WeightVector(weights, label=f"K={K}")


def make_td_lambda_weights(K: int, lam: float) -> WeightVector:
    """
    TD(lambda) terpotong: w_k = (1 - lambda) lambda^{k-1} / (1 - lambda^K).

    Args:
        K: Panjang pemotongan (>= 1).
        lam: lambda di [0, 1).
    """
    if K < 1:
        raise DomainError(f"Look-ahead K minimal 1, diterima {K}")
    if not 0.0 <= lam < 1.0:
        raise DomainError(f"lambda harus di [0, 1), diterima {lam}")
    weights = lam ** np.arange(int(K), dtype=float)
    weights /= weights.sum()
    return WeightVector(weights, label=f"TD({lam:g}),K={K}")


def effective_discount(w: WeightVector, gamma: float) -> float:
    """gamma_bar = sum_k w_k gamma^k."""
    check_discount(gamma)
    return float(np.sum(w.bootstrap_coefficients(gamma)))


def td_lambda_discount(K: int, lam: float, gamma: float) -> float:
    """Bentuk tertutup gamma(1-lambda)/(1-lambda gamma) * (1-(lambda gamma)^K)/(1-lambda^K)."""
    check_discount(gamma)
    return gamma * (1.0 - lam) / (1.0 - lam * gamma) * (1.0 - (lam * gamma) ** K) / (1.0 - lam ** K)


def td_lambda_limit_discount(lam: float, gamma: float) -> float:
    """Limit K -> tak hingga dari diskon efektif TD(lambda)."""
    check_discount(gamma)
    return gamma * (1.0 - lam) / (1.0 - lam * gamma)


def transition_windows(data: Dataset, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Indeks jangkar t dan indeks ke depan t+1..t+K yang tidak melintasi batas episode.

    Returns:
        (anchors, ahead) berbentuk (n_eff,) dan (n_eff, K).

    Raises:
        DomainError: K melebihi cakrawala data.
    """
    if data.mode == "iid_pairs" and K > 1:
        raise DomainError("Pasangan i.i.d. hanya mendukung K = 1")
    if data.mode == "episodes" and data.episode_length < K + 1:
        raise DomainError(f"Panjang episode {data.episode_length} kurang dari K+1 = {K + 1}")

    anchors = [np.arange(start, stop - K) for start, stop in data.segment_bounds() if stop - start > K]
    if not anchors:
        raise DomainError(f"Data berukuran n={data.n} tidak cukup untuk K={K}")
    anchor_index = np.concatenate(anchors)
    ahead = anchor_index[:, None] + np.arange(1, K + 1)[None, :]
    return anchor_index, ahead


@dataclass(frozen=True, eq=False)
class KernelMatrices:
    """K_cov, K_cr, y beserta jangkar yang membentuknya."""

    cov: np.ndarray
    cross: np.ndarray
    y: np.ndarray
    anchors: np.ndarray
    spec: KernelSpec
    reward_fn: Callable[[np.ndarray], np.ndarray]

    @property
    def n_eff(self) -> int:
        return int(self.anchors.size)


def _compound_returns(data: Dataset, ahead: np.ndarray, w: WeightVector, gamma: float) -> np.ndarray:
    return data.rewards[ahead] @ w.return_coefficients(gamma)


def require_reward_fn(data: Dataset) -> Callable[[np.ndarray], np.ndarray]:
    if data.reward_fn is None:
        raise DomainError("Dataset tidak membawa fungsi imbalan r(.)")
    return data.reward_fn


def build_kernel_matrices(data: Dataset, spec: KernelSpec, w: WeightVector, gamma: float) -> KernelMatrices:
    """
    Matriks kovarians dan silang kernel serta vektor imbalan majemuk.

    K_cov(i, j) = K(x_i, x_j) / n_eff,
    K_cr(i, j) = sum_k w_k gamma^k K(x_{i+k}, x_j) / n_eff,
    y(i) = n_eff^{-1/2} sum_k w_k sum_{l=1}^{k} gamma^l r(x_{i+l}).
    """
    check_discount(gamma)
    reward_fn = require_reward_fn(data)
    anchor_index, ahead = transition_windows(data, w.K)
    n_eff = anchor_index.size
    anchors = data.states[anchor_index]

    cov = gram_matrix(spec, anchors) / n_eff
    cross = np.zeros_like(cov)
    for k, coefficient in enumerate(w.bootstrap_coefficients(gamma), start=1):
        if coefficient == 0.0:
            continue
        cross += coefficient * gram_matrix(spec, data.states[ahead[:, k - 1]], anchors)
    cross /= n_eff
    y = _compound_returns(data, ahead, w, gamma) / np.sqrt(n_eff)
    return KernelMatrices(cov=cov, cross=cross, y=y, anchors=anchors, spec=spec, reward_fn=reward_fn)


def solve_linear_system(matrix: np.ndarray, rhs: np.ndarray, label: str = "sistem") -> np.ndarray:
    """
    Faktorisasi LU dengan pivot parsial, estimasi kondisi norma-1, dan cek residual.

    Raises:
        NumericalError: Estimasi kondisi > 1e14, atau residual relatif > 1e-10.
    """
    anorm = float(np.linalg.norm(matrix, 1))
    try:
        lu, piv = lu_factor(matrix, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"Faktorisasi {label} gagal", {"error": str(exc)}) from exc

    rcond, info = dgecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0.0 else 1.0 / float(rcond)
    if info != 0 or condition > CONDITION_LIMIT:
        raise NumericalError(f"Matriks {label} singular atau berkondisi buruk", {"condition": condition})

    solution = lu_solve((lu, piv), rhs)
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(matrix @ solution - rhs))
    if residual > RESIDUAL_TOL * rhs_norm:
        # satu langkah perbaikan iteratif
        solution = solution + lu_solve((lu, piv), rhs - matrix @ solution)
        residual = float(np.linalg.norm(matrix @ solution - rhs))
        if residual > RESIDUAL_TOL * rhs_norm:
            raise NumericalError(
                f"Residual {label} terlalu besar",
                {"residual": residual, "rhs_norm": rhs_norm, "condition": condition},
            )
    logger.debug("Solve %s: dim=%d, cond=%.3e", label, matrix.shape[0], condition)
    return solution


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    """
    Estimasi theta_hat = r + sum_j beta_j varphi_j.

    Attributes:
        spec: Kernel yang dipakai.
        anchors: State jangkar x_1..x_{n_eff}.
        feature_coordinates: beta (panjang J) terhadap koordinat varphi_j = sqrt(mu_j) phi_j.
        reward_fn: Fungsi imbalan r(.) sebagai baseline.
        ridge: lambda_n.
        method: "forward-kernel", "forward-features", "backward", atau "sa".
        coefficients: alpha_hat (panjang n_eff) untuk jalur matriks kernel, selain itu None.
        diagnostics: Informasi tambahan (langkah SA, kondisi, dsb.).
    """

    spec: KernelSpec
    anchors: np.ndarray
    feature_coordinates: np.ndarray
    reward_fn: Callable[[np.ndarray], np.ndarray]
    ridge: float
    method: str
    coefficients: Optional[np.ndarray] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_eff(self) -> int:
        return int(self.anchors.size)

    def correction_norm(self) -> float:
        """Norma RKHS dari theta_hat - r."""
        return float(np.linalg.norm(self.feature_coordinates))

    def basis_coefficients(self) -> np.ndarray:
        """Koefisien theta_hat - r terhadap basis phi_j."""
        return self.spec.sqrt_eigenvalues * self.feature_coordinates


def solve_lstd(matrices: KernelMatrices, ridge: float) -> KernelEstimate:
    """
    Menyelesaikan (K_cov + lambda_n I - K_cr) alpha = y.

    Args:
        matrices: Keluaran `build_kernel_matrices`.
        ridge: lambda_n > 0.

    Returns:
        `KernelEstimate` dengan alpha dan koordinat fitur padanannya.
    """
    if ridge <= 0.0:
        raise DomainError(f"Parameter ridge harus positif, diterima {ridge}")
    n_eff = matrices.n_eff
    system = matrices.cov + ridge * np.eye(n_eff) - matrices.cross
    alpha = solve_linear_system(system, matrices.y, label="kernel LSTD")
    anchor_features = feature_map(matrices.spec, matrices.anchors)
    beta = anchor_features.T @ alpha / np.sqrt(n_eff)
    return KernelEstimate(
        spec=matrices.spec,
        anchors=matrices.anchors,
        feature_coordinates=beta,
        reward_fn=matrices.reward_fn,
        ridge=float(ridge),
        method="forward-kernel",
        coefficients=alpha,
    )


def empirical_feature_system(
    data: Dataset, spec: KernelSpec, w: WeightVector, gamma: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Operator empiris berdimensi J: (Sigma_hat, C_hat, b_hat, anchor_index).

    Sigma_hat = Phi_a^T Phi_a / n_eff, C_hat = Phi_a^T Psi / n_eff dengan
    Psi_t = sum_k w_k gamma^k varphi(x_{t+k}), dan b_hat = Phi_a^T g / n_eff.
    """
    check_discount(gamma)
    anchor_index, ahead = transition_windows(data, w.K)
    n_eff = anchor_index.size
    phi_all = feature_map(spec, data.states)
    phi_anchor = phi_all[anchor_index]

    bootstrap = np.zeros_like(phi_anchor)
    for k, coefficient in enumerate(w.bootstrap_coefficients(gamma), start=1):
        if coefficient != 0.0:
            bootstrap += coefficient * phi_all[ahead[:, k - 1]]

    covariance = phi_anchor.T @ phi_anchor / n_eff
    cross = phi_anchor.T @ bootstrap / n_eff
    target = phi_anchor.T @ _compound_returns(data, ahead, w, gamma) / n_eff
    return covariance, cross, target, anchor_index


def solve_lstd_features(
    data: Dataset, spec: KernelSpec, w: WeightVector, gamma: float, ridge: float
) -> KernelEstimate:
    """Jalur koordinat fitur: (Sigma_hat + lambda I - C_hat) beta = b_hat."""
    if ridge <= 0.0:
        raise DomainError(f"Parameter ridge harus positif, diterima {ridge}")
    reward_fn = require_reward_fn(data)
    covariance, cross, target, anchor_index = empirical_feature_system(data, spec, w, gamma)
    system = covariance + ridge * np.eye(spec.truncation) - cross
    beta = solve_linear_system(system, target, label="LSTD fitur")
    return KernelEstimate(
        spec=spec,
        anchors=data.states[anchor_index],
        feature_coordinates=beta,
        reward_fn=reward_fn,
        ridge=float(ridge),
        method="forward-features",
    )


def estimate_forward(
    data: Dataset,
    spec: KernelSpec,
    w: WeightVector,
    gamma: float,
    ridge: float,
    path: str = "auto",
) -> KernelEstimate:
    """
    Estimator maju; `path` memilih jalur matriks kernel atau koordinat fitur.

    Dengan "auto" jalur fitur dipakai bila J <= 512.
    """
    if path not in SOLVE_PATHS:
        raise DomainError(f"Jalur solve tidak dikenal: {path}")
    if path == "auto":
        path = "features" if spec.truncation <= MAX_TRUNCATION else "kernel"
    if path == "features":
        return solve_lstd_features(data, spec, w, gamma, ridge)
    return solve_lstd(build_kernel_matrices(data, spec, w, gamma), ridge)


def evaluate(estimate: KernelEstimate, x, kernel_form: bool = False) -> np.ndarray:
    """
    Nilai theta_hat(x).

    Args:
        estimate: Hasil estimasi.
        x: Titik-titik di [0, 1).
        kernel_form: True untuk memakai r(x) + n_eff^{-1/2} sum_t alpha_t K(x, x_t).
    """
    points = np.atleast_1d(np.asarray(x, dtype=float))
    baseline = np.asarray(estimate.reward_fn(points), dtype=float)
    if kernel_form:
        if estimate.coefficients is None:
            raise DomainError("Estimasi ini tidak memiliki koefisien kernel alpha")
        correction = gram_matrix(estimate.spec, points, estimate.anchors) @ estimate.coefficients
        values = baseline + correction / np.sqrt(estimate.n_eff)
    else:
        values = baseline + feature_map(estimate.spec, points) @ estimate.feature_coordinates
    return values if np.ndim(x) else values[0]


def grid_midpoints(grid_size: int) -> np.ndarray:
    return (np.arange(grid_size) + 0.5) / grid_size


def estimate_on_grid(estimate: KernelEstimate, grid_size: int, kernel_form: bool = False) -> np.ndarray:
    """Nilai estimasi di titik tengah m sel diadik."""
    return evaluate(estimate, grid_midpoints(grid_size), kernel_form=kernel_form)


def l2mu_error(
    estimate: Union[KernelEstimate, np.ndarray],
    reference: np.ndarray,
    weights: np.ndarray,
) -> float:
    """
    Galat kuadrat L2(mu): sum_i w_i (theta(x_i) - V(x_i))^2 pada grid.

    Args:
        estimate: `KernelEstimate` atau nilai-nilai pada grid.
        reference: Nilai acuan per sel.
        weights: Massa mu per sel.
    """
    reference = np.asarray(reference, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if reference.shape != weights.shape:
        raise DomainError("Panjang nilai acuan dan bobot grid berbeda")
    if isinstance(estimate, KernelEstimate):
        values = estimate_on_grid(estimate, reference.size)
    else:
        values = np.asarray(estimate, dtype=float)
    if values.shape != reference.shape:
        raise DomainError(f"Grid estimasi {values.shape} tidak cocok dengan acuan {reference.shape}")
    return float(np.sum(weights * (values - reference) ** 2))
