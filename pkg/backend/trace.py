# backend/trace.py

"""Estimator bentuk mundur dengan jejak kelayakan (eligibility trace) dan rekursi SA daring.

Seluruh perhitungan berlangsung dalam koordinat fitur varphi = sqrt(mu) phi berdimensi J.
Estimasi ditulis theta = r + h dengan h = sum_j beta_j varphi_j sehingga sistem
(A_hat + lambda I) theta = b_hat + lambda r menjadi (A_hat + lambda I) beta = b_hat - A_hat r.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Tuple

import numpy as np
from tqdm import tqdm

from backend.errors import DomainError, NumericalError
from backend.estimator import KernelEstimate, WeightVector, require_reward_fn, solve_linear_system
from backend.mrp import Dataset, check_discount
from backend.rkhs import KernelSpec, feature_map

logger = logging.getLogger(__name__)

INVERSE_REFRESH_PERIOD = 256
DENOMINATOR_FLOOR = 1e-14
INVERSE_DRIFT_TOL = 1e-8


def trace_coefficients(w: WeightVector, gamma: float) -> np.ndarray:
    """W_k gamma^k untuk k = 0..K-1, bobot varphi(x_{t-k}) di dalam z_t."""
    return w.tail_sums()[: w.K] * gamma ** np.arange(w.K)


def eligibility_trace(window: np.ndarray, w: WeightVector, gamma: float) -> np.ndarray:
    """
    z_t = sum_{k=0}^{K-1} sum_{l=k+1}^{K} w_l gamma^k varphi(x_{t-k}).

    Args:
        window: Koordinat fitur (K, J) berurutan x_{t-K+1}, ..., x_t.
    """
    if window.shape[0] != w.K:
        raise DomainError(f"Jendela jejak harus memuat K={w.K} state, diterima {window.shape[0]}")
    return trace_coefficients(w, gamma) @ window[::-1]


def _segment_transitions(data: Dataset, K: int) -> List[Tuple[int, int]]:
    if data.mode == "iid_pairs" and K > 1:
        raise DomainError("Pasangan i.i.d. hanya mendukung K = 1")
    if data.mode == "episodes" and data.episode_length < K + 1:
        raise DomainError(f"Panjang episode {data.episode_length} kurang dari K+1 = {K + 1}")
    return [(start, stop) for start, stop in data.segment_bounds() if stop - start > K]


def backward_system(
    data: Dataset, spec: KernelSpec, w: WeightVector, gamma: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Operator empiris mundur dalam koordinat fitur.

    Returns:
        (A_hat, target, time_index): A_hat = n_eff^{-1} sum_t z_t (varphi_t - gamma varphi_{t+1})^T,
        target = n_eff^{-1} sum_t z_t gamma r(x_{t+1}), dan indeks t yang dipakai.
    """
    check_discount(gamma)
    K = w.K
    segments = _segment_transitions(data, K)
    if not segments:
        raise DomainError(f"Data berukuran n={data.n} tidak cukup untuk K={K}")

    coefficients = trace_coefficients(w, gamma)
    phi_all = feature_map(spec, data.states)
    traces, differences, targets, times = [], [], [], []
    for start, stop in segments:
        phi = phi_all[start:stop]
        length = stop - start
        z = np.zeros((length - K, spec.truncation))
        for k, coefficient in enumerate(coefficients):
            z += coefficient * phi[K - 1 - k : length - 1 - k]
        traces.append(z)
        differences.append(phi[K - 1 : length - 1] - gamma * phi[K:length])
        targets.append(gamma * data.rewards[start + K : stop])
        times.append(np.arange(start + K - 1, stop - 1))

    z = np.vstack(traces)
    d = np.vstack(differences)
    n_eff = z.shape[0]
    operator = z.T @ d / n_eff
    target = z.T @ np.concatenate(targets) / n_eff
    return operator, target, np.concatenate(times)


def solve_backward(
    data: Dataset, spec: KernelSpec, w: WeightVector, gamma: float, ridge: float
) -> KernelEstimate:
    """
    Estimator mundur: solusi (A_hat + lambda I) theta = b_hat + lambda r.

    Args:
        data: Data lintasan; untuk satu lintasan dibutuhkan n >= 2K + 1.
        spec: Kernel.
        w: Bobot multi-langkah.
        gamma: Faktor diskon.
        ridge: lambda_n > 0.
    """
    if ridge <= 0.0:
        raise DomainError(f"Parameter ridge harus positif, diterima {ridge}")
    if data.mode == "single_path" and data.n < 2 * w.K + 1:
        raise DomainError(f"Estimator mundur membutuhkan n >= 2K+1 = {2 * w.K + 1}, diterima {data.n}")
    reward_fn = require_reward_fn(data)
    operator, target, times = backward_system(data, spec, w, gamma)
    beta = solve_linear_system(operator + ridge * np.eye(spec.truncation), target, label="LSTD mundur")
    return KernelEstimate(
        spec=spec,
        anchors=data.states[times],
        feature_coordinates=beta,
        reward_fn=reward_fn,
        ridge=float(ridge),
        method="backward",
    )


@dataclass
class TraceState:
    """
    Keadaan rekursi SA.

    Attributes:
        window: K koordinat fitur terakhir (x_{t-K+1}..x_t).
        trace: z_t saat ini.
        operator: A_t = n_eff lambda I + sum_s z_s d_s^T (tanpa normalisasi).
        inverse: A_t^{-1} yang dipelihara dengan pembaruan rank-satu.
        iterate: beta_t, koordinat fitur dari theta_t - r.
        step: Jumlah transisi yang sudah diproses.
    """

    window: Deque[np.ndarray]
    trace: np.ndarray
    operator: np.ndarray
    inverse: np.ndarray
    iterate: np.ndarray
    step: int = 0
    max_inverse_drift: float = 0.0
    min_denominator: float = np.inf
    min_abs_denominator: float = np.inf
    checkpoints: List[int] = field(default_factory=list)

    @classmethod
    def initial(cls, dimension: int, K: int, scale: float) -> "TraceState":
        return cls(
            window=deque(maxlen=K),
            trace=np.zeros(dimension),
            operator=scale * np.eye(dimension),
            inverse=np.eye(dimension) / scale,
            iterate=np.zeros(dimension),
        )

    def push(self, phi: np.ndarray, w: WeightVector, gamma: float) -> bool:
        """Menambah varphi(x_t) ke jendela; True bila jendela sudah penuh dan z_t valid."""
        self.window.append(phi)
        if len(self.window) < w.K:
            return False
        self.trace = eligibility_trace(np.asarray(self.window), w, gamma)
        return True

    def update(self, phi_now: np.ndarray, phi_next: np.ndarray, reward_next: float, gamma: float) -> None:
        """Satu langkah rekursi: perbarui beta, A_t, dan A_t^{-1} dengan Sherman-Morrison."""
        z = self.trace
        d = phi_now - gamma * phi_next
        gain = self.inverse @ z
        denominator = 1.0 + float(d @ gain)
        self.min_denominator = min(self.min_denominator, denominator)
        self.min_abs_denominator = min(self.min_abs_denominator, abs(denominator))
        # penyebut negatif sah: A_t tetap terbalikkan selama penyebut tidak nol
        if abs(denominator) <= DENOMINATOR_FLOOR:
            raise NumericalError(
                "Penyebut rekursi SA mendekati nol",
                {"step": self.step, "denominator": denominator},
            )
        td_error = gamma * reward_next + gamma * float(phi_next @ self.iterate) - float(phi_now @ self.iterate)
        self.iterate = self.iterate + gain * (td_error / denominator)
        self.inverse = self.inverse - np.outer(gain, d @ self.inverse) / denominator
        self.operator += np.outer(z, d)
        self.step += 1
        if self.step % INVERSE_REFRESH_PERIOD == 0:
            self.refresh()

    def refresh(self) -> None:
        """
        Inversi langsung A_t dan bandingkan dengan inverse yang dipelihara.

        Raises:
            NumericalError: Penyimpangan relatif melebihi `INVERSE_DRIFT_TOL`.
        """
        fresh = np.linalg.inv(self.operator)
        drift = float(np.max(np.abs(fresh - self.inverse)) / max(np.max(np.abs(fresh)), 1e-300))
        self.max_inverse_drift = max(self.max_inverse_drift, drift)
        self.checkpoints.append(self.step)
        if drift > INVERSE_DRIFT_TOL:
            raise NumericalError(
                "Inverse rank-satu menyimpang dari inversi langsung",
                {"step": self.step, "drift": drift, "tolerance": INVERSE_DRIFT_TOL},
            )
        self.inverse = fresh


def sa_run(
    data: Dataset,
    spec: KernelSpec,
    w: WeightVector,
    gamma: float,
    ridge: float,
    progress: bool = False,
) -> KernelEstimate:
    """
    Rekursi aproksimasi stokastik dengan jejak kelayakan.

    Dimulai dari theta_0 = r dan A_0 = n_eff lambda I; iterasi terakhir sama dengan
    `solve_backward` secara aljabar.

    Args:
        data: Data lintasan.
        spec: Kernel.
        w: Bobot multi-langkah.
        gamma: Faktor diskon.
        ridge: lambda_n > 0.
        progress: Tampilkan progress bar tqdm.

    Returns:
        `KernelEstimate` dengan diagnostik langkah, penyimpangan inverse, dan penyebut minimum.
    """
    check_discount(gamma)
    if ridge <= 0.0:
        raise DomainError(f"Parameter ridge harus positif, diterima {ridge}")
    reward_fn = require_reward_fn(data)
    K = w.K
    segments = _segment_transitions(data, K)
    n_eff = sum(stop - start - K for start, stop in segments)
    dimension = spec.truncation

    if n_eff == 0:
        logger.info("SA tanpa transisi: estimasi = r")
        return KernelEstimate(
            spec=spec,
            anchors=np.empty(0),
            feature_coordinates=np.zeros(dimension),
            reward_fn=reward_fn,
            ridge=float(ridge),
            method="sa",
            diagnostics={"steps": 0},
        )

    state = TraceState.initial(dimension, K, n_eff * ridge)
    phi_all = feature_map(spec, data.states)
    times = []
    with tqdm(total=n_eff, desc="SA", disable=not progress) as bar:
        for start, stop in segments:
            state.window.clear()
            for t in range(start, stop - 1):
                if not state.push(phi_all[t], w, gamma):
                    continue
                state.update(phi_all[t], phi_all[t + 1], float(data.rewards[t + 1]), gamma)
                times.append(t)
                bar.update(1)

    if state.step % INVERSE_REFRESH_PERIOD != 0:
        state.refresh()

    logger.debug(
        "SA selesai: %d langkah, drift inverse maks %.2e, penyebut min %.4f",
        state.step,
        state.max_inverse_drift,
        state.min_denominator,
    )
    return KernelEstimate(
        spec=spec,
        anchors=data.states[np.asarray(times)],
        feature_coordinates=state.iterate,
        reward_fn=reward_fn,
        ridge=float(ridge),
        method="sa",
        diagnostics={
            "steps": state.step,
            "max_inverse_drift": state.max_inverse_drift,
            "min_denominator": state.min_denominator,
            "min_abs_denominator": state.min_abs_denominator,
            "checkpoints": list(state.checkpoints),
        },
    )
