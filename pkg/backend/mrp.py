# backend/mrp.py

"""Proses imbalan Markov (MRP) pada [0, 1) yang konstan sepotong-sepotong di grid diadik.

Fokus modul:
- `MrpInstance`: rantai sel (matriks transisi antar sel grid dasar) dengan posisi
  di dalam sel diundi ulang secara seragam, atau dipertahankan untuk rantai deterministik.
- Keluarga MRP eksperimen dua-paruh dengan waktu pencampuran tau*.
- Pengambilan sampel: satu lintasan, beberapa episode, dan pasangan i.i.d.
- `discretize`: matriks transisi eksak pada grid diadik yang lebih halus.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from backend.errors import DomainError, NumericalError
from backend.rkhs import cell_index, feature_table, is_power_of_two

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10
SAMPLING_MODES = ("single_path", "episodes", "iid_pairs")
EXPERIMENT_GRID = 4

# nextafter(1, 0): state tidak pernah tepat bernilai 1.0
_LAST_STATE = float(np.nextafter(1.0, 0.0))


def check_discount(gamma: float) -> float:
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"Faktor diskon harus di [0, 1), diterima {gamma}")
    return float(gamma)


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """
    Distribusi stasioner mu dengan mu^T P = mu^T dan sum mu = 1.

    Untuk rantai yang tidak tereduksi solusinya tunggal; selain itu diambil
    solusi norma minimum dari sistem kuadrat terkecil.
    """
    size = transition.shape[0]
    system = np.vstack([transition.T - np.eye(size), np.ones((1, size))])
    target = np.zeros(size + 1)
    target[-1] = 1.0
    solution, *_ = np.linalg.lstsq(system, target, rcond=None)
    solution = np.clip(solution, 0.0, None)
    solution /= solution.sum()
    residual = float(np.max(np.abs(solution @ transition - solution)))
    if residual > STATIONARY_TOL:
        raise NumericalError("Distribusi stasioner tidak ditemukan", {"residual": residual})
    return solution


@dataclass(frozen=True, eq=False)
class MrpInstance:
    """
    MRP kontinu pada [0, 1) yang digerakkan rantai antar sel grid dasar.

    Attributes:
        transition: Matriks (m0, m0); baris a memberi peluang sel berikutnya.
        reward_cells: Imbalan per sel (panjang m0).
        gamma: Faktor diskon di [0, 1).
        mixing_time: tau* >= 1.
        stationary: Massa stasioner per sel.
        uniform_within_cell: True bila posisi di dalam sel tujuan diundi seragam;
            False bila posisi relatif dipertahankan (rantai deterministik).
        name: Label untuk log dan laporan.
    """

    transition: np.ndarray
    reward_cells: np.ndarray
    gamma: float
    mixing_time: float
    stationary: np.ndarray
    uniform_within_cell: bool = True
    name: str = "cell-chain"

    def __post_init__(self):
        transition = np.array(self.transition, dtype=float)
        reward = np.array(self.reward_cells, dtype=float).reshape(-1)
        stationary = np.array(self.stationary, dtype=float).reshape(-1)
        size = transition.shape[0]

        if transition.ndim != 2 or transition.shape != (size, size):
            raise DomainError("Matriks transisi harus persegi")
        if not is_power_of_two(size):
            raise DomainError(f"Jumlah sel dasar harus pangkat dua, diterima {size}")
        if reward.shape != (size,) or stationary.shape != (size,):
            raise DomainError("Panjang imbalan dan distribusi stasioner harus sama dengan jumlah sel")
        if np.any(transition < 0.0):
            raise DomainError("Matriks transisi memuat entri negatif")
        row_error = float(np.max(np.abs(transition.sum(axis=1) - 1.0)))
        if row_error > ROW_SUM_TOL:
            raise DomainError(f"Baris matriks transisi tidak berjumlah 1 (galat {row_error:.2e})")
        stationary_error = float(np.max(np.abs(stationary @ transition - stationary)))
        if stationary_error > STATIONARY_TOL or abs(stationary.sum() - 1.0) > STATIONARY_TOL:
            raise DomainError(f"Distribusi stasioner tidak konsisten (galat {stationary_error:.2e})")
        check_discount(self.gamma)
        if self.mixing_time < 1.0:
            raise DomainError(f"Waktu pencampuran harus >= 1, diterima {self.mixing_time}")

        for array in (transition, reward, stationary):
            array.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward_cells", reward)
        object.__setattr__(self, "stationary", stationary)

    @property
    def base_grid_size(self) -> int:
        return int(self.transition.shape[0])

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    @cached_property
    def cumulative_transition(self) -> np.ndarray:
        cumulative = np.cumsum(self.transition, axis=1)
        cumulative[:, -1] = 1.0
        return cumulative

    def reward(self, x) -> np.ndarray:
        """Imbalan r(x) untuk titik-titik x."""
        return self.reward_cells[cell_index(x, self.base_grid_size)]


def cell_chain_mrp(
    transition: Sequence[Sequence[float]],
    reward: Sequence[float],
    gamma: float,
    mixing_time: float = 1.0,
    stationary: Optional[Sequence[float]] = None,
    uniform_within_cell: bool = True,
    name: str = "cell-chain",
) -> MrpInstance:
    """Membuat `MrpInstance` dari matriks sel; distribusi stasioner dihitung bila kosong."""
    matrix = np.asarray(transition, dtype=float)
    weights = stationary_distribution(matrix) if stationary is None else np.asarray(stationary, dtype=float)
    return MrpInstance(
        transition=matrix,
        reward_cells=np.asarray(reward, dtype=float),
        gamma=gamma,
        mixing_time=mixing_time,
        stationary=weights,
        uniform_within_cell=uniform_within_cell,
        name=name,
    )


def switch_probability(tau_star: float) -> float:
    """Peluang berpindah paruh pada keluarga eksperimen, tau*^-1 / 2."""
    return 0.5 / tau_star


def build_experiment_mrp(
    tau_star: float,
    theta: float,
    r0: float = 1.0,
    gamma: float = 0.9,
) -> MrpInstance:
    """
    Keluarga MRP eksperimen dua-paruh pada [0, 1).

    Dengan peluang tau*^-1 / 2 state berikutnya seragam pada paruh seberang,
    selain itu seragam pada paruh yang sama. Distribusi stasioner adalah
    Lebesgue dan imbalan r = r0 * phi_2 (tiga potong).

    Args:
        tau_star: Waktu pencampuran tau* >= 1.
        theta: Sudut mis-spesifikasi di [0, pi/2].
        r0: Skala imbalan (> 0).
        gamma: Faktor diskon.

    Returns:
        `MrpInstance` dengan grid dasar 4 sel.
    """
    if tau_star < 1.0:
        raise DomainError(f"tau* harus >= 1, diterima {tau_star}")
    if not 0.0 <= theta <= math.pi / 2 + 1e-12:
        raise DomainError(f"Sudut theta harus di [0, pi/2], diterima {theta}")
    if r0 <= 0.0:
        raise DomainError(f"Skala imbalan r0 harus positif, diterima {r0}")

    switch = switch_probability(tau_star)
    same, other = (1.0 - switch) / 2.0, switch / 2.0
    transition = np.array(
        [
            [same, same, other, other],
            [same, same, other, other],
            [other, other, same, same],
            [other, other, same, same],
        ]
    )
    reward = r0 * feature_table(2, theta, EXPERIMENT_GRID)[1]
    return MrpInstance(
        transition=transition,
        reward_cells=reward,
        gamma=gamma,
        mixing_time=float(tau_star),
        stationary=np.full(EXPERIMENT_GRID, 1.0 / EXPERIMENT_GRID),
        name=f"two-half(tau*={tau_star:.4g}, theta={theta:.4g})",
    )


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Data observasi state beserta imbalannya.

    Attributes:
        mode: "single_path", "episodes", atau "iid_pairs".
        states: x_1..x_n berurutan; untuk pasangan i.i.d. tersusun (x_1, x_1', x_2, x_2', ...).
        rewards: r(x_t) yang sudah dihitung.
        episode_length: L untuk mode episode (2 untuk pasangan).
        reward_fn: Fungsi imbalan r(.) yang dipakai sebagai baseline estimator.
    """

    mode: str
    states: np.ndarray
    rewards: np.ndarray
    episode_length: Optional[int] = None
    reward_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.mode not in SAMPLING_MODES:
            raise DomainError(f"Mode sampling tidak dikenal: {self.mode}")
        if self.mode != "single_path" and (self.episode_length is None or self.episode_length < 2):
            raise DomainError("Mode episode membutuhkan panjang episode >= 2")

    @property
    def n(self) -> int:
        return int(self.states.size)

    def segment_bounds(self) -> List[Tuple[int, int]]:
        """Rentang indeks [start, stop) tiap lintasan independen."""
        if self.mode == "single_path":
            return [(0, self.n)] if self.n else []
        length = int(self.episode_length)
        return [(start, min(start + length, self.n)) for start in range(0, self.n, length)]


def _simulate_cells(mrp: MrpInstance, rng: np.random.Generator, length: int) -> np.ndarray:
    cells = np.empty(length, dtype=np.int64)
    cells[0] = rng.choice(mrp.base_grid_size, p=mrp.stationary)
    draws = rng.random(length - 1)
    cumulative = mrp.cumulative_transition
    for t in range(1, length):
        cells[t] = np.searchsorted(cumulative[cells[t - 1]], draws[t - 1], side="right")
    return np.minimum(cells, mrp.base_grid_size - 1)


def _place_in_cells(mrp: MrpInstance, rng: np.random.Generator, cells: np.ndarray) -> np.ndarray:
    if mrp.uniform_within_cell:
        offsets = rng.random(cells.size)
    else:
        offsets = np.full(cells.size, rng.random())
    return np.minimum((cells + offsets) / mrp.base_grid_size, _LAST_STATE)


def _trajectory(mrp: MrpInstance, rng: np.random.Generator, length: int) -> Tuple[np.ndarray, np.ndarray]:
    cells = _simulate_cells(mrp, rng, length)
    return _place_in_cells(mrp, rng, cells), mrp.reward_cells[cells]


def sample_single_path(mrp: MrpInstance, n: int, seed: int) -> Dataset:
    """
    Satu lintasan x_1..x_n dengan x_1 ~ mu dan x_{t+1} ~ P(. | x_t).

    Args:
        mrp: Instans MRP.
        n: Panjang lintasan (>= 1).
        seed: Seed generator; seed sama menghasilkan lintasan identik.
    """
    if n < 1:
        raise DomainError(f"Panjang lintasan minimal 1, diterima {n}")
    rng = np.random.default_rng(int(seed))
    states, rewards = _trajectory(mrp, rng, int(n))
    return Dataset(mode="single_path", states=states, rewards=rewards, reward_fn=mrp.reward)


def sample_episodes(mrp: MrpInstance, n: int, episode_length: int, seed: int) -> Dataset:
    """
    ceil(n/L) lintasan independen dari mu, masing-masing sepanjang L.

    Episode terakhir dipotong agar total state tepat n.
    """
    if episode_length < 2:
        raise DomainError(f"Panjang episode minimal 2, diterima {episode_length}")
    if n < 1:
        raise DomainError(f"Jumlah state minimal 1, diterima {n}")
    rng = np.random.default_rng(int(seed))
    states, rewards = [], []
    for start in range(0, n, episode_length):
        length = min(episode_length, n - start)
        block_states, block_rewards = _trajectory(mrp, rng, length)
        states.append(block_states)
        rewards.append(block_rewards)
    return Dataset(
        mode="episodes",
        states=np.concatenate(states),
        rewards=np.concatenate(rewards),
        episode_length=int(episode_length),
        reward_fn=mrp.reward,
    )


def sample_iid_pairs(mrp: MrpInstance, n: int, seed: int) -> Dataset:
    """
    n pasangan independen (x_i, x_i') dengan x_i ~ mu dan x_i' ~ P(. | x_i).

    Disimpan sebagai episode dengan L = 2.
    """
    if n < 0:
        raise DomainError(f"Jumlah pasangan tidak boleh negatif, diterima {n}")
    rng = np.random.default_rng(int(seed))
    first = rng.choice(mrp.base_grid_size, size=n, p=mrp.stationary)
    draws = rng.random(n)
    second = np.argmax(mrp.cumulative_transition[first] > draws[:, None], axis=1) if n else first

    cells = np.empty(2 * n, dtype=np.int64)
    cells[0::2] = first
    cells[1::2] = second
    states = np.empty(2 * n)
    states[0::2] = _place_in_cells(mrp, rng, first)
    if mrp.uniform_within_cell:
        states[1::2] = _place_in_cells(mrp, rng, second)
    else:
        # posisi relatif di dalam sel ikut terbawa
        states[1::2] = (second + (states[0::2] * mrp.base_grid_size - first)) / mrp.base_grid_size
    return Dataset(
        mode="iid_pairs",
        states=states,
        rewards=mrp.reward_cells[cells],
        episode_length=2,
        reward_fn=mrp.reward,
    )


@dataclass(frozen=True, eq=False)
class GridMrp:
    """MRP yang didiskretisasi eksak pada grid diadik berukuran m."""

    transition: np.ndarray
    weights: np.ndarray
    reward: np.ndarray
    gamma: float
    mixing_time: float

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)


def discretize(mrp: MrpInstance, grid_size: int) -> GridMrp:
    """
    Matriks transisi eksak beserta bobot grid pada m sel diadik.

    Args:
        mrp: Instans MRP.
        grid_size: m, pangkat dua dan kelipatan grid dasar.

    Returns:
        `GridMrp` dengan baris berjumlah 1 (toleransi 1e-12) dan mu^T P = mu^T (1e-10).
    """
    base = mrp.base_grid_size
    if not is_power_of_two(grid_size) or grid_size < base:
        raise DomainError(f"Grid {grid_size} harus pangkat dua dan >= grid dasar {base}")
    ratio = grid_size // base

    if mrp.uniform_within_cell:
        transition = np.kron(mrp.transition, np.full((ratio, ratio), 1.0 / ratio))
    else:
        transition = np.kron(mrp.transition, np.eye(ratio))
    weights = np.repeat(mrp.stationary, ratio) / ratio
    reward = np.repeat(mrp.reward_cells, ratio)

    row_error = float(np.max(np.abs(transition.sum(axis=1) - 1.0)))
    stationary_error = float(np.max(np.abs(weights @ transition - weights)))
    if row_error > ROW_SUM_TOL or stationary_error > STATIONARY_TOL:
        raise NumericalError(
            "Diskretisasi tidak stokastik atau tidak stasioner",
            {"row_error": row_error, "stationary_error": stationary_error},
        )
    logger.debug("Diskretisasi %s pada %d sel", mrp.name, grid_size)
    return GridMrp(
        transition=transition,
        weights=weights,
        reward=reward,
        gamma=mrp.gamma,
        mixing_time=mrp.mixing_time,
    )


def minorization_slack(
    mrp: MrpInstance,
    measure: Optional[np.ndarray] = None,
    constant: Optional[float] = None,
) -> float:
    """
    min_{a,b} P(b | a) - constant * measure(b) pada grid dasar.

    Nilai >= 0 berarti P(. | x) >= constant * measure untuk semua x. Default:
    ukuran Lebesgue dan konstanta 1/tau*.
    """
    base = mrp.base_grid_size
    measure = np.full(base, 1.0 / base) if measure is None else np.asarray(measure, dtype=float)
    constant = 1.0 / mrp.mixing_time if constant is None else float(constant)
    return float(np.min(mrp.transition - constant * measure[None, :]))
