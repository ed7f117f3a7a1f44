# backend/rkhs.py

"""Fungsi Walsh, basis fitur dengan sudut mis-spesifikasi, dan kernel deret terpotong.

Isi modul:
- `walsh` untuk evaluasi skalar (kedalaman bit 53) dan `walsh_table` untuk evaluasi
  pada grid diadik memakai matriks Hadamard (urutan Sylvester, kolom dibalik bit).
- Basis fitur phi_j yang konstan sepotong-sepotong pada grid diadik, ortonormal
  terhadap ukuran Lebesgue pada [0, 1).
- `KernelSpec`: barisan nilai eigen mu_j (polinomial, eksponensial, atau
  rank-hingga), pemotongan J, serta konstanta b dan kappa.
- Koordinat fitur varphi_j(x) = sqrt(mu_j) phi_j(x) sehingga K(x, y) = varphi(x) . varphi(y).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import hadamard

from backend.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Konstanta batas sup |phi_j|.
KAPPA = 2.0
WALSH_BIT_DEPTH = 53
# Orde maksimum yang masih memakai jalur koordinat fitur secara default.
MAX_TRUNCATION = 512
DEFAULT_EXP_TRUNCATION = 8
DECAY_FAMILIES = ("poly", "exp", "finite")


def is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


def walsh(j: int, x: float) -> int:
    """
    Nilai fungsi Walsh ke-j (urutan Paley) di titik x.

    Args:
        j: Indeks non-negatif.
        x: Titik pada [0, 1).

    Returns:
        +1 atau -1.
    """
    if j < 0:
        raise DomainError(f"Indeks Walsh harus non-negatif, diterima {j}")
    if not 0.0 <= x < 1.0:
        raise DomainError(f"Titik Walsh harus berada di [0, 1), diterima {x}")

    digits = int(math.floor(x * 2.0 ** WALSH_BIT_DEPTH))
    parity = 0
    bit = 0
    while (j >> bit) and bit < WALSH_BIT_DEPTH:
        if (j >> bit) & 1:
            parity ^= (digits >> (WALSH_BIT_DEPTH - 1 - bit)) & 1
        bit += 1
    return -1 if parity else 1


def bit_reverse(indices: np.ndarray, bits: int) -> np.ndarray:
    """Membalik urutan `bits` bit terbawah dari setiap indeks."""
    indices = np.asarray(indices, dtype=np.int64)
    reversed_ = np.zeros_like(indices)
    for position in range(bits):
        reversed_ |= ((indices >> position) & 1) << (bits - 1 - position)
    return reversed_


def walsh_table(count: int, grid_size: int) -> np.ndarray:
    """
    Tabel psi_k pada titik tengah sel grid diadik.

    Baris k matriks Hadamard Sylvester bernilai (-1)^{popcount(k & c)}; membalik
    bit indeks sel c mengubahnya menjadi fungsi Walsh urutan Paley.

    Args:
        count: Banyaknya fungsi Walsh (indeks 0..count-1), maksimal grid_size.
        grid_size: Jumlah sel (pangkat dua).

    Returns:
        Array berukuran (count, grid_size).
    """
    if not is_power_of_two(grid_size):
        raise DomainError(f"Ukuran grid harus pangkat dua, diterima {grid_size}")
    if count > grid_size:
        raise DomainError(
            f"Grid {grid_size} sel tidak cukup untuk {count} fungsi Walsh"
        )
    bits = grid_size.bit_length() - 1
    columns = bit_reverse(np.arange(grid_size), bits)
    return hadamard(grid_size, dtype=float)[:count][:, columns]


def _walsh_count(num_features: int) -> int:
    # phi_{2m+1}, phi_{2m+2} memakai psi hingga indeks 4m+1; faktor sudut memakai psi_1..psi_3.
    highest_pair = (num_features - 1) // 2
    return max(4 * highest_pair + 2, 4)


def feature_grid_size(num_features: int) -> int:
    """Grid diadik terkecil tempat J fitur pertama konstan per sel."""
    if num_features < 1:
        raise DomainError(f"Jumlah fitur minimal 1, diterima {num_features}")
    count = _walsh_count(num_features)
    return max(4, 1 << (count - 1).bit_length())


def angle_factor(walsh_rows: np.ndarray, theta: float) -> np.ndarray:
    """psi_1 cos(theta) + (psi_2 + psi_3) sin(theta) / sqrt(2)."""
    return (
        walsh_rows[1] * math.cos(theta)
        + (walsh_rows[2] + walsh_rows[3]) * math.sin(theta) / math.sqrt(2.0)
    )


def feature_table(num_features: int, theta: float, grid_size: Optional[int] = None) -> np.ndarray:
    """
    Nilai phi_1..phi_J pada setiap sel grid.

    Args:
        num_features: J.
        theta: Sudut mis-spesifikasi.
        grid_size: Jumlah sel; default `feature_grid_size(J)`.

    Returns:
        Array (J, grid_size).
    """
    minimum = feature_grid_size(num_features)
    grid_size = minimum if grid_size is None else int(grid_size)
    if not is_power_of_two(grid_size) or grid_size < minimum:
        raise DomainError(
            f"Grid {grid_size} tidak diadik atau kurang dari {minimum} untuk J={num_features}"
        )

    psi = walsh_table(_walsh_count(num_features), grid_size)
    factor = angle_factor(psi, theta)
    table = np.empty((num_features, grid_size))
    for index in range(num_features):
        pair = index // 2
        base = 0.5 * (psi[2 * pair] - psi[2 * pair + 1] + psi[4 * pair] + psi[4 * pair + 1])
        table[index] = base if index % 2 == 0 else base * factor
    return table


def feature(j: int, x: float, theta: float) -> float:
    """
    Nilai fitur phi_j(x) (indeks mulai dari 1) lewat evaluasi Walsh skalar.

    Args:
        j: Indeks fitur, j >= 1.
        x: Titik pada [0, 1).
        theta: Sudut mis-spesifikasi.
    """
    if j < 1:
        raise DomainError(f"Indeks fitur dimulai dari 1, diterima {j}")
    pair = (j - 1) // 2
    base = 0.5 * (
        walsh(2 * pair, x) - walsh(2 * pair + 1, x) + walsh(4 * pair, x) + walsh(4 * pair + 1, x)
    )
    if j % 2 == 1:
        return float(base)
    factor = walsh(1, x) * math.cos(theta) + (walsh(2, x) + walsh(3, x)) * math.sin(theta) / math.sqrt(2.0)
    return float(base * factor)


def cell_index(x: ArrayLike, grid_size: int) -> np.ndarray:
    """Indeks sel grid untuk titik-titik x pada [0, 1)."""
    points = np.asarray(x, dtype=float)
    if points.size and (np.min(points) < 0.0 or np.max(points) >= 1.0):
        raise DomainError("Titik state harus berada di [0, 1)")
    return np.minimum((points * grid_size).astype(np.int64), grid_size - 1)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """
    Kernel deret terpotong K(x, y) = sum_j mu_j phi_j(x) phi_j(y).

    Attributes:
        eigenvalues: mu_1 >= mu_2 >= ... > 0 (panjang J).
        theta: Sudut mis-spesifikasi fitur.
        decay: "poly", "exp", atau "finite".
        exponent: Eksponen 2*alpha untuk peluruhan polinomial.
        kappa: Batas sup |phi_j|.
    """

    eigenvalues: np.ndarray
    theta: float = 0.0
    decay: str = "finite"
    exponent: Optional[float] = None
    kappa: float = KAPPA

    def __post_init__(self):
        values = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if values.size == 0:
            raise DomainError("Barisan nilai eigen tidak boleh kosong")
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            raise DomainError("Nilai eigen harus positif dan hingga")
        if np.any(np.diff(values) > 1e-15 * values[0]):
            raise DomainError("Nilai eigen harus tidak naik")
        if self.decay not in DECAY_FAMILIES:
            raise DomainError(f"Keluarga peluruhan tidak dikenal: {self.decay}")
        values.setflags(write=False)
        object.__setattr__(self, "eigenvalues", values)

    @property
    def truncation(self) -> int:
        return int(self.eigenvalues.size)

    @cached_property
    def grid_size(self) -> int:
        return feature_grid_size(self.truncation)

    @cached_property
    def table(self) -> np.ndarray:
        table = feature_table(self.truncation, self.theta, self.grid_size)
        table.setflags(write=False)
        return table

    @cached_property
    def sup_features(self) -> np.ndarray:
        return np.max(np.abs(self.table), axis=1)

    @cached_property
    def b(self) -> float:
        """sqrt(sum_j mu_j sup phi_j^2)."""
        return float(np.sqrt(np.sum(self.eigenvalues * self.sup_features ** 2)))

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def table_on(self, grid_size: int) -> np.ndarray:
        """Tabel fitur (J, grid_size) pada grid yang lebih halus dari grid bawaan."""
        if grid_size == self.grid_size:
            return self.table
        return feature_table(self.truncation, self.theta, grid_size)

    def describe(self) -> str:
        if self.decay == "poly":
            return f"poly(j^-{self.exponent:g}), J={self.truncation}"
        if self.decay == "exp":
            return f"exp(-(j-1)^2), J={self.truncation}"
        return f"finite-rank, J={self.truncation}"


def choose_truncation(
    decay: str,
    exponent: float = 1.2,
    tail_tol: float = 1e-4,
    max_order: int = MAX_TRUNCATION,
) -> int:
    """
    Memilih orde pemotongan J untuk deret nilai eigen.

    Untuk peluruhan polinomial dipilih pangkat dua terkecil dengan ekor
    sum_{j>J} mu_j < tail_tol * sum_{j<=J} mu_j (ekor dibatasi integral),
    dibatasi `max_order`.

    Args:
        decay: "poly" atau "exp".
        exponent: Eksponen peluruhan polinomial (> 1).
        tail_tol: Toleransi relatif ekor.
        max_order: Batas atas J.

    Returns:
        Orde pemotongan J.
    """
    if decay == "exp":
        return DEFAULT_EXP_TRUNCATION
    if decay != "poly":
        raise DomainError(f"Pemotongan otomatis tidak tersedia untuk peluruhan '{decay}'")
    if exponent <= 1.0:
        raise DomainError(f"Eksponen peluruhan polinomial harus > 1, diterima {exponent}")

    order = 2
    while True:
        head = float(np.sum(np.arange(1, order + 1, dtype=float) ** (-exponent)))
        tail = order ** (1.0 - exponent) / (exponent - 1.0)
        if tail < tail_tol * head:
            return order
        if order >= max_order:
            logger.warning(
                "Pemotongan J=%d: rasio ekor %.3g melebihi toleransi %.1e", order, tail / head, tail_tol
            )
            return order
        order *= 2


def make_kernel_spec(
    decay: str,
    theta: float = 0.0,
    truncation: Optional[int] = None,
    exponent: float = 1.2,
    eigenvalues: Optional[Sequence[float]] = None,
) -> KernelSpec:
    """
    Membuat `KernelSpec` dari nama keluarga peluruhan.

    Args:
        decay: "poly" (mu_j = j^-exponent), "exp" (mu_j = exp(-(j-1)^2)), atau
            "finite" (daftar `eigenvalues`).
        theta: Sudut mis-spesifikasi fitur.
        truncation: J; default dari `choose_truncation`.
        exponent: Eksponen peluruhan polinomial.
        eigenvalues: Nilai eigen eksplisit untuk keluarga "finite".
    """
    if decay == "finite":
        if eigenvalues is None:
            raise DomainError("Kernel rank-hingga membutuhkan daftar nilai eigen")
        return KernelSpec(np.asarray(eigenvalues, dtype=float), theta=theta, decay="finite")

    order = int(truncation) if truncation is not None else choose_truncation(decay, exponent)
    if order < 1:
        raise DomainError(f"Orde pemotongan minimal 1, diterima {order}")
    index = np.arange(1, order + 1, dtype=float)
    if decay == "poly":
        return KernelSpec(index ** (-exponent), theta=theta, decay="poly", exponent=exponent)
    if decay == "exp":
        return KernelSpec(np.exp(-((index - 1.0) ** 2)), theta=theta, decay="exp")
    raise DomainError(f"Keluarga peluruhan tidak dikenal: {decay}")


def feature_values(spec: KernelSpec, x: ArrayLike) -> np.ndarray:
    """phi_j(x) tanpa skala; bentuk (J,) untuk skalar atau (n, J) untuk array."""
    cells = cell_index(x, spec.grid_size)
    return spec.table[:, cells].T


def feature_map(spec: KernelSpec, x: ArrayLike) -> np.ndarray:
    """Koordinat fitur varphi_j(x) = sqrt(mu_j) phi_j(x)."""
    return feature_values(spec, x) * spec.sqrt_eigenvalues


def kernel_eval(spec: KernelSpec, x: float, y: float) -> float:
    """Nilai deret terpotong K(x, y)."""
    phi_x = feature_values(spec, x)
    phi_y = feature_values(spec, y)
    return float(np.sum(spec.eigenvalues * phi_x * phi_y))


def gram_matrix(spec: KernelSpec, xs: ArrayLike, ys: Optional[ArrayLike] = None) -> np.ndarray:
    """Matriks K(x_i, y_j); simetris bila `ys` tidak diberikan."""
    left = feature_values(spec, np.atleast_1d(xs))
    right = left if ys is None else feature_values(spec, np.atleast_1d(ys))
    gram = (left * spec.eigenvalues) @ right.T
    if ys is None:
        gram = 0.5 * (gram + gram.T)
    return gram


def hilbert_norm(spec: KernelSpec, coefficients: ArrayLike) -> float:
    """
    Norma RKHS dari f = sum_j c_j phi_j, yaitu sqrt(sum_j c_j^2 / mu_j).

    Args:
        spec: Kernel.
        coefficients: Koefisien c_j terhadap basis phi_j (bukan koordinat fitur).
    """
    coeffs = np.asarray(coefficients, dtype=float)
    if coeffs.shape != (spec.truncation,):
        raise DomainError(f"Panjang koefisien {coeffs.shape} tidak sama dengan J={spec.truncation}")
    return float(np.sqrt(np.sum(coeffs ** 2 / spec.eigenvalues)))
