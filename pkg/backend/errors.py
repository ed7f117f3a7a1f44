# backend/errors.py

"""Tipe exception yang dipakai seluruh modul backend."""

from __future__ import annotations

from typing import Any, Dict, Optional


class DomainError(ValueError):
    """Parameter masukan berada di luar domain yang diizinkan."""


class NumericalError(RuntimeError):
    """Prosedur numerik tidak dapat menghasilkan jawaban yang dapat dipercaya.

    Args:
        message: Pesan utama.
        diagnostics: Nilai-nilai pendukung (kondisi matriks, langkah, dsb.)
            yang ikut dicatat ke log dan ditampilkan CLI.
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        detail = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{base} ({detail})"
