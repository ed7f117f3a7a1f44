# frontend/components/result_tables.py

"""Komponen tampilan tabel hasil, kemiringan, sertifikat, dan tombol unduh."""

import math
import os
from typing import Dict, Optional

import pandas as pd
import streamlit as st

EXCEL_MIME = "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"


def display_result_table(table: pd.DataFrame):
    """
    Tabel agregat per (metode, n) beserta ringkasan kegagalan.

    Args:
        table: DataFrame dengan kolom method, n, mse_mean, mse_stderr, trials, failures.
    """
    if table.empty:
        st.warning("Tabel hasil kosong")
        return

    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Jumlah Metode", table["method"].nunique())
    with col2:
        st.metric("Jumlah Baris", len(table))
    with col3:
        st.metric("Percobaan Gagal", int(table["failures"].sum()))

    st.dataframe(
        table.style.format({"mse_mean": "{:.4e}", "mse_stderr": "{:.2e}"}),
        use_container_width=True,
    )


def display_slopes(slopes: Dict[str, float], predicted: Optional[float] = None, checks: Optional[Dict[str, bool]] = None):
    """Kemiringan log-log per metode, dibandingkan dengan prediksi teori bila ada."""
    if not slopes:
        return
    frame = pd.DataFrame({"method": list(slopes), "slope": list(slopes.values())})
    if predicted is not None and math.isfinite(predicted):
        frame["predicted_slope"] = predicted
    if checks:
        frame["rate_ok"] = [checks.get(method, False) for method in slopes]
    st.subheader("Kemiringan Log-Log")
    st.dataframe(frame, use_container_width=True)


def display_certificates(frame: pd.DataFrame):
    """Tabel sertifikat dengan baris gagal disorot."""
    passed = int(frame["passed"].sum())
    col1, col2 = st.columns(2)
    with col1:
        st.metric("Sertifikat Lolos", f"{passed}/{len(frame)}")
    with col2:
        st.metric("Slack Minimum", f"{frame['slack'].min():.3e}" if not frame.empty else "-")

    def highlight(row):
        color = "" if row["passed"] else "background-color: #7a2e2e"
        return [color] * len(row)

    st.dataframe(frame.style.apply(highlight, axis=1), use_container_width=True)


def download_file(path: Optional[str], label: str, mime: str = EXCEL_MIME):
    """Tombol unduh untuk file yang ada; menampilkan error bila gagal dibaca."""
    if not path or not os.path.exists(path):
        return
    try:
        with open(path, "rb") as file:
            st.download_button(label=label, data=file.read(), file_name=os.path.basename(path), mime=mime)
    except Exception as e:
        st.error(f"Error saat menyiapkan tombol unduh: {str(e)}")
