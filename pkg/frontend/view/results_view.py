# frontend/view/results_view.py

"""Halaman Streamlit untuk meninjau hasil eksperimen.

Fokus fungsi halaman:
- Menampilkan hasil per eksperimen (individual) lengkap dengan sheet laporannya.
- Menampilkan rekap gabungan (master).
- Menyediakan tombol unduh (Excel/CSV) dan opsi reset data gabungan.
"""

import os
import sys
from typing import Dict, Optional

import pandas as pd
import streamlit as st

# Menambahkan root project ke sys.path agar impor modul lintas-folder berfungsi.
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from backend.harness import fit_loglog_slope, read_results_csv
from backend.errors import DomainError
from frontend.components.result_tables import EXCEL_MIME, display_result_table, display_slopes, download_file
from utils.file_manager import FileManager

file_manager = FileManager()


def show_results_page():
    """Merender halaman 'Hasil' dengan dua mode: Individual & Gabungan."""
    st.header("Hasil Eksperimen")

    view_mode = st.radio(
        "Mode Tampilan",
        ["Hasil Individual", "Semua Hasil (Gabungan)"],
        horizontal=True
    )

    if view_mode == "Hasil Individual":
        show_individual_results()
    else:
        show_combined_results()


def show_individual_results():
    """Menampilkan hasil untuk satu eksperimen yang dipilih pengguna."""
    available_results = file_manager.list_output_results()

    if not available_results:
        st.info("Belum ada hasil. Silakan jalankan eksperimen terlebih dahulu di menu 'Eksperimen'.")
        return

    # Jika ada hasil terbaru pada sesi ini, jadikan default.
    default_idx = 0
    if "latest_result" in st.session_state:
        latest_path = st.session_state.latest_result["csv"]
        for i, res in enumerate(available_results):
            if res["csv"] == latest_path:
                default_idx = i
                break

    result_options = [f"{os.path.basename(res['csv'])} ({res['timestamp']})" for res in available_results]
    selected_idx = st.selectbox(
        "Pilih Hasil",
        range(len(result_options)),
        format_func=lambda x: result_options[x],
        index=default_idx
    )
    if selected_idx is not None:
        display_experiment_result(available_results[selected_idx])


def display_experiment_result(result: Dict[str, Optional[str]]):
    """
    Menampilkan hasil satu eksperimen: tabel, kemiringan, sheet laporan, dan unduhan.

    Args:
        result: Kamus path file hasil (CSV dan Excel).
    """
    try:
        table = read_results_csv(result["csv"])
    except Exception as e:
        st.error(f"Gagal memuat CSV: {str(e)}")
        return

    table_tab, report_tab = st.tabs(["Tabel Hasil", "Laporan Excel"])
    with table_tab:
        display_result_table(table)
        slopes = {}
        for method in table["method"].unique():
            try:
                slopes[method] = fit_loglog_slope(table, method)
            except DomainError:
                continue
        display_slopes(slopes)
        download_file(result["csv"], "Unduh CSV", mime="text/csv")

    with report_tab:
        if not result["excel"]:
            st.info("Laporan Excel tidak tersedia untuk hasil ini.")
            return
        try:
            sheets = pd.read_excel(result["excel"], sheet_name=None)
            for sheet_name, frame in sheets.items():
                if sheet_name == "Hasil":
                    continue
                with st.expander(sheet_name, expanded=sheet_name == "Konfigurasi"):
                    st.dataframe(frame, use_container_width=True)
        except Exception as e:
            st.error(f"Gagal memuat data Excel: {str(e)}")
        download_file(result["excel"], "Unduh Laporan Excel")


def show_combined_results():
    """Menampilkan rekap gabungan (master) dalam bentuk tabel."""
    master_path = file_manager.get_master_report_path()

    if not master_path:
        st.info("Belum ada data gabungan. Jalankan eksperimen terlebih dahulu.")
        return

    try:
        df_master = pd.read_excel(master_path)
        st.subheader("Data Hasil Gabungan")
        st.dataframe(df_master, use_container_width=True)

        if "source" in df_master.columns:
            st.subheader("Ringkasan Per Sumber")
            summary = df_master.groupby("source").agg(
                metode=("method", "nunique"),
                baris=("n", "size"),
                n_maks=("n", "max"),
                gagal=("failures", "sum"),
            ).reset_index()
            st.dataframe(summary, use_container_width=True)

        download_file(master_path, "Unduh Laporan Master Excel", mime=EXCEL_MIME)

        if st.button("Reset Data Gabungan", type="secondary"):
            if file_manager.reset_master_report():
                st.success("Data gabungan berhasil direset")
                st.rerun()
            else:
                st.error("Gagal mereset data gabungan")
    except Exception as e:
        st.error(f"Gagal memuat data gabungan: {str(e)}")
