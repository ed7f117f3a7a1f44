# frontend/view/experiment_view.py

"""Halaman Streamlit untuk menjalankan eksperimen Monte Carlo.

Fokus fungsi halaman:
- Memilih preset gambar atau file konfigurasi di data/configs.
- Mengatur jumlah percobaan, seed, dan jumlah worker.
- Menjalankan eksperimen serta menampilkan tabel, kemiringan, dan unduhan.
"""

import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

import streamlit as st

# Menambahkan root project ke sys.path agar impor modul lintas-folder berfungsi.
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from backend.errors import DomainError, NumericalError
from backend.excel_report import generate_experiment_report_with_population
from backend.harness import (
    FIGURES,
    ExperimentConfig,
    ExperimentResult,
    combine_results,
    emit_csv,
    figure_configs,
    load_experiment_config,
    run_experiment,
)
from backend.theory import predicted_slope
from frontend.components.result_tables import display_result_table, display_slopes, download_file
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

file_manager = FileManager()

SOURCE_PRESET = "Preset Gambar"
SOURCE_CONFIG = "File Konfigurasi"


def show_experiment_page():
    """Merender halaman 'Eksperimen' dengan tab Preset dan Konfigurasi."""
    st.header("Eksperimen Monte Carlo")

    source = st.radio("Sumber Konfigurasi", [SOURCE_PRESET, SOURCE_CONFIG], horizontal=True)

    col1, col2, col3 = st.columns(3)
    with col1:
        trials = st.number_input("Jumlah Percobaan", min_value=1, max_value=5000, value=20, step=1)
    with col2:
        base_seed = st.number_input("Seed Dasar", min_value=0, value=0, step=1)
    with col3:
        workers = st.number_input("Jumlah Worker", min_value=1, max_value=32, value=1, step=1)

    configs: Optional[List[ExperimentConfig]] = None
    name = "experiment"
    try:
        if source == SOURCE_PRESET:
            figure = st.selectbox("Preset", FIGURES)
            full_scale = st.checkbox("Skala penuh (n hingga 73130)", value=False)
            configs = figure_configs(
                figure, full_scale=full_scale, trials=int(trials), base_seed=int(base_seed), workers=int(workers)
            )
            name = figure
        else:
            available = file_manager.list_configs()
            if not available:
                st.info("Belum ada konfigurasi di data/configs. Simpan file JSON konfigurasi ke folder tersebut.")
                return
            selected = st.selectbox("Konfigurasi", available, format_func=os.path.basename)
            raw = file_manager.load_config(selected)
            config = load_experiment_config(raw)
            configs = [replace(config, trials=int(trials), base_seed=int(base_seed), workers=int(workers))]
            name = os.path.splitext(os.path.basename(selected))[0]
            with st.expander("Lihat Konfigurasi", expanded=False):
                st.json(raw)
    except (DomainError, OSError, ValueError) as e:
        st.error(f"Konfigurasi tidak valid: {str(e)}")
        return

    st.info(f"{len(configs)} konfigurasi, grid n = {list(configs[0].sample_sizes)}")

    if st.button("Mulai Eksperimen", type="primary"):
        run_from_page(configs, name)


def run_from_page(configs: List[ExperimentConfig], name: str) -> Optional[ExperimentResult]:
    """
    Menjalankan konfigurasi satu per satu dengan progress bar dan menyimpan hasil.

    Returns:
        `ExperimentResult` gabungan, atau None bila terjadi kegagalan.
    """
    progress_bar = st.progress(0)
    status_text = st.empty()
    results = []
    try:
        for index, config in enumerate(configs):
            status_text.text(f"Menjalankan {config.label or config.name} ({index + 1}/{len(configs)})")
            with st.spinner("Eksperimen berjalan..."):
                results.append(run_experiment(config, progress=False))
            progress_bar.progress((index + 1) / len(configs))
    except (DomainError, NumericalError) as e:
        st.error(f"Eksperimen gagal: {str(e)}")
        logger.error("Eksperimen gagal: %s", e)
        return None
    finally:
        status_text.empty()

    result = combine_results(results)
    output_paths = file_manager.get_output_paths(name)
    emit_csv(result, output_paths["csv"])
    generate_experiment_report_with_population(output_paths["excel"], result)
    file_manager.append_to_master_report(output_paths["csv"], result.table)

    st.success("Eksperimen selesai")
    display_result_table(result.table)
    config = configs[0]
    display_slopes(result.slopes(), predicted_slope(config.decay, config.exponent), result.rate_checks())
    if result.truncation_count():
        st.warning(f"{result.truncation_count()} MSE terpotong pada {config.truncation_multiplier} ||theta*||^2")

    download_file(output_paths["csv"], "Unduh CSV", mime="text/csv")
    download_file(output_paths["excel"], "Unduh Laporan Excel")
    st.session_state.latest_result = output_paths
    return result
