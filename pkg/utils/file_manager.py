# utils/file_manager.py

import glob
import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

import pandas as pd

logger = logging.getLogger(__name__)

MASTER_REPORT = "master_results.xlsx"


class FileManager:
    """Utility pengelolaan file konfigurasi dan hasil eksperimen.

    Fungsionalitas utama:
    - Menyimpan dan membaca konfigurasi JSON di `data/configs`.
    - Menyusun path output (CSV/Excel) berbasis nama eksperimen.
    - Mendaftar hasil yang tersedia.
    - Menyusun dan mereset laporan master hasil.
    """

    def __init__(self, base_dir: str = "data"):
        """
        Inisialisasi direktori kerja.

        Args:
            base_dir: Direktori dasar untuk konfigurasi dan output.
        """
        self.base_dir = base_dir
        self.config_dir = os.path.join(base_dir, "configs")
        self.output_dir = os.path.join(base_dir, "output")

        # Pastikan direktori tersedia
        os.makedirs(self.config_dir, exist_ok=True)
        os.makedirs(self.output_dir, exist_ok=True)

    def save_config(self, name: str, config: Dict[str, Any]) -> str:
        """
        Simpan konfigurasi ke `data/configs/<name>.json`.
        Jika nama sudah dipakai, tambahkan akhiran counter (_1, _2, ...).

        Returns:
            Path file yang tersimpan.
        """
        base_name = os.path.splitext(os.path.basename(name))[0] or "config"
        file_path = os.path.join(self.config_dir, f"{base_name}.json")
        counter = 1
        while os.path.exists(file_path):
            file_path = os.path.join(self.config_dir, f"{base_name}_{counter}.json")
            counter += 1

        with open(file_path, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2)
        return file_path

    def load_config(self, path: str) -> Dict[str, Any]:
        """
        Baca konfigurasi JSON; nama tanpa direktori dicari di `data/configs`.

        Raises:
            FileNotFoundError: File tidak ditemukan.
        """
        candidate = path if os.path.exists(path) else os.path.join(self.config_dir, os.path.basename(path))
        try:
            with open(candidate, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error("Gagal membaca konfigurasi %s: %s", path, e)
            raise

    def list_configs(self) -> List[str]:
        """Daftar file konfigurasi (.json), diurutkan naik."""
        return sorted(glob.glob(os.path.join(self.config_dir, "*.json")))

    def get_output_paths(self, name: str, timestamp: Optional[str] = None) -> Dict[str, str]:
        """
        Bangun path output CSV dan Excel dengan pola `[nama]_[timestamp]_results.*`.

        Args:
            name: Nama eksperimen (mis. "fig1a" atau nama file konfigurasi).
            timestamp: Penanda waktu; default waktu sekarang.

        Returns:
            Dictionary berisi path untuk kunci "csv" dan "excel".
        """
        basename = os.path.splitext(os.path.basename(name))[0]
        stamp = timestamp or datetime.now().strftime("%Y%m%d-%H%M%S")
        output_base = f"{basename}_{stamp}_results"
        return {
            "csv": os.path.join(self.output_dir, f"{output_base}.csv"),
            "excel": os.path.join(self.output_dir, f"{output_base}_summary.xlsx"),
        }

    def list_output_results(self) -> List[Dict[str, Optional[str]]]:
        """
        Ambil daftar hasil output yang tersedia, terbaru lebih dulu.

        Returns:
            List dict berisi "csv", "excel" (bila ada), dan "timestamp"
            (diambil dari nama file, bila tersedia).
        """
        results = []
        for csv_path in sorted(glob.glob(os.path.join(self.output_dir, "*_results.csv")), reverse=True):
            basename = os.path.splitext(os.path.basename(csv_path))[0]
            excel_path = os.path.join(self.output_dir, f"{basename}_summary.xlsx")
            parts = basename.split("_")
            results.append({
                "csv": csv_path,
                "excel": excel_path if os.path.exists(excel_path) else None,
                # timestamp berada di bagian kedua dari belakang nama file
                "timestamp": parts[-2] if len(parts) >= 3 else "",
            })
        return results

    def append_to_master_report(self, source: str, table: pd.DataFrame) -> str:
        """
        Tambahkan tabel hasil terbaru ke laporan master (Excel).
        Jika file master sudah ada, data baru digabungkan; jika belum, file dibuat.

        Args:
            source: Penanda sumber (nama file hasil atau preset).
            table: Tabel hasil eksperimen.

        Returns:
            Path file laporan master (string kosong jika gagal).
        """
        master_path = os.path.join(self.output_dir, MASTER_REPORT)
        try:
            tagged = table.copy()
            tagged["source"] = os.path.basename(source)
            if os.path.exists(master_path):
                existing_data = pd.read_excel(master_path)
                combined_data = pd.concat([existing_data, tagged], ignore_index=True)
            else:
                combined_data = tagged
            combined_data.to_excel(master_path, index=False)
            return master_path
        except Exception as e:
            logger.error("Gagal menyimpan master report: %s", e)
            return ""

    def reset_master_report(self) -> bool:
        """
        Hapus file laporan master dan mulai dari kosong.

        Returns:
            True jika penghapusan berhasil, False jika terjadi kegagalan.
        """
        master_path = os.path.join(self.output_dir, MASTER_REPORT)
        try:
            if os.path.exists(master_path):
                os.remove(master_path)
            return True
        except Exception as e:
            logger.error("Gagal mereset master report: %s", e)
            return False

    def get_master_report_path(self) -> Optional[str]:
        """Path laporan master jika file ada; selain itu None."""
        master_path = os.path.join(self.output_dir, MASTER_REPORT)
        return master_path if os.path.exists(master_path) else None
