# backend/excel_report.py

"""
Laporan Excel untuk hasil eksperimen dan sertifikat batas bawah.

Fokus:
- Sheet "Hasil": tabel agregat per (metode, n).
- Sheet "Konfigurasi": parameter eksperimen yang dijalankan.
- Sheet "Kemiringan": kemiringan log-log per metode dan prediksi teori.
- (Opsional) "Statistik Populasi": besaran oracle per metode.
- Laporan sertifikat: tabel pemeriksaan keluarga sulit beserta ringkasannya.
"""

from __future__ import annotations

import json
import logging
import math
from datetime import datetime
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import openpyxl
import pandas as pd
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter
from openpyxl.worksheet.worksheet import Worksheet

from backend.harness import CSV_COLUMNS, ExperimentResult
from backend.theory import predicted_slope

# Logging
logger = logging.getLogger(__name__)

HEADER_FILL = PatternFill(start_color="E0E0E0", end_color="E0E0E0", fill_type="solid")
FAIL_FILL = PatternFill(start_color="F4CCCC", end_color="F4CCCC", fill_type="solid")


def write_header(sheet: Worksheet, headers: Sequence[str], row: int = 1) -> None:
    """Header tebal dengan latar abu-abu."""
    for col, header in enumerate(headers, 1):
        cell = sheet.cell(row=row, column=col, value=header)
        cell.font = Font(bold=True)
        cell.fill = HEADER_FILL


def set_widths(sheet: Worksheet, widths: Iterable[int]) -> None:
    for i, width in enumerate(widths, 1):
        sheet.column_dimensions[get_column_letter(i)].width = width


def _cell_value(value: Any) -> Any:
    # openpyxl tidak menerima NaN/inf maupun tipe numpy
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value)
    return value


def write_frame(sheet: Worksheet, frame: pd.DataFrame, start_row: int = 1) -> int:
    """Menulis DataFrame dengan header; mengembalikan baris kosong berikutnya."""
    write_header(sheet, list(frame.columns), row=start_row)
    row = start_row + 1
    for record in frame.itertuples(index=False):
        for col, value in enumerate(record, 1):
            sheet.cell(row=row, column=col, value=_cell_value(value))
        row += 1
    return row


def write_key_values(sheet: Worksheet, rows: Iterable[tuple], headers: Sequence[str] = ("Parameter", "Nilai")) -> None:
    write_header(sheet, headers)
    for i, (key, value) in enumerate(rows, 2):
        sheet.cell(row=i, column=1, value=key)
        sheet.cell(row=i, column=2, value=_cell_value(value))
    set_widths(sheet, [32, 40])


def _flatten(prefix: str, value: Any) -> List[tuple]:
    if isinstance(value, Mapping):
        rows: List[tuple] = []
        for key, inner in value.items():
            rows.extend(_flatten(f"{prefix}.{key}" if prefix else str(key), inner))
        return rows
    return [(prefix, value)]


def slope_rows(result: ExperimentResult, n_min: int = 0) -> pd.DataFrame:
    """Kemiringan hasil, kemiringan teori untuk kernel konfigurasi pertama, dan status laju."""
    slopes = result.slopes(n_min)
    checks = result.rate_checks(n_min)
    expected = float("nan")
    if result.configs:
        config = result.configs[0]
        expected = predicted_slope(config.decay, config.exponent)
    return pd.DataFrame(
        {
            "method": list(slopes),
            "slope": list(slopes.values()),
            "predicted_slope": [expected] * len(slopes),
            "rate_ok": [checks.get(method, False) for method in slopes],
        },
        columns=["method", "slope", "predicted_slope", "rate_ok"],
    )


def generate_experiment_report(output_path: str, result: ExperimentResult, n_min: int = 0) -> None:
    """
    Bangun laporan Excel eksperimen.

    Args:
        output_path: Lokasi file Excel keluaran.
        result: Hasil `run_experiment` atau `combine_results`.
        n_min: Batas bawah n untuk pencocokan kemiringan.

    Raises:
        OSError: File tidak dapat ditulis.
    """
    try:
        wb = openpyxl.Workbook()

        results_sheet = wb.active
        results_sheet.title = "Hasil"
        table = result.table[CSV_COLUMNS] if not result.table.empty else pd.DataFrame(columns=CSV_COLUMNS)
        row = write_frame(results_sheet, table)
        for r in range(2, row):
            if results_sheet.cell(row=r, column=6).value:
                results_sheet.cell(row=r, column=6).fill = FAIL_FILL
        set_widths(results_sheet, [40, 10, 18, 18, 10, 10])

        config_sheet = wb.create_sheet("Konfigurasi")
        config_rows: List[tuple] = [("Tanggal Pemrosesan", datetime.now().strftime("%d-%m-%Y %H:%M:%S"))]
        for index, config in enumerate(result.configs, 1):
            prefix = f"config{index}" if len(result.configs) > 1 else ""
            config_rows.extend(_flatten(prefix, config.to_dict()))
        config_rows.append(("MSE terpotong", result.truncation_count()))
        write_key_values(config_sheet, config_rows)

        slope_sheet = wb.create_sheet("Kemiringan")
        write_frame(slope_sheet, slope_rows(result, n_min))
        set_widths(slope_sheet, [40, 14, 16, 10])

        ridge_sheet = wb.create_sheet("Ridge")
        ridges = pd.DataFrame(
            [(method, n, value) for (method, n), value in result.ridges.items()],
            columns=["method", "n", "ridge"],
        )
        write_frame(ridge_sheet, ridges)
        set_widths(ridge_sheet, [40, 10, 18])

        wb.save(output_path)
        logger.info("Laporan eksperimen berhasil disimpan: %s", output_path)
    except Exception as exc:
        logger.error("Gagal membuat laporan eksperimen: %s", str(exc))
        raise


def generate_experiment_report_with_population(
    output_path: str,
    result: ExperimentResult,
    n_min: int = 0,
) -> None:
    """
    Buat laporan dasar lalu, bila tersedia, tambahkan sheet "Statistik Populasi".
    """
    generate_experiment_report(output_path, result, n_min)
    if not result.population:
        return

    try:
        wb = openpyxl.load_workbook(output_path)
        sheet = wb.create_sheet("Statistik Populasi")

        sheet["A1"] = "BESARAN POPULASI (ORACLE)"
        sheet["A1"].font = Font(bold=True, size=14)
        sheet.merge_cells("A1:D1")
        sheet["A1"].alignment = Alignment(horizontal="center")

        frame = pd.DataFrame.from_dict(result.population, orient="index")
        frame.insert(0, "method", frame.index)
        write_frame(sheet, frame.reset_index(drop=True), start_row=3)
        set_widths(sheet, [40] + [16] * (len(frame.columns) - 1))

        wb.save(output_path)
        logger.info("Statistik populasi berhasil ditambahkan ke laporan: %s", output_path)
    except Exception as exc:
        # Tidak raise ulang: laporan dasar sudah tersedia
        logger.error("Gagal menambahkan statistik populasi: %s", str(exc))


def generate_certificate_report(
    output_path: str,
    certificates: pd.DataFrame,
    summary: Optional[Dict[str, Any]] = None,
) -> None:
    """
    Bangun laporan Excel sertifikat keluarga sulit.

    Args:
        output_path: Lokasi file Excel keluaran.
        certificates: Tabel dari `certificate_frame` (check, value, bound, slack, passed).
        summary: Ringkasan keluarga (`HardFamily.summary()`).
    """
    try:
        wb = openpyxl.Workbook()
        sheet = wb.active
        sheet.title = "Sertifikat"
        row = write_frame(sheet, certificates)
        passed_col = list(certificates.columns).index("passed") + 1 if "passed" in certificates.columns else None
        if passed_col is not None:
            for r in range(2, row):
                if sheet.cell(row=r, column=passed_col).value is False:
                    for col in range(1, len(certificates.columns) + 1):
                        sheet.cell(row=r, column=col).fill = FAIL_FILL
        set_widths(sheet, [32, 18, 18, 18, 10])

        info_sheet = wb.create_sheet("Ringkasan")
        passed = int(certificates["passed"].sum()) if "passed" in certificates.columns else 0
        rows: List[tuple] = [
            ("Tanggal Pemrosesan", datetime.now().strftime("%d-%m-%Y %H:%M:%S")),
            ("Jumlah Pemeriksaan", len(certificates)),
            ("Lolos", passed),
            ("Gagal", len(certificates) - passed),
        ]
        rows.extend((summary or {}).items())
        write_key_values(info_sheet, rows)

        wb.save(output_path)
        logger.info("Laporan sertifikat berhasil disimpan: %s", output_path)
    except Exception as exc:
        logger.error("Gagal membuat laporan sertifikat: %s", str(exc))
        raise
