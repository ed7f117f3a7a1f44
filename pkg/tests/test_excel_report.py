# tests/test_excel_report.py

import openpyxl
import pandas as pd

from backend.excel_report import (
    generate_certificate_report,
    generate_experiment_report,
    generate_experiment_report_with_population,
)
from backend.harness import CSV_COLUMNS, ExperimentConfig, ExperimentResult


def _result(population=None):
    ns = [100, 200, 400]
    table = pd.DataFrame(
        {
            "method": "single_path/K=1",
            "n": ns,
            "mse_mean": [0.4, 0.2, 0.1],
            "mse_stderr": [0.01, 0.01, 0.01],
            "trials": 3,
            "failures": [0, 1, 0],
        },
        columns=CSV_COLUMNS,
    )
    return ExperimentResult(
        table=table,
        ridges={("single_path/K=1", n): 1e-3 for n in ns},
        configs=[ExperimentConfig(decay="finite", eigenvalues=(1.0, 0.5))],
        population=population or {},
    )


def test_experiment_report_sheets(tmp_path):
    path = tmp_path / "report.xlsx"
    generate_experiment_report(str(path), _result())
    wb = openpyxl.load_workbook(path)
    assert wb.sheetnames == ["Hasil", "Konfigurasi", "Kemiringan", "Ridge"]
    results = wb["Hasil"]
    assert [cell.value for cell in results[1]] == CSV_COLUMNS
    assert results.max_row == 4
    slopes = wb["Kemiringan"]
    assert slopes.cell(row=2, column=1).value == "single_path/K=1"
    assert slopes.cell(row=2, column=3).value == -1.0
    assert slopes.cell(row=1, column=4).value == "rate_ok"
    assert slopes.cell(row=2, column=4).value is True


def test_population_sheet_is_optional(tmp_path):
    plain = tmp_path / "plain.xlsx"
    generate_experiment_report_with_population(str(plain), _result())
    assert "Statistik Populasi" not in openpyxl.load_workbook(plain).sheetnames

    enriched = tmp_path / "enriched.xlsx"
    population = {"single_path/K=1": {"zeta0": 1.5, "gamma_bar": 0.9}}
    generate_experiment_report_with_population(str(enriched), _result(population))
    sheet = openpyxl.load_workbook(enriched)["Statistik Populasi"]
    assert sheet["A1"].value == "BESARAN POPULASI (ORACLE)"
    assert sheet.cell(row=4, column=1).value == "single_path/K=1"


def test_certificate_report(tmp_path):
    path = tmp_path / "certificates.xlsx"
    frame = pd.DataFrame(
        {
            "check": ["packing_log_size", "kl_bound"],
            "value": [4.2, 0.3],
            "bound": [0.7, 0.1],
            "slack": [3.5, -0.2],
            "passed": [True, False],
        }
    )
    generate_certificate_report(str(path), frame, {"U": 8, "M": 70})
    wb = openpyxl.load_workbook(path)
    assert wb.sheetnames == ["Sertifikat", "Ringkasan"]
    summary = {row[0].value: row[1].value for row in wb["Ringkasan"].iter_rows(min_row=2)}
    assert summary["Lolos"] == 1
    assert summary["Gagal"] == 1
    assert summary["M"] == 70
