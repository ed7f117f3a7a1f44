# backend/cli.py

"""
Antarmuka baris perintah.

Subperintah:
- estimate: satu estimasi kernel LSTD beserta galatnya terhadap oracle.
- theory: laporan teori (radius kritis, ridge, batas) dan laporan populasi.
- experiment: eksperimen Monte Carlo dari file konfigurasi atau preset gambar.
- lb-verify: keluarga sulit batas bawah dan tabel sertifikatnya.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from backend.errors import DomainError, NumericalError
from backend.estimator import estimate_on_grid, grid_midpoints, l2mu_error
from backend.excel_report import generate_certificate_report, generate_experiment_report_with_population
from backend.harness import (
    FIGURES,
    FULL_GRID_COUNT,
    FULL_TRIALS,
    METHODS,
    ExperimentConfig,
    WeightScheme,
    combine_results,
    draw_dataset,
    emit_csv,
    figure_configs,
    fit_estimate,
    load_experiment_config,
    run_experiment,
    sample_size_grid,
)
from backend.lowerbound import certificate_frame, hard_family, verify_family
from backend.mrp import SAMPLING_MODES
from backend.oracle import build_oracle, check_sigma_bounds, noise_report
from backend.theory import LOOKAHEAD_REGIMES, RIDGE_RULES, auto_ridge, build_theory_report, recommend_lookahead
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def setup_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
        force=True,
    )


def _add_family_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="File JSON konfigurasi (bagian family/kernel/sampling dipakai)")
    parser.add_argument("--tau-star", type=float, help="Waktu pencampuran tau*")
    parser.add_argument("--theta", type=float, help="Sudut mis-spesifikasi")
    parser.add_argument("--r0", type=float, help="Skala imbalan")
    parser.add_argument("--gamma", type=float, help="Faktor diskon")
    parser.add_argument("--decay", choices=("poly", "exp", "finite"), help="Keluarga peluruhan kernel")
    parser.add_argument("--exponent", type=float, help="Eksponen peluruhan polinomial")
    parser.add_argument("--truncation", type=int, help="Orde pemotongan J")
    parser.add_argument("--K", type=int, default=1, help="Look-ahead K")
    parser.add_argument("--lam", type=float, help="lambda untuk TD(lambda) terpotong pada K")
    parser.add_argument("--n", type=int, required=True, help="Ukuran sampel")


def _family_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(args.config) if args.config else ExperimentConfig()
    overrides: Dict[str, Any] = {}
    for flag, key in (("tau_star", "tau_star"), ("theta", "theta"), ("r0", "r0"), ("gamma", "gamma"),
                      ("decay", "decay"), ("exponent", "exponent"), ("truncation", "truncation")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return dataclasses.replace(config, **overrides) if overrides else config


def _scheme(args: argparse.Namespace) -> WeightScheme:
    if args.lam is not None:
        return WeightScheme("td_lambda", args.K, args.lam)
    return WeightScheme("kstep", args.K)


def _print_json(payload: Dict[str, Any]) -> None:
    def default(value: Any) -> Any:
        if hasattr(value, "item"):
            return value.item()
        return str(value)

    print(json.dumps(payload, indent=2, default=default))


def cmd_estimate(args: argparse.Namespace) -> int:
    config = _family_config(args)
    mrp, spec = config.build_mrp(), config.build_kernel()
    w = _scheme(args).weights()
    oracle = build_oracle(mrp, spec)
    length = args.episode_length if args.mode == "episodes" else None
    report = noise_report(oracle, w, episode_length=length)

    if args.ridge == "auto":
        rule = config.ridge_rule if config.ridge_rule in RIDGE_RULES else "experiment"
        ridge = auto_ridge(spec, report, w, args.n, rule=rule, c0=config.c0)
    else:
        try:
            ridge = float(args.ridge)
        except ValueError as exc:
            raise DomainError(f"Ridge harus bilangan atau \"auto\", diterima {args.ridge}") from exc
    data = draw_dataset(mrp, args.mode, args.n, args.seed, length)
    estimate = fit_estimate(data, spec, w, mrp.gamma, ridge, args.method)

    size = report.weights.size
    values = estimate_on_grid(estimate, size)
    frame = pd.DataFrame(
        {
            "x": grid_midpoints(size),
            "mu": report.weights,
            "theta_hat": values,
            "theta_star": report.theta_star,
            "value": report.value,
        }
    )
    error_star = l2mu_error(values, report.theta_star, report.weights)
    error_value = l2mu_error(values, report.value, report.weights)
    logger.info("Estimasi %s: ridge=%.4g, ||theta_hat - theta*||^2=%.4g, ||theta_hat - V*||^2=%.4g",
                estimate.method, ridge, error_star, error_value)

    if args.out:
        frame.to_csv(args.out, index=False, encoding="utf-8", lineterminator="\n")
        logger.info("Nilai grid ditulis: %s", args.out)
    else:
        print(frame.to_csv(index=False, lineterminator="\n"), end="")
    _print_json({"method": estimate.method, "ridge": ridge, "mse_theta_star": error_star, "mse_value": error_value})
    return 0


def cmd_theory(args: argparse.Namespace) -> int:
    config = _family_config(args)
    mrp, spec = config.build_mrp(), config.build_kernel()
    w = _scheme(args).weights()
    oracle = build_oracle(mrp, spec)
    report = noise_report(oracle, w, episode_length=args.episode_length)
    rule = args.ridge_rule
    theory = build_theory_report(mrp, spec, w, args.n, ridge_rule=rule, c0=args.c0,
                                 episode_length=args.episode_length, report=report)

    payload: Dict[str, Any] = {"kernel": spec.describe(), "theory": theory.scalars()}
    payload["lookahead"] = {
        regime: dataclasses.asdict(recommend_lookahead(report.horizon, mrp.mixing_time, regime))
        for regime in LOOKAHEAD_REGIMES
    }
    if args.report:
        payload["population"] = report.scalars()
        payload["noise_checks"] = [
            {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "applicable": c.applicable, "holds": c.holds}
            for c in check_sigma_bounds(report, mrp.gamma, report.gamma_bar)
        ]
    _print_json(payload)
    return 0


def _experiment_configs(args: argparse.Namespace) -> List[ExperimentConfig]:
    overrides: Dict[str, Any] = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.figure:
        return figure_configs(
            args.figure,
            full_scale=args.full_scale,
            trials=overrides.get("trials"),
            base_seed=overrides.get("base_seed", 0),
            workers=overrides.get("workers", 1),
        )
    if not args.config:
        raise DomainError("experiment membutuhkan --config atau --figure")
    config = load_experiment_config(args.config)
    if args.full_scale:
        overrides.setdefault("trials", FULL_TRIALS)
        overrides["sample_sizes"] = tuple(sample_size_grid(FULL_GRID_COUNT))
    return [dataclasses.replace(config, **overrides)] if overrides else [config]


def cmd_experiment(args: argparse.Namespace) -> int:
    configs = _experiment_configs(args)
    result = combine_results([run_experiment(config, progress=not args.quiet) for config in configs])
    emit_csv(result, args.out)
    if args.excel:
        generate_experiment_report_with_population(args.excel, result, n_min=args.n_min)
    if args.master:
        FileManager(args.data_dir).append_to_master_report(args.out, result.table)
    checks = result.rate_checks(args.n_min)
    for method, slope in result.slopes(args.n_min).items():
        logger.info("Kemiringan log-log %s: %.4f", method, slope)
        if pd.notna(slope) and not checks.get(method, True):
            logger.warning("Kemiringan %s lebih lambat dari laju batas atas kernel", method)
    failures = int(result.table["failures"].sum()) if not result.table.empty else 0
    if failures:
        logger.error("Gagal: %d percobaan dicatat sebagai kegagalan", failures)
    return 0


def cmd_lb_verify(args: argparse.Namespace) -> int:
    tau_bar = args.tau_bar if args.tau_bar is not None else 2.0 / (1.0 - args.gamma)
    family = hard_family(
        sigma_bar=args.sigma_bar,
        tau_bar=tau_bar,
        gamma=args.gamma,
        n=args.n,
        U=args.U,
        rho_perp=args.rho_perp,
        radius_bar=args.radius_bar,
        seed=args.seed,
    )
    frame = certificate_frame(verify_family(family, max_pairs=args.max_pairs, seed=args.seed))
    if args.out:
        frame.to_csv(args.out, index=False, encoding="utf-8", lineterminator="\n")
        logger.info("Tabel sertifikat ditulis: %s", args.out)
    else:
        print(frame.to_csv(index=False, lineterminator="\n"), end="")
    if args.excel:
        generate_certificate_report(args.excel, frame, family.summary())
    failed = int((~frame["passed"]).sum())
    if failed:
        logger.error("Gagal: %d dari %d sertifikat", failed, len(frame))
        return 1
    logger.info("Seluruh %d sertifikat lolos", len(frame))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernel-td",
        description="Estimasi kernel LSTD multi-langkah, laporan teori, eksperimen, dan batas bawah.",
    )
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    estimate = sub.add_parser("estimate", help="Satu estimasi dan galatnya terhadap oracle")
    _add_family_arguments(estimate)
    estimate.add_argument("--method", choices=METHODS, default="forward")
    estimate.add_argument("--mode", choices=SAMPLING_MODES, default="single_path")
    estimate.add_argument("--episode-length", type=int)
    estimate.add_argument("--ridge", default="auto", help='lambda_n positif atau "auto"')
    estimate.add_argument("--seed", type=int, default=0)
    estimate.add_argument("--out", help="CSV nilai grid (default stdout)")
    estimate.set_defaults(handler=cmd_estimate)

    theory = sub.add_parser("theory", help="Laporan teori dan laporan populasi")
    _add_family_arguments(theory)
    theory.add_argument("--episode-length", type=int)
    theory.add_argument("--ridge-rule", choices=("experiment", "theorem"), default="experiment")
    theory.add_argument("--c0", type=float, default=1.0)
    theory.add_argument("--report", action="store_true", help="Sertakan laporan populasi")
    theory.set_defaults(handler=cmd_theory)

    experiment = sub.add_parser("experiment", help="Eksperimen Monte Carlo")
    experiment.add_argument("--config", help="File JSON konfigurasi eksperimen")
    experiment.add_argument("--figure", choices=FIGURES, help="Preset gambar")
    experiment.add_argument("--full-scale", action="store_true", help="Grid n i = 0..14 dan 5000 percobaan")
    experiment.add_argument("--out", required=True, help="CSV hasil")
    experiment.add_argument("--excel", help="Laporan Excel (opsional)")
    experiment.add_argument("--trials", type=int)
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--workers", type=int)
    experiment.add_argument("--n-min", type=int, default=0, help="Batas bawah n untuk kemiringan")
    experiment.add_argument("--master", action="store_true", help="Tambahkan ke laporan master")
    experiment.add_argument("--data-dir", default="data")
    experiment.add_argument("--quiet", action="store_true", help="Tanpa progress bar")
    experiment.set_defaults(handler=cmd_experiment)

    lb = sub.add_parser("lb-verify", help="Keluarga sulit dan sertifikatnya")
    lb.add_argument("--sigma-bar", type=float, default=1.0)
    lb.add_argument("--rho-perp", type=float, help="Default titik tengah interval yang diizinkan")
    lb.add_argument("--tau-bar", type=float, help="Default 2 / (1 - gamma)")
    lb.add_argument("--gamma", type=float, default=0.9)
    lb.add_argument("--n", type=int, default=10_000)
    lb.add_argument("--U", type=int, default=8)
    lb.add_argument("--radius-bar", type=float)
    lb.add_argument("--seed", type=int, default=0)
    lb.add_argument("--max-pairs", type=int, default=5000)
    lb.add_argument("--out", help="CSV sertifikat (default stdout)")
    lb.add_argument("--excel", help="Laporan Excel (opsional)")
    lb.set_defaults(handler=cmd_lb_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except NumericalError as exc:
        logger.error("Gagal (numerik): %s", exc)
        for key, value in exc.diagnostics.items():
            logger.error("  %s = %s", key, value)
        return 2
    except DomainError as exc:
        logger.error("Gagal (parameter): %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
