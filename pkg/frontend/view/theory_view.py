# frontend/view/theory_view.py

"""Halaman Streamlit untuk laporan teori dan sertifikat batas bawah."""

import logging
import math
import os
import sys

import pandas as pd
import streamlit as st

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from backend.errors import DomainError, NumericalError
from backend.harness import FAST_MIXING, SLOW_MIXING, ExperimentConfig, WeightScheme
from backend.lowerbound import admissible_rho_interval, certificate_frame, hard_family, verify_family
from backend.oracle import build_oracle, check_sigma_bounds, noise_report
from backend.theory import build_theory_report
from frontend.components.result_tables import display_certificates

logger = logging.getLogger(__name__)

ANGLES = {"0": 0.0, "pi/16": math.pi / 16, "pi/4": math.pi / 4}
MIXING = {"e^4/2": FAST_MIXING, "e^6/2": SLOW_MIXING, "2": 2.0}


def show_theory_page():
    """Merender halaman 'Teori & Batas Bawah' dengan dua tab."""
    st.header("Teori & Batas Bawah")
    theory_tab, lower_tab = st.tabs(["Laporan Teori", "Sertifikat Batas Bawah"])
    with theory_tab:
        show_theory_report()
    with lower_tab:
        show_lower_bound()


def show_theory_report():
    col1, col2, col3 = st.columns(3)
    with col1:
        tau_label = st.selectbox("tau*", list(MIXING))
        theta_label = st.selectbox("Sudut theta", list(ANGLES))
    with col2:
        decay = st.selectbox("Kernel", ["poly", "exp"])
        K = st.number_input("Look-ahead K", min_value=1, max_value=50, value=1)
    with col3:
        n = st.number_input("Ukuran sampel n", min_value=10, value=5000, step=100)
        gamma = st.number_input("gamma", min_value=0.0, max_value=0.99, value=0.9, step=0.05)

    if not st.button("Hitung Laporan", type="primary"):
        return
    try:
        config = ExperimentConfig(tau_star=MIXING[tau_label], theta=ANGLES[theta_label], gamma=float(gamma), decay=decay)
        mrp, spec = config.build_mrp(), config.build_kernel()
        w = WeightScheme("kstep", int(K)).weights()
        with st.spinner("Menghitung oracle..."):
            report = noise_report(build_oracle(mrp, spec), w)
            theory = build_theory_report(mrp, spec, w, int(n), report=report)
    except (DomainError, NumericalError) as e:
        st.error(f"Gagal menghitung laporan: {str(e)}")
        logger.error("Gagal menghitung laporan teori: %s", e)
        return

    col1, col2, col3, col4 = st.columns(4)
    col1.metric("delta_n", f"{theory.delta_n:.4g}")
    col2.metric("lambda_n", f"{theory.ridge:.3e}")
    col3.metric("d_n", theory.d_n)
    col4.metric("||V_perp||", f"{report.v_perp_norm:.4g}")

    st.subheader("Besaran Populasi")
    st.dataframe(pd.DataFrame([report.scalars()]).T.rename(columns={0: "nilai"}), use_container_width=True)
    st.subheader("Ketaksamaan Derau")
    checks = check_sigma_bounds(report, mrp.gamma, report.gamma_bar)
    st.dataframe(
        pd.DataFrame([{"check": c.name, "lhs": c.lhs, "rhs": c.rhs, "applicable": c.applicable, "holds": c.holds}
                      for c in checks]),
        use_container_width=True,
    )
    st.subheader("Laporan Teori")
    st.dataframe(pd.DataFrame([theory.scalars()]).T.rename(columns={0: "nilai"}), use_container_width=True)


def show_lower_bound():
    col1, col2, col3 = st.columns(3)
    with col1:
        sigma_bar = st.number_input("sigma_bar", min_value=0.01, value=1.0)
        gamma = st.number_input("gamma ", min_value=0.0, max_value=0.99, value=0.9, step=0.05)
    with col2:
        U = st.selectbox("U", [2, 4, 8, 16, 32], index=2)
        n = st.number_input("n", min_value=100, value=10_000, step=1000)
    with col3:
        horizon = 1.0 / (1.0 - gamma)
        tau_bar = st.number_input("tau_bar", min_value=1.0, value=2.0 * horizon)
        try:
            lower, upper = admissible_rho_interval(sigma_bar, gamma, tau_bar, 2 * int(U), int(n))
            st.caption(f"Interval rho_perp: [{lower:.4g}, {upper:.4g}]")
        except DomainError as e:
            st.caption(f"Interval rho_perp tidak tersedia: {e}")

    if not st.button("Bangun dan Verifikasi", type="primary"):
        return
    try:
        with st.spinner("Membangun keluarga sulit..."):
            family = hard_family(sigma_bar=sigma_bar, tau_bar=tau_bar, gamma=gamma, n=int(n), U=int(U))
            frame = certificate_frame(verify_family(family))
    except (DomainError, NumericalError) as e:
        st.error(f"Gagal membangun keluarga: {str(e)}")
        logger.error("Gagal membangun keluarga sulit: %s", e)
        return

    st.subheader("Ringkasan Keluarga")
    st.json(family.summary())
    st.subheader("Sertifikat")
    display_certificates(frame)
    st.download_button(
        label="Unduh Sertifikat CSV",
        data=frame.to_csv(index=False).encode("utf-8"),
        file_name=f"certificates_U{U}_n{n}.csv",
        mime="text/csv",
    )
