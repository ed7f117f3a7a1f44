# frontend/app.py

"""
Aplikasi Streamlit untuk eksperimen kernel TD multi-langkah.
"""

import logging
import os
import sys

import streamlit as st
from streamlit_option_menu import option_menu

# Tambahkan path root project ke sys.path agar impor modul lokal lebih mudah.
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Impor fungsi view untuk mengontrol tampilan per-halaman.
from frontend.view.experiment_view import show_experiment_page
from frontend.view.results_view import show_results_page
from frontend.view.theory_view import show_theory_page

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler()],
)

PAGES = ["Eksperimen", "Teori & Batas Bawah", "Hasil"]

# Konfigurasi halaman Streamlit.
st.set_page_config(
    page_title="Kernel TD Multi-Langkah",
    page_icon="📈",
    layout="wide",
    initial_sidebar_state="expanded",
)

# Sembunyikan hamburger menu, footer, dan navigasi sidebar bawaan Streamlit.
hide_menu_style = """
    <style>
    #MainMenu {visibility: hidden;}
    footer {visibility: hidden;}
    div[data-testid="stSidebarNav"] {display: none;}
    </style>
"""
st.markdown(hide_menu_style, unsafe_allow_html=True)

# CSS untuk judul, tombol, dan kartu metrik.
st.markdown("""
<style>
    .main-header {
        font-size: 2.3rem;
        font-weight: 700;
        margin-bottom: 0.5rem;
        text-align: center;
    }
    .main-subheader {
        font-size: 1.1rem;
        color: #aaaaaa;
        margin-bottom: 1.5rem;
        text-align: center;
    }
    .stButton button {
        background-color: #2E86AB;
        color: white;
        border: none;
        border-radius: 5px;
    }
    div[data-testid="stMetric"] {
        background-color: #1D2530;
        border-radius: 8px;
        padding: 0.6rem;
    }
</style>
""", unsafe_allow_html=True)

# Header utama.
st.markdown('<div class="main-header">Kernel TD Multi-Langkah</div>', unsafe_allow_html=True)
st.markdown('<div class="main-subheader">Estimasi fungsi nilai, laporan teori, dan sertifikat batas bawah</div>', unsafe_allow_html=True)

# Sidebar: kontrol navigasi dan sinkronisasi state halaman.
with st.sidebar:
    # Buat state "page" jika belum ada (default: Eksperimen).
    if "page" not in st.session_state:
        st.session_state.page = PAGES[0]

    # Simpan nilai sebelumnya untuk mendeteksi perubahan pilihan.
    previous_page = st.session_state.page

    # Menu navigasi menggunakan option_menu.
    selected = option_menu(
        "Menu",
        PAGES,
        icons=["play-circle-fill", "calculator-fill", "table"],
        menu_icon="list",
        default_index=PAGES.index(previous_page) if previous_page in PAGES else 0,
        styles={
            "container": {"padding": "0!important", "background-color": "#262730"},
            "icon": {"color": "#2E86AB", "font-size": "18px"},
            "nav-link": {
                "font-size": "16px",
                "text-align": "left",
                "margin": "0px",
                "padding": "10px",
                "--hover-color": "#363B46",
            },
            "nav-link-selected": {"background-color": "#2E86AB"},
        },
    )
    
    # Perbarui state dan rerun bila ada perubahan halaman.
    if selected != previous_page:
        st.session_state.page = selected
        st.rerun()
    
    st.sidebar.markdown("---")
    st.sidebar.info("Data, konfigurasi, dan hasil disimpan di folder data/.")

# Routing halaman berdasarkan state.
if st.session_state.page == "Eksperimen":
    show_experiment_page()
elif st.session_state.page == "Teori & Batas Bawah":
    show_theory_page()
else:
    show_results_page()
