import logging

import streamlit as st

from config import VERSION, log_level
from db import ensure_schema, runs_count
from pages_shared import _clear_query_params, _get_query_params, _qp_first
from ui_pages.page_about import render as render_about
from ui_pages.page_experiments import render as render_experiments
from ui_pages.page_history import render as render_history
from ui_pages.page_law import render as render_law
from ui_pages.page_limits import render as render_limits
from ui_pages.page_test import render as render_test

logging.basicConfig(level=getattr(logging, log_level().upper(), logging.WARNING))

st.set_page_config(page_title="covtest", page_icon="📈", layout="wide")
ensure_schema()

_NAV_PAGES = [
    "Spectral law",
    "LSS limits",
    "Test data",
    "Experiments",
    "History",
    "About",
]

_qp = _get_query_params()
_open_run = (_qp_first(_qp, "run") or "").strip()
if _open_run:
    st.session_state["nav_page"] = "History"
    st.session_state["history_open_run"] = _open_run
    _clear_query_params()

nav_page = st.sidebar.radio("covtest", _NAV_PAGES, index=0, key="nav_page")

st.sidebar.caption(f"Recorded runs: **{runs_count()}**  ·  v{VERSION}")

if nav_page == "Spectral law":
    render_law()
elif nav_page == "LSS limits":
    render_limits()
elif nav_page == "Test data":
    render_test()
elif nav_page == "Experiments":
    render_experiments()
elif nav_page == "History":
    render_history()
elif nav_page == "About":
    render_about()
