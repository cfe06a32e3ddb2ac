from pathlib import Path

import pandas as pd
import streamlit as st

from config import DB_PATH_ENV, LOG_LEVEL_ENV, THREADS_ENV, VERSION, db_path, default_threads, log_level

_README = Path(__file__).resolve().parent.parent / "README.md"


def _settings_frame() -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"setting": THREADS_ENV, "value": str(default_threads())},
            {"setting": DB_PATH_ENV, "value": db_path()},
            {"setting": LOG_LEVEL_ENV, "value": log_level()},
        ]
    )


def render() -> None:
    st.title("ℹ️ About")
    st.caption(f"covtest v{VERSION}")

    try:
        md = _README.read_text(encoding="utf-8", errors="ignore")
    except OSError:
        md = ""
    if md.strip():
        st.markdown(md)
    else:
        st.warning("README.md wasn't found next to app.py.")

    with st.expander("Runtime settings"):
        st.dataframe(_settings_frame(), hide_index=True, use_container_width=True)
