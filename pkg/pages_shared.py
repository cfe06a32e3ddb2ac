import re
from datetime import datetime
from typing import List, Optional, Tuple

import plotly.express as px
import streamlit as st

from errors import CovTestError
from spectral_law import PopulationSpectrum

PLOTLY_TEMPLATE = "plotly_white"
PALETTE = px.colors.qualitative.Set2
PRIMARY = "#4C78A8"
ACCENT = "#F58518"

HISTORY_MAX_ROWS = 500

_FLOAT_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


def _parse_floats(raw: str) -> List[float]:
    s = (raw or "").strip()
    if not s:
        return []
    out: List[float] = []
    for tok in _FLOAT_RE.findall(s):
        try:
            out.append(float(tok))
        except ValueError:
            continue
    return out


def _spectrum_input(key: str, phi_default: float = 50.0) -> Optional[PopulationSpectrum]:
    """Sidebar-free spectrum widget; shows the error and returns None on bad input."""
    col1, col2 = st.columns([1, 3])
    phi = col1.number_input("phi = p/n", min_value=1.0, value=float(phi_default), step=1.0, key=f"{key}_phi")
    text = col2.text_input(
        "Population spectrum (weight:value, ...)",
        value="",
        placeholder="identity; e.g. 0.5:1,0.5:2",
        key=f"{key}_pi",
    )
    try:
        if text.strip():
            return PopulationSpectrum.parse(text, phi)
        return PopulationSpectrum.identity(phi)
    except CovTestError as exc:
        _show_error(exc)
        return None


def _show_error(exc: CovTestError) -> None:
    d = exc.to_dict()
    st.error(f"{d.get('error', 'error')}: {d.get('message', str(exc))}")


def _summary_header(cfg: dict) -> str:
    bits: List[str] = []
    for k in ("n", "p", "phi", "dist", "reps", "seed"):
        v = cfg.get(k)
        if v is None:
            continue
        bits.append(f"{k}={v}")
    return " • ".join(bits)


def _qp_first(qp: dict, key: str) -> str:
    v = qp.get(key)
    if isinstance(v, list):
        return v[0] if v else ""
    return str(v) if v is not None else ""


def _get_query_params() -> dict:
    try:
        return dict(st.query_params)
    except Exception:
        return {}


def _clear_query_params() -> None:
    try:
        st.query_params.clear()
    except Exception:
        pass


def _run_sort_key(created_at: str, run_id: str) -> Tuple[str, str]:
    return ((created_at or "").strip() or "0000", (run_id or "").strip())


def _format_date_added(iso_str: str) -> str:
    s = (iso_str or "").strip()
    if not s:
        return "—"
    try:
        if "T" in s:
            dt = datetime.fromisoformat(s.replace("Z", "+00:00"))
        else:
            dt = datetime.strptime(s[:10], "%Y-%m-%d")
        return dt.strftime("%b ") + str(dt.day) + dt.strftime(", %Y")
    except Exception:
        return s[:10] if len(s) >= 10 else s or "—"
