from typing import List, Tuple

import streamlit as st

from db import delete_run, get_run, list_runs
from pages_shared import HISTORY_MAX_ROWS, _format_date_added, _run_sort_key, _summary_header


def _render_run(run_id: str) -> None:
    run = get_run(run_id)
    if not run:
        st.warning(f"Run `{run_id}` not found.")
        return
    st.subheader(f"{run['kind']} · {_format_date_added(run['created_at'])}")
    st.caption(_summary_header(run.get("params") or {}) + f" • v{run.get('version') or '?'}")
    st.json(run.get("summary"))
    rows = run.get("rows")
    if rows is not None:
        st.dataframe(rows, hide_index=True, use_container_width=True)
        st.download_button(
            "Download rows CSV",
            rows.to_csv(index=False, float_format="%.17g"),
            file_name=f"{run['kind']}_{run_id[:8]}.csv",
            mime="text/csv",
        )
    if st.button("Delete this run", key=f"del_{run_id}"):
        delete_run(run_id)
        st.session_state.pop("history_open_run", None)
        st.rerun()


def render() -> None:
    st.title("📅 History")
    open_run = (st.session_state.get("history_open_run") or "").strip()
    if open_run:
        _render_run(open_run)
        st.markdown("---")

    kind = st.selectbox("Kind", ["all", "ecdf", "power", "roc"])
    runs = list_runs(limit=HISTORY_MAX_ROWS, kind=None if kind == "all" else kind)

    rows: List[Tuple[Tuple[str, str], str, str, str, str]] = []
    for it in runs:
        raw = (it.get("created_at") or "").strip()
        rid = it.get("run_id") or ""
        rows.append((_run_sort_key(raw, rid), _format_date_added(raw), it.get("kind") or "", _summary_header(it.get("params") or {}), rid))

    rows.sort(key=lambda r: r[0], reverse=True)
    if not rows:
        st.markdown("No recorded runs yet.")
        return

    lines = [f"- **{r[1]}** · {r[2]} · {r[3]} · [open](?run={r[4]})" for r in rows]
    st.markdown("\n".join(lines))
