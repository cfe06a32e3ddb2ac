import pandas as pd
import streamlit as st

from clt_functionals import global_limit, global_limit_identity, local_limit_bulk, local_limit_edge
from config import DEFAULT_A, DEFAULT_B, DEFAULT_C, DEFAULT_T, LOCAL_LOG_OFFSET
from errors import CovTestError
from lss_functions import BASES, TestFunctionSpec, global_function
from pages_shared import _show_error, _spectrum_input
from spectral_law import support


def _limit_tables(lim) -> None:
    means = pd.DataFrame({"function": lim.labels or list(range(len(lim.means))), "mean": lim.means})
    st.dataframe(means, hide_index=True, use_container_width=True)
    cov = pd.DataFrame(lim.covariance, index=lim.labels or None, columns=lim.labels or None)
    st.markdown("**Covariance**")
    st.dataframe(cov, use_container_width=True)
    if not lim.converged:
        st.warning("Not converged: " + "; ".join(lim.diagnostics))
    elif lim.diagnostics:
        st.caption("; ".join(lim.diagnostics))


def _render_global() -> None:
    spec = _spectrum_input("lim")
    if spec is None:
        return
    bases = st.multiselect("Bases", [x for x in BASES if x != "custom"], default=["linear", "quadratic", "log"])
    c1, c2, c3 = st.columns(3)
    kappa4 = c1.number_input("kappa4", value=0.0, step=0.5)
    c = c2.number_input("c", value=DEFAULT_C, step=0.5)
    t = c3.number_input("t (> 1)", value=DEFAULT_T, min_value=1.0001, step=0.5)
    if not bases or not st.button("Compute", key="lim_global_go"):
        return
    try:
        with st.spinner("Computing limit..."):
            if spec.is_identity:
                lim = global_limit_identity(bases, kappa4, c=c, t=t, phi=spec.phi)
            else:
                sup = support(spec)
                tfs = [
                    global_function(b, spec.phi, c=c, t=t, support_edges=(sup.gamma_minus, sup.gamma_plus))
                    for b in bases
                ]
                lim = global_limit(tfs, spec, kappa4, sup=sup)
    except CovTestError as exc:
        _show_error(exc)
        return
    _limit_tables(lim)


def _render_local() -> None:
    bases = st.multiselect("Bases", ["linear", "quadratic", "logshift"], default=["linear", "quadratic", "logshift"])
    c1, c2, c3, c4 = st.columns(4)
    side = c1.selectbox("Regime", ["right", "left", "bulk"])
    a = c2.number_input("a", value=DEFAULT_A, min_value=0.01, step=0.5)
    b = c3.number_input("b", value=DEFAULT_B, min_value=0.0, step=0.5)
    off = c4.number_input("log offset", value=LOCAL_LOG_OFFSET, min_value=0.01, step=0.1)
    if not bases or not st.button("Compute", key="lim_local_go"):
        return
    tfs = [
        TestFunctionSpec(base=x, c=(b + a + off) if x == "logshift" else DEFAULT_C, center=0.0, eta0=1.0, a=a, b=b)
        for x in bases
    ]
    try:
        with st.spinner("Computing limit..."):
            lim = local_limit_bulk(tfs) if side == "bulk" else local_limit_edge(tfs, side=side)
    except CovTestError as exc:
        _show_error(exc)
        return
    _limit_tables(lim)


def render() -> None:
    st.title("🧮 LSS limits")
    mode = st.radio("Scale", ["Global", "Local"], horizontal=True, key="lim_mode")
    if mode == "Global":
        _render_global()
    else:
        _render_local()
