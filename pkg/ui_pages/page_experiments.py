"""Experiments — Monte Carlo calibration, power and ROC runs."""

import numpy as np
import plotly.express as px
import plotly.graph_objects as go
import streamlit as st
from scipy import stats

from config import ALL_KINDS, DEFAULT_ALPHA, DESK_N, DESK_PHI, DESK_REPS, default_threads
from db import save_run
from errors import CovTestError
from lss_statistics import StatParams
from pages_shared import PALETTE, PLOTLY_TEMPLATE, _parse_floats, _show_error, _summary_header
from simulation import (
    ALT_KINDS,
    AlternativeSpec,
    EnsembleConfig,
    EntryDistribution,
    ecdf_experiment,
    kappa4_of,
    power_experiment,
    roc_experiment,
)

_DISTS = ["gaussian", "twopoint_neg", "twopoint_pos"]


def _ensemble_inputs() -> EnsembleConfig:
    c1, c2, c3, c4 = st.columns(4)
    n = c1.number_input("n", min_value=2, value=DESK_N, step=50)
    phi = c2.number_input("phi", min_value=1.0, value=DESK_PHI, step=10.0)
    reps = c3.number_input("Replicates", min_value=1, value=DESK_REPS, step=100)
    seed = c4.number_input("Seed", min_value=0, value=0, step=1)
    dist = st.selectbox("Entry law", _DISTS)
    return EnsembleConfig(
        n=int(n),
        phi=float(phi),
        dist=EntryDistribution.from_tag(dist),
        seed=int(seed),
        reps=int(reps),
        threads=default_threads(),
    )


def _maybe_record(kind: str, cfg: EnsembleConfig, summary, frame) -> None:
    if st.session_state.get("exp_record"):
        run_id = save_run(kind, cfg.describe(), summary, frame)
        st.caption(f"Recorded as run `{run_id}`.")


def _render_ecdf(cfg: EnsembleConfig, kinds, kappa4: float) -> None:
    compare = st.selectbox("Compare against (two-sample KS)", ["none"] + _DISTS)
    if not st.button("Run calibration"):
        return
    other = None if compare == "none" else EntryDistribution.from_tag(compare)
    with st.spinner("Simulating..."):
        res = ecdf_experiment(cfg, kinds, StatParams(), kappa4=kappa4, compare=other)
    st.caption(_summary_header(res.config) + f" • kappa4 of entries = {kappa4_of(cfg.dist):g}")
    st.dataframe(res.summary(), use_container_width=True)

    grid = np.linspace(-4, 4, 401)
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=grid, y=stats.norm.cdf(grid), name="N(0,1)", line=dict(color="black", dash="dash")))
    for j, kind in enumerate(res.kinds):
        zs = np.sort(res.z[:, j])
        fig.add_trace(
            go.Scatter(
                x=zs,
                y=np.arange(1, zs.size + 1) / zs.size,
                mode="lines",
                name=kind,
                line=dict(shape="hv", color=PALETTE[j % len(PALETTE)]),
            )
        )
    fig.update_layout(template=PLOTLY_TEMPLATE, xaxis_title="z", yaxis_title="ECDF", height=420)
    st.plotly_chart(fig, use_container_width=True)
    _maybe_record("ecdf", cfg, res.summary(), res.to_frame())


def _render_power(cfg: EnsembleConfig, kinds, kappa4: float) -> None:
    c1, c2, c3 = st.columns(3)
    alt_kind = c1.selectbox("Alternative", list(ALT_KINDS))
    eps_raw = c2.text_input("Epsilons", value="0, 0.05, 0.1, 0.2, 0.3")
    alpha = c3.number_input("alpha", value=DEFAULT_ALPHA, min_value=1e-6, max_value=0.5, format="%.4f")
    if not st.button("Run sweep"):
        return
    eps = _parse_floats(eps_raw)
    if not eps:
        st.warning("Enter at least one epsilon.")
        return
    with st.spinner("Simulating..."):
        res = power_experiment(cfg, eps, kinds, AlternativeSpec(kind=alt_kind), alpha=alpha, kappa4=kappa4)
    frame = res.to_frame()
    fig = px.line(
        frame, x="epsilon", y="power", color="kind", markers=True, template=PLOTLY_TEMPLATE,
        color_discrete_sequence=PALETTE,
    )
    fig.add_hline(y=alpha, line_dash="dot", line_color="gray")
    st.plotly_chart(fig, use_container_width=True)
    st.dataframe(frame, hide_index=True, use_container_width=True)
    _maybe_record("power", cfg, res.summary(), frame)


def _render_roc(cfg: EnsembleConfig, kinds, kappa4: float) -> None:
    c1, c2 = st.columns(2)
    alt_kind = c1.selectbox("Alternative", list(ALT_KINDS))
    eps = c2.number_input("epsilon", value=0.3, min_value=0.0, step=0.05)
    if not st.button("Run ROC"):
        return
    alt = AlternativeSpec(kind=alt_kind, epsilon=float(eps))
    alt.validate()
    alt_cfg = EnsembleConfig(
        n=cfg.n, phi=cfg.phi, dist=cfg.dist, seed=cfg.seed, reps=cfg.reps, threads=cfg.threads,
        alternative=alt, stream=cfg.stream + 1,
    )
    with st.spinner("Simulating..."):
        res = roc_experiment(cfg, alt_cfg, kinds, StatParams(), kappa4=kappa4)
    frame = res.to_frame()
    fig = px.line(frame, x="fpr", y="tpr", color="kind", template=PLOTLY_TEMPLATE, color_discrete_sequence=PALETTE)
    fig.add_shape(type="line", x0=0, y0=0, x1=1, y1=1, line=dict(dash="dot", color="gray"))
    st.plotly_chart(fig, use_container_width=True)
    st.dataframe(res.summary(), use_container_width=True)
    _maybe_record("roc", cfg, res.summary(), frame)


def render() -> None:
    st.title("🎲 Experiments")
    mode = st.radio("Experiment", ["Null calibration", "Power", "ROC"], horizontal=True, key="exp_mode")
    cfg = _ensemble_inputs()
    c1, c2 = st.columns([3, 1])
    kinds = c1.multiselect("Statistics", list(ALL_KINDS), default=["t1g", "t2g", "t1l"])
    kappa4 = c2.number_input("kappa4 (null constants)", value=0.0, step=0.5)
    st.checkbox("Record in history", value=True, key="exp_record")
    if not kinds:
        return
    try:
        if mode == "Null calibration":
            _render_ecdf(cfg, kinds, kappa4)
        elif mode == "Power":
            _render_power(cfg, kinds, kappa4)
        else:
            _render_roc(cfg, kinds, kappa4)
    except CovTestError as exc:
        _show_error(exc)
