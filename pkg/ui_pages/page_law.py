import numpy as np
import pandas as pd
import plotly.graph_objects as go
import streamlit as st

from config import DENSITY_POINTS
from errors import CovTestError
from lss_statistics import gram_eigenvalues
from pages_shared import PLOTLY_TEMPLATE, PRIMARY, ACCENT, _show_error, _spectrum_input
from simulation import spectrum_diagonal
from spectral_law import PopulationSpectrum, asymptotic_edges, density, esd_distance


def _simulated_eigenvalues(spec: PopulationSpectrum, n: int, seed: int) -> np.ndarray:
    p = int(round(spec.phi * n))
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((p, n)) * (p * n) ** -0.25
    return gram_eigenvalues(X, spectrum_diagonal(spec, p))


@st.cache_data(show_spinner=False)
def _density_frame(spec_text: str, phi: float, n_points: int):
    spec = PopulationSpectrum.parse(spec_text, phi) if spec_text else PopulationSpectrum.identity(phi)
    grid = density(spec, n_points=n_points)
    frame = grid.to_frame()
    frame["cdf"] = grid.cdf_values()
    return frame, grid.total_mass, grid.support, int(grid.flags.sum())


def render() -> None:
    st.title("📈 Spectral law")
    st.caption("Limiting eigenvalue law of the scaled sample covariance when p/n = phi is large.")

    spec = _spectrum_input("law")
    if spec is None:
        return
    n_points = st.slider("Grid points", min_value=200, max_value=8000, value=DENSITY_POINTS, step=200)

    try:
        frame, mass, sup, flagged = _density_frame(
            "" if spec.is_identity else spec.to_string(), spec.phi, n_points
        )
    except CovTestError as exc:
        _show_error(exc)
        return

    c1, c2, c3 = st.columns(3)
    c1.metric("gamma_-", f"{sup.gamma_minus:.6f}")
    c2.metric("gamma_+", f"{sup.gamma_plus:.6f}")
    c3.metric("Total mass", f"{mass:.6f}")
    if flagged:
        st.warning(f"{flagged} grid points did not converge on the real axis.")

    with st.expander("Large-phi edge expansion"):
        rows = []
        for order in (0, 1, 2):
            lo, hi = asymptotic_edges(spec, order=order)
            rows.append({"order": order, "gamma_-": lo, "gamma_+": hi})
        st.dataframe(pd.DataFrame(rows), hide_index=True, use_container_width=True)

    fig = go.Figure()
    fig.add_trace(go.Scatter(x=frame["x"], y=frame["rho"], mode="lines", name="density", line=dict(color=PRIMARY)))
    fig.add_trace(
        go.Scatter(x=frame["x"], y=frame["cdf"], mode="lines", name="cdf", yaxis="y2", line=dict(color=ACCENT, dash="dot"))
    )
    fig.update_layout(
        template=PLOTLY_TEMPLATE,
        xaxis_title="x",
        yaxis_title="rho(x)",
        yaxis2=dict(title="F(x)", overlaying="y", side="right", range=[0, 1]),
        height=420,
        margin=dict(l=40, r=40, t=30, b=40),
    )
    st.plotly_chart(fig, use_container_width=True)

    st.download_button(
        "Download density CSV",
        frame[["x", "rho"]].to_csv(index=False, float_format="%.17g"),
        file_name="density.csv",
        mime="text/csv",
    )

    with st.expander("Overlay a simulated spectrum"):
        c4, c5 = st.columns(2)
        n = c4.number_input("n", min_value=2, value=100, step=50, key="law_sim_n")
        seed = c5.number_input("seed", min_value=0, value=0, step=1, key="law_sim_seed")
        if st.button("Simulate", key="law_sim_go"):
            try:
                eigs = _simulated_eigenvalues(spec, int(n), int(seed))
                dist = esd_distance(eigs, spec)
            except CovTestError as exc:
                _show_error(exc)
                return
            hist = go.Figure()
            hist.add_trace(go.Histogram(x=eigs, histnorm="probability density", name="ESD", marker_color=ACCENT, opacity=0.6))
            hist.add_trace(go.Scatter(x=frame["x"], y=frame["rho"], mode="lines", name="limit", line=dict(color=PRIMARY)))
            hist.update_layout(template=PLOTLY_TEMPLATE, height=380, barmode="overlay")
            st.plotly_chart(hist, use_container_width=True)
            st.caption(f"Kolmogorov distance to the limit: {dist:.4f}")
