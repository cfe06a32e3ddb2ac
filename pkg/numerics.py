# numerics.py

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from config import EXTRAPOLATION_TOL
from errors import ExtrapolationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, complex, np.ndarray]


# ---------------- Limits h -> 0 ----------------

@dataclass
class Extrapolation:
    value: ArrayLike
    error: float
    levels: int
    converged: bool


def _max_abs(x: ArrayLike) -> float:
    return float(np.max(np.abs(np.asarray(x)))) if np.size(x) else 0.0


def neville_at_zero(hs: Sequence[float], values: Sequence[ArrayLike]) -> List[ArrayLike]:
    """Diagonal of Neville's tableau evaluated at h = 0.

    Entry k is the degree-k polynomial extrapolant through the first k+1
    samples, so entry 1 is the two-point linear extrapolation.
    """
    hs = [float(h) for h in hs]
    cols = [np.asarray(v) for v in values]
    diag = [cols[0]]
    k = 1
    while len(cols) > 1:
        nxt = []
        for i in range(len(cols) - 1):
            hi, hk = hs[i], hs[i + k]
            nxt.append((hi * cols[i + 1] - hk * cols[i]) / (hi - hk))
        cols = nxt
        diag.append(cols[0])
        k += 1
    return diag


def extrapolate_to_zero(
    fn: Callable[[float], ArrayLike],
    hs: Sequence[float],
    tol: float = 1e-9,
    accept_tol: float = EXTRAPOLATION_TOL,
    max_levels: int = 8,
    what: str = "limit",
) -> Extrapolation:
    """Richardson/Neville extrapolation of fn(h) to h = 0.

    Starts from the given levels (two-point linear extrapolation when two are
    given) and halves h while successive diagonal estimates differ by more
    than ``tol``. Raises when the final disagreement exceeds ``accept_tol``.
    """
    hs = list(hs)
    vals = [fn(h) for h in hs]
    while True:
        diag = neville_at_zero(hs, vals)
        scale = max(1.0, _max_abs(diag[-1]))
        err = _max_abs(np.asarray(diag[-1]) - np.asarray(diag[-2])) if len(diag) > 1 else float("inf")
        if err <= tol * scale or len(hs) >= max_levels:
            break
        hs.append(hs[-1] / 2.0)
        vals.append(fn(hs[-1]))
    converged = err <= accept_tol * scale
    logger.debug("%s: %d levels, disagreement %.3e", what, len(hs), err)
    if not converged:
        raise ExtrapolationError(
            f"{what} did not settle: successive extrapolants differ by {err:.3e}",
            levels=len(hs),
        )
    return Extrapolation(value=diag[-1], error=err, levels=len(hs), converged=True)


# ---------------- Quadrature rules ----------------

def gauss_legendre_panels(breaks: Sequence[float], nodes_per_panel: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over consecutive break intervals."""
    t, w = np.polynomial.legendre.leggauss(int(nodes_per_panel))
    xs: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    bs = sorted(set(float(b) for b in breaks))
    for lo, hi in zip(bs[:-1], bs[1:]):
        half = 0.5 * (hi - lo)
        xs.append(lo + half * (t + 1.0))
        ws.append(half * w)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def refine_breaks(breaks: Sequence[float], pieces: int) -> List[float]:
    out: List[float] = []
    bs = sorted(set(float(b) for b in breaks))
    for lo, hi in zip(bs[:-1], bs[1:]):
        out.extend(np.linspace(lo, hi, pieces + 1)[:-1].tolist())
    out.append(bs[-1])
    return out


def circle_nodes(center: float, radius: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes on a counter-clockwise circle, offset so none is real.

    Returns (z, dz) with sum(F(z) * dz) approximating the contour integral.
    """
    theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    e = np.exp(1j * theta)
    z = center + radius * e
    dz = 1j * radius * e * (2.0 * np.pi / n)
    return z, dz
