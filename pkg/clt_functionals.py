# clt_functionals.py

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sp_fft

from config import (
    CONTOUR_MAX_NODES,
    CONTOUR_NODES,
    EXTRAPOLATION_TOL,
    IDENTITY_CHEBYSHEV_NODES,
    LOCAL_QUAD_NODES,
    RADIUS_DELTAS,
    RADIUS_MAX_LEVELS,
)
from errors import (
    CoincidentPointError,
    ConvergenceError,
    DomainError,
    ExtrapolationError,
    LogDomainError,
    NonAnalyticError,
)
from lss_functions import LOG_BASES, TestFunctionSpec
from numerics import circle_nodes, extrapolate_to_zero, gauss_legendre_panels, refine_breaks
from spectral_law import (
    PopulationSpectrum,
    StieltjesValue,
    SupportInfo,
    boundary_m,
    identity_edges,
    m_derivatives,
    solve_m,
    solve_m_many,
    support,
)

logger = logging.getLogger(__name__)

REGIMES = ("global", "local-bulk", "local-edge")


# ---------------- Types ----------------

@dataclass(frozen=True)
class BoundaryValues:
    x: float
    m_plus: complex
    m_minus: complex
    b1_plus: complex
    b1_minus: complex
    b2_plus: complex
    b2_minus: complex
    m1_plus: complex = 0j
    m2_plus: complex = 0j


@dataclass
class GaussianLimit:
    means: np.ndarray
    covariance: np.ndarray
    kappa4: Optional[float]
    regime: str
    labels: List[str] = field(default_factory=list)
    converged: bool = True
    diagnostics: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.means = np.asarray(self.means, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.regime not in REGIMES:
            raise DomainError(f"unknown regime {self.regime!r}")

    def variance(self, i: int = 0) -> float:
        return float(self.covariance[i, i])

    def to_dict(self) -> Dict:
        return {
            "means": [float(v) for v in self.means],
            "cov": [[float(v) for v in row] for row in self.covariance],
            "regime": self.regime,
            "kappa4": self.kappa4,
            "labels": list(self.labels),
            "converged": self.converged,
            "diagnostics": list(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianLimit":
        d = json.loads(text)
        return cls(
            means=np.asarray(d["means"], dtype=float),
            covariance=np.asarray(d["cov"], dtype=float),
            kappa4=d.get("kappa4"),
            regime=d["regime"],
            labels=list(d.get("labels") or []),
            converged=bool(d.get("converged", True)),
            diagnostics=list(d.get("diagnostics") or []),
        )


# ---------------- Bias and kernels ----------------

def b_terms(m, m1, m2, kappa4: float):
    """b1 = m''/(2m') - m'/m and b2 = kappa4 (m^2 m''/(2 m'^2) - m)."""
    m, m1, m2 = (np.asarray(v, dtype=complex) for v in (m, m1, m2))
    b1 = m2 / (2.0 * m1) - m1 / m
    b2 = kappa4 * (m * m * m2 / (2.0 * m1 * m1) - m)
    return b1, b2


def _atom_factor(m: np.ndarray, spec: PopulationSpectrum) -> np.ndarray:
    eps = 1.0 / spec.sqrt_phi
    sig = spec.sigma
    return sig / (1.0 + eps * np.asarray(m)[..., None] * sig) ** 2


def alpha_hat_matrix(m_a, m1_a, m_b, m1_b, spec: PopulationSpectrum, kappa4: float) -> np.ndarray:
    """alpha-hat(z_a, z_b) for all pairs; rank at most the number of atoms."""
    if kappa4 == 0:
        return np.zeros((np.size(m_a), np.size(m_b)), dtype=complex)
    A = _atom_factor(np.ravel(m_a), spec) * spec.w
    B = _atom_factor(np.ravel(m_b), spec)
    core = A @ B.T
    return kappa4 * np.ravel(m1_a)[:, None] * core * np.ravel(m1_b)[None, :]


def beta_hat_matrix(m_a, m1_a, z_a, m_b, m1_b, z_b) -> np.ndarray:
    ma, m1a, za = (np.ravel(np.asarray(v, dtype=complex)) for v in (m_a, m1_a, z_a))
    mb, m1b, zb = (np.ravel(np.asarray(v, dtype=complex)) for v in (m_b, m1_b, z_b))
    dm = ma[:, None] - mb[None, :]
    dz = za[:, None] - zb[None, :]
    return 2.0 * (m1a[:, None] * m1b[None, :] / dm ** 2 - 1.0 / dz ** 2)


def alpha_hat(v1: StieltjesValue, v2: StieltjesValue, spec: PopulationSpectrum, kappa4: float) -> complex:
    return complex(alpha_hat_matrix([v1.m], [v1.m1], [v2.m], [v2.m1], spec, kappa4)[0, 0])


def beta_hat(v1: StieltjesValue, v2: StieltjesValue) -> complex:
    if v1.z == v2.z:
        return beta_hat_coincident(v1)
    return complex(beta_hat_matrix([v1.m], [v1.m1], [v1.z], [v2.m], [v2.m1], [v2.z])[0, 0])


def beta_hat_coincident(v: StieltjesValue) -> complex:
    """Same-branch limit of beta-hat as z2 -> z1."""
    return complex(v.m3 / (3.0 * v.m1) - v.m2 ** 2 / (2.0 * v.m1 ** 2))


# ---------------- Boundary values ----------------

def boundary_values(
    x: float,
    spec: PopulationSpectrum,
    kappa4: float = 0.0,
    sup: Optional[SupportInfo] = None,
) -> BoundaryValues:
    m_plus, flagged = boundary_m([x], spec, sup)
    if flagged[0]:
        raise ExtrapolationError(f"boundary value at x={x} did not settle", x=x)
    mp = complex(m_plus[0])
    m1, m2, _ = m_derivatives(np.asarray([mp]), spec)
    b1, b2 = b_terms(mp, m1[0], m2[0], kappa4)
    b1, b2 = complex(b1), complex(b2)
    return BoundaryValues(
        x=float(x),
        m_plus=mp,
        m_minus=mp.conjugate(),
        b1_plus=b1,
        b1_minus=b1.conjugate(),
        b2_plus=b2,
        b2_minus=b2.conjugate(),
        m1_plus=complex(m1[0]),
        m2_plus=complex(m2[0]),
    )


def _signed_combination(pp: complex, pm: complex) -> float:
    # ++ + -- - +- - -+ with the minus branch the conjugate of the plus branch
    return float(2.0 * (pp - pm).real)


def kernel_alpha(x1: float, x2: float, spec: PopulationSpectrum, kappa4: float, sup: Optional[SupportInfo] = None) -> float:
    if kappa4 == 0:
        return 0.0
    v1 = boundary_values(x1, spec, kappa4, sup)
    v2 = boundary_values(x2, spec, kappa4, sup)
    pp = alpha_hat_matrix([v1.m_plus], [v1.m1_plus], [v2.m_plus], [v2.m1_plus], spec, kappa4)[0, 0]
    pm = alpha_hat_matrix(
        [v1.m_plus], [v1.m1_plus], [v2.m_minus], [np.conj(v2.m1_plus)], spec, kappa4
    )[0, 0]
    return _signed_combination(pp, pm)


def kernel_beta(x1: float, x2: float, spec: PopulationSpectrum, sup: Optional[SupportInfo] = None) -> float:
    if x1 == x2:
        raise CoincidentPointError("beta kernel is singular at x1 = x2", x=x1)
    v1 = boundary_values(x1, spec, 0.0, sup)
    v2 = boundary_values(x2, spec, 0.0, sup)
    pp = beta_hat_matrix([v1.m_plus], [v1.m1_plus], [x1], [v2.m_plus], [v2.m1_plus], [x2])[0, 0]
    pm = beta_hat_matrix([v1.m_plus], [v1.m1_plus], [x1], [v2.m_minus], [np.conj(v2.m1_plus)], [x2])[0, 0]
    return _signed_combination(pp, pm)


def resolvent_covariance(z1: complex, z2: complex, spec: PopulationSpectrum, kappa4: float) -> complex:
    """omega(z1, z2) = alpha-hat + beta-hat: limiting E[Y(z1) Y(z2)] for Y = Tr R - E Tr R."""
    z1, z2 = complex(z1), complex(z2)
    if z1 == z2:
        raise CoincidentPointError("resolvent covariance needs z1 != z2", z=z1)
    v1 = solve_m(z1, spec)
    v2 = solve_m(z2, spec)
    return alpha_hat(v1, v2, spec, kappa4) + beta_hat(v1, v2)


# ---------------- Global limits, general spectrum ----------------

def _contour_geometry(tfs: Sequence[TestFunctionSpec], sup: SupportInfo) -> Tuple[float, float, float]:
    lo, hi = sup.gamma_minus, sup.gamma_plus
    width = sup.width
    center = sup.center
    delta = 0.25 * width
    for tf in tfs:
        wlo, whi = tf.window
        if not (wlo < lo and hi < whi):
            raise NonAnalyticError(
                f"{tf.name}: mollifier is not identically 1 on the support [{lo:.6g}, {hi:.6g}]",
                window=f"[{wlo:.6g}, {whi:.6g}]",
            )
        for s in tf.singular_points():
            gap = abs(complex(s) - center) - 0.5 * width
            if gap <= 0:
                raise NonAnalyticError(f"{tf.name}: singularity at {s} inside the support", point=s)
            delta = min(delta, 0.6 * gap)
    return center, 0.5 * width + 0.5 * delta, 0.5 * width + delta


def _contour_estimate(
    tfs: Sequence[TestFunctionSpec],
    spec: PopulationSpectrum,
    kappa4: float,
    center: float,
    r_in: float,
    r_out: float,
    n: int,
) -> Tuple[np.ndarray, np.ndarray]:
    z1, dz1 = circle_nodes(center, r_in, n)
    z2, dz2 = circle_nodes(center, r_out, n)
    m1_, d1_, dd1_, _, _ = solve_m_many(z1, spec)
    m2_, d2_, dd2_, _, _ = solve_m_many(z2, spec)

    b1, b2 = b_terms(m2_, d2_, dd2_, kappa4)
    H2 = np.vstack([tf.analytic(z2) for tf in tfs])
    H1 = np.vstack([tf.analytic(z1) for tf in tfs])
    means = -(H2 * (b1 + b2) * dz2) @ np.ones(n) / (2j * math.pi)

    W1 = H1 * dz1
    W2 = H2 * dz2
    acc = np.zeros((len(tfs), len(tfs)), dtype=complex)
    block = 512
    for s in range(0, n, block):
        sl = slice(s, min(n, s + block))
        omega = beta_hat_matrix(m1_[sl], d1_[sl], z1[sl], m2_, d2_, z2)
        if kappa4:
            omega = omega + alpha_hat_matrix(m1_[sl], d1_[sl], m2_, d2_, spec, kappa4)
        acc += W1[:, sl] @ omega @ W2.T
    cov = -acc / (4.0 * math.pi ** 2)
    imag = max(float(np.max(np.abs(means.imag))), float(np.max(np.abs(cov.imag))))
    if imag > 1e-6 * max(1.0, float(np.max(np.abs(cov.real)))):
        logger.warning("contour estimate carries imaginary part %.3e", imag)
    cov = cov.real
    return means.real, 0.5 * (cov + cov.T)


def global_limit(
    tfs: Sequence[TestFunctionSpec],
    spec: PopulationSpectrum,
    kappa4: float,
    sup: Optional[SupportInfo] = None,
    nodes: int = CONTOUR_NODES,
    max_nodes: int = CONTOUR_MAX_NODES,
    tol: float = 1e-10,
) -> GaussianLimit:
    """Mean vector and covariance of the global-scale LSS limit for any atomic spectrum.

    The real-line boundary-value formulas are evaluated on two nested circles
    around the support; the trapezoid rule in the angle is refined by doubling
    until successive estimates agree.
    """
    tfs = list(tfs)
    if not tfs:
        raise DomainError("global_limit needs at least one test function")
    sup = sup or support(spec)
    center, r_in, r_out = _contour_geometry(tfs, sup)
    logger.debug("contour radii %.6g / %.6g around %.6g", r_in, r_out, center)

    n = int(nodes)
    prev = _contour_estimate(tfs, spec, kappa4, center, r_in, r_out, n)
    diagnostics: List[str] = []
    converged = False
    while n < max_nodes:
        n *= 2
        cur = _contour_estimate(tfs, spec, kappa4, center, r_in, r_out, n)
        scale = max(1.0, float(np.max(np.abs(cur[1]))), float(np.max(np.abs(cur[0]))))
        diff = max(float(np.max(np.abs(cur[0] - prev[0]))), float(np.max(np.abs(cur[1] - prev[1]))))
        prev = cur
        logger.debug("contour nodes %d: change %.3e", n, diff)
        if diff <= tol * scale:
            converged = True
            break
    means, cov = prev
    if not converged:
        diagnostics.append(f"contour estimates still moving at {n} nodes")
        logger.warning("global_limit did not settle at %d nodes", n)
        means = np.full(len(tfs), np.nan)
        cov = np.full((len(tfs), len(tfs)), np.nan)
    return GaussianLimit(
        means=means,
        covariance=cov,
        kappa4=kappa4,
        regime="global",
        labels=[tf.name for tf in tfs],
        converged=converged,
        diagnostics=diagnostics,
    )


# ---------------- Global limits, identity population ----------------

NAMED_BASES = ("linear", "quadratic", "log", "logshift")


def _check_t(t: float) -> None:
    if not t > 1:
        raise LogDomainError(f"log bases need t > 1, got {t}")


def identity_mean(base: str, kappa4: float, c: float = 3.0, t: float = 3.0) -> float:
    if base == "linear":
        return 0.0
    if base == "quadratic":
        return 1.0 + kappa4
    if base in LOG_BASES:
        _check_t(t)
        m_log = 0.5 * math.log(1.0 - t ** -2) - kappa4 / (2.0 * t * t)
        return m_log if base == "log" else -m_log
    raise DomainError(f"no closed form for base {base!r}")


def _cov_pair(b1: str, b2: str, kappa4: float, c: float, t: float) -> float:
    key = tuple(sorted((b1, b2)))
    if key == ("linear", "linear"):
        return 2.0 + kappa4
    if key == ("linear", "quadratic"):
        return 4.0 * c + 2.0 * c * kappa4
    if key == ("quadratic", "quadratic"):
        return 4.0 + 4.0 * c * c * (kappa4 + 2.0)
    _check_t(t)
    if key == ("linear", "log"):
        return (2.0 + kappa4) / t
    if key == ("log", "quadratic"):
        return 4.0 * c / t - 2.0 / (t * t) + 2.0 * c * kappa4 / t
    if key == ("log", "log"):
        return -2.0 * math.log(1.0 - t ** -2) + kappa4 / (t * t)
    raise DomainError(f"no closed form for pair {key}")


def identity_covariance(base1: str, base2: str, kappa4: float, c: float = 3.0, t: float = 3.0) -> float:
    """Closed-form limiting covariance for Sigma = I; logshift = linear - log."""
    parts1 = [("linear", 1.0), ("log", -1.0)] if base1 == "logshift" else [(base1, 1.0)]
    parts2 = [("linear", 1.0), ("log", -1.0)] if base2 == "logshift" else [(base2, 1.0)]
    return sum(s1 * s2 * _cov_pair(p1, p2, kappa4, c, t) for p1, s1 in parts1 for p2, s2 in parts2)


def identity_limit(bases: Sequence[str], kappa4: float, c: float = 3.0, t: float = 3.0) -> GaussianLimit:
    bases = list(bases)
    means = [identity_mean(b, kappa4, c, t) for b in bases]
    cov = [[identity_covariance(b1, b2, kappa4, c, t) for b2 in bases] for b1 in bases]
    return GaussianLimit(means=means, covariance=cov, kappa4=kappa4, regime="global", labels=bases)


def identity_chebyshev(f: Callable, phi: float, nodes: int = IDENTITY_CHEBYSHEV_NODES) -> np.ndarray:
    """Coefficients of f(sqrt(phi) + 1/sqrt(phi) + 2 cos theta) = a_0/2 + sum_k a_k cos(k theta)."""
    if nodes < 8:
        raise DomainError(f"need at least 8 Chebyshev nodes, got {nodes}")
    mid = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    theta = math.pi * (np.arange(nodes) + 0.5) / nodes
    vals = np.asarray(f(mid + 2.0 * np.cos(theta)), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonAnalyticError("test function not finite on the support")
    return sp_fft.dct(vals, type=2) / nodes


def identity_lss_limit(
    fs: Sequence[Callable],
    phi: float,
    kappa4: float = 0.0,
    nodes: int = IDENTITY_CHEBYSHEV_NODES,
    regime: str = "global",
) -> GaussianLimit:
    """Limit for Sigma = I from Chebyshev coefficients on the support.

    Exact for any fixed test function, so windows of finite width need no
    small-window expansion. Mean (f(g+) + f(g-))/4 - a_0/4 + kappa4 a_2/2,
    covariance sum_k k a_k b_k / 2 + kappa4 a_1 b_1 / 4.
    """
    fs = list(fs)
    lo, hi = identity_edges(phi)
    coefs = [identity_chebyshev(f, phi, nodes) for f in fs]
    means = []
    for f, a in zip(fs, coefs):
        ends = np.asarray(f(np.array([lo, hi])), dtype=float)
        means.append(float(ends.sum()) / 4.0 - a[0] / 4.0 + kappa4 * a[2] / 2.0)
    k = np.arange(nodes)
    cov = np.array([[0.5 * np.sum(k * a * b) + kappa4 * a[1] * b[1] / 4.0 for b in coefs] for a in coefs])
    tail = max(float(np.max(np.abs(a[-nodes // 8:]))) for a in coefs)
    limit = GaussianLimit(
        means=means,
        covariance=cov,
        kappa4=kappa4,
        regime=regime,
        labels=[getattr(f, "name", "custom") for f in fs],
        diagnostics=[f"Chebyshev tail {tail:.1e} over {nodes} nodes"],
    )
    if tail > 1e-8:
        limit.converged = False
        logger.warning("Chebyshev coefficients have not decayed: tail %.2e", tail)
    return limit


def _unit_circle_function(
    tf: Union[str, TestFunctionSpec, Callable],
    phi: Optional[float],
    c: float,
    t: float,
) -> Callable[[np.ndarray], np.ndarray]:
    """G(xi) = f(sqrt(phi) + 1/sqrt(phi) + xi + 1/xi) as an analytic function of xi."""
    if isinstance(tf, str):
        if tf == "linear":
            return lambda xi: c + xi + 1.0 / xi
        if tf == "quadratic":
            return lambda xi: (c + xi + 1.0 / xi) ** 2
        if tf in LOG_BASES:
            _check_t(t)
            shift = t + 1.0 / t
            if tf == "log":
                return lambda xi: np.log(shift + xi + 1.0 / xi)
            return lambda xi: (shift + xi + 1.0 / xi) - np.log(shift + xi + 1.0 / xi)
        raise DomainError(f"unknown base {tf!r}")
    if phi is None:
        raise DomainError("phi is required for test functions given in spectral coordinates")
    mid = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    if isinstance(tf, TestFunctionSpec):
        lo, hi = tf.window
        if not (lo < mid - 2.0 and mid + 2.0 < hi):
            raise NonAnalyticError(f"{tf.name}: mollifier is not identically 1 on the support")
        for s in tf.singular_points():
            if abs(complex(s) - mid) <= 2.0:
                raise NonAnalyticError(f"{tf.name}: singularity at {s} touches the support")
        return lambda xi: tf.analytic(mid + xi + 1.0 / xi)
    return lambda xi: np.asarray(tf(mid + xi + 1.0 / xi), dtype=complex)


def _pow2_at_least(v: float, cap: int = 1 << 20) -> int:
    n = 1 << max(4, int(math.ceil(math.log2(max(v, 16.0)))))
    return min(n, cap)


def _laurent(G: Callable, r: float, n: int) -> np.ndarray:
    theta = 2.0 * math.pi * np.arange(n) / n
    xi = r * np.exp(1j * theta)
    vals = np.asarray(G(xi), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise NonAnalyticError(f"test function not finite on |xi| = {r}")
    return np.fft.fft(vals) / n


def _xi_contour(Gs: Sequence[Callable], kappa4: float, delta: float) -> np.ndarray:
    """Means and covariance for Sigma = I from circles |xi| = 1 + delta, 1 + 2 delta."""
    n = _pow2_at_least(40.0 / delta)
    r1 = 1.0 + delta
    r2 = 1.0 + 2.0 * delta
    rho = 1.0 / r1
    theta = 2.0 * math.pi * np.arange(n) / n
    xi = r1 * np.exp(1j * theta)
    kern = 1.0 / xi - 0.5 / (xi + rho) - 0.5 / (xi - rho)
    k = np.arange(1, n // 2)

    means = []
    inner = []
    outer = []
    for G in Gs:
        vals = np.asarray(G(xi), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise NonAnalyticError(f"test function not finite on |xi| = {r1}")
        # -(1/2 pi i) sum G K dxi with dxi = i xi 2pi/n
        main = -np.mean(vals * kern * xi)
        c_in = np.fft.fft(vals) / n
        c_out = _laurent(G, r2, n)
        # Laurent coefficients: positive k from the outer circle, negative k from the inner one
        g_pos = c_out[k] / r2 ** k
        g_neg = c_in[n - k] * r1 ** k
        g2 = c_out[2] / r2 ** 2
        means.append(main + kappa4 * g2)
        inner.append(g_neg)
        outer.append(g_pos)
    m = len(Gs)
    cov = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            cov[i, j] = 2.0 * np.sum(k * inner[i] * outer[j]) + kappa4 * inner[i][0] * outer[j][0]
    cov = 0.5 * (cov + cov.T)
    return np.concatenate([np.real(means), np.real(cov).ravel()])


def global_limit_identity(
    tfs: Union[str, TestFunctionSpec, Callable, Sequence],
    kappa4: float,
    c: float = 3.0,
    t: float = 3.0,
    phi: Optional[float] = None,
    route: str = "auto",
) -> GaussianLimit:
    """Limit for Sigma = I by closed form (named bases) or unit-circle contour.

    ``route`` is "auto" (closed forms when every entry is a named base),
    "closed" or "contour". The contour route evaluates at radii 1 + delta and
    extrapolates delta -> 0.
    """
    items = [tfs] if isinstance(tfs, (str, TestFunctionSpec)) or callable(tfs) else list(tfs)
    if route not in ("auto", "closed", "contour"):
        raise DomainError(f"unknown route {route!r}")
    named = all(isinstance(x, str) and x in NAMED_BASES for x in items)
    if route == "closed" and not named:
        raise DomainError("closed forms exist only for linear, quadratic, log and logshift")
    if named and route != "contour":
        return identity_limit(items, kappa4, c, t)

    Gs = [_unit_circle_function(x, phi, c, t) for x in items]
    labels = [x if isinstance(x, str) else getattr(x, "name", "custom") for x in items]
    k = len(Gs)
    est = extrapolate_to_zero(
        lambda d: _xi_contour(Gs, kappa4, d),
        RADIUS_DELTAS,
        tol=1e-10,
        accept_tol=EXTRAPOLATION_TOL,
        max_levels=RADIUS_MAX_LEVELS,
        what="identity contour",
    )
    vals = np.asarray(est.value)
    return GaussianLimit(
        means=vals[:k],
        covariance=vals[k:].reshape(k, k),
        kappa4=kappa4,
        regime="global",
        labels=labels,
        diagnostics=[f"radius extrapolation over {est.levels} levels, spread {est.error:.2e}"],
    )


# ---------------- Local limits ----------------

# (g, g_prime, half_width) tuples or TestFunctionSpec in the scaled coordinate
LocalFn = Union[TestFunctionSpec, Tuple]


def _local_pair(g: LocalFn) -> Tuple[Callable, Callable, float, Tuple[float, ...], Callable[[], float]]:
    if isinstance(g, TestFunctionSpec):
        return g.g, g.g_prime, g.a + g.b, (-(g.a + g.b), -g.b, 0.0, g.b, g.a + g.b), g.h0
    fn, dfn = g[0], g[1]
    radius = float(g[2]) if len(g) > 2 else None
    if radius is None:
        raise DomainError("local limits need the half-width of the function's support")

    def _g0() -> float:
        try:
            v = float(fn(np.asarray(0.0)))
        except (ValueError, ZeroDivisionError, ArithmeticError):
            return math.nan
        return v if math.isfinite(v) else math.nan

    return fn, dfn, radius, (-radius, 0.0, radius), _g0


def _difference_kernel(
    values: np.ndarray,
    derivs: np.ndarray,
    x: np.ndarray,
    w: np.ndarray,
    radius: float,
    g_inf: float,
) -> np.ndarray:
    """Bilinear form of the squared-difference kernel over R^2 for functions constant off [-R, R]."""
    k = values.shape[0]
    dx = x[:, None] - x[None, :]
    diag = dx == 0
    inv2 = np.zeros_like(dx)
    inv2[~diag] = 1.0 / dx[~diag] ** 2
    tail = 1.0 / (radius - x) + 1.0 / (radius + x)
    out = np.zeros((k, k))
    for i in range(k):
        di = values[i][:, None] - values[i][None, :]
        for j in range(i, k):
            dj = values[j][:, None] - values[j][None, :]
            q = di * dj * inv2
            # diagonal limit of the difference quotient
            np.fill_diagonal(q, derivs[i] * derivs[j])
            inner = float(w @ q @ w)
            outer = 2.0 * float(np.sum(w * (values[i] - g_inf) * (values[j] - g_inf) * tail))
            out[i, j] = out[j, i] = inner + outer
    return out


def _local_limit(
    gs: Sequence[LocalFn],
    side: Optional[str],
    nodes: int,
    g_inf: float,
) -> GaussianLimit:
    pairs = [_local_pair(g) for g in gs]
    if not pairs:
        raise DomainError("local limits need at least one function")
    radius = max(p[2] for p in pairs)
    knots = sorted({k for p in pairs for k in p[3]} | {-radius, radius})
    if side is None:
        xs_knots = knots
        L = radius
    else:
        sign = -1.0 if side == "right" else 1.0
        # y = sign * x^2 maps the mollifier knots to +/- sqrt(|knot|)
        half = sorted({math.sqrt(abs(k)) for k in knots if sign * k >= 0} | {0.0})
        xs_knots = sorted({-h for h in half} | set(half))
        L = math.sqrt(radius)
    breaks = refine_breaks(xs_knots, 2)
    x, w = gauss_legendre_panels(breaks, nodes)
    values = []
    derivs = []
    for fn, dfn, _, _, _ in pairs:
        if side is None:
            values.append(np.asarray(fn(x), dtype=float))
            derivs.append(np.asarray(dfn(x), dtype=float))
        else:
            y = sign * x * x
            values.append(np.asarray(fn(y), dtype=float))
            derivs.append(2.0 * sign * x * np.asarray(dfn(y), dtype=float))
    values = np.vstack(values)
    derivs = np.vstack(derivs)
    total = _difference_kernel(values, derivs, x, w, L, g_inf)
    logger.debug("local kernel with %d nodes over %d panels", x.size, len(breaks) - 1)

    diagnostics: List[str] = []
    if side is None:
        cov = total / (2.0 * math.pi ** 2)
        means = np.zeros(len(pairs))
        regime = "local-bulk"
    else:
        cov = total / (4.0 * math.pi ** 2)
        g0 = [p[4]() for p in pairs]
        for i, v in enumerate(g0):
            if math.isnan(v):
                diagnostics.append(f"edge mean not defined for function {i}: g(0) undefined")
        means = np.asarray(g0) / 4.0
        regime = "local-edge"
    labels = [g.name if isinstance(g, TestFunctionSpec) else f"g{i}" for i, g in enumerate(gs)]
    return GaussianLimit(
        means=means,
        covariance=cov,
        kappa4=None,
        regime=regime,
        labels=labels,
        diagnostics=diagnostics,
    )


def local_limit_bulk(gs: Sequence[LocalFn], nodes: int = LOCAL_QUAD_NODES, g_inf: float = 0.0) -> GaussianLimit:
    """Bulk local limit: mean 0, Cov = (1/2 pi^2) double integral of the difference kernel."""
    return _local_limit(gs, None, nodes, g_inf)


def local_limit_edge(
    gs: Sequence[LocalFn],
    side: str = "right",
    nodes: int = LOCAL_QUAD_NODES,
    g_inf: float = 0.0,
) -> GaussianLimit:
    """Edge local limit with arguments g(-x^2) (right edge) or g(x^2) (left edge)."""
    if side not in ("left", "right"):
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    return _local_limit(gs, side, nodes, g_inf)


def check_psd(cov: np.ndarray, rel: float = 1e-8) -> bool:
    cov = np.asarray(cov, dtype=float)
    if cov.size == 0:
        return True
    ev = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    return bool(ev.min() >= -rel * max(float(np.trace(cov)), 0.0) - 1e-300)


def require_converged(limit: GaussianLimit) -> GaussianLimit:
    if not limit.converged:
        raise ConvergenceError("; ".join(limit.diagnostics) or "limit did not converge")
    return limit
