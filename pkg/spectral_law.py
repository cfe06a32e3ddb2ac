# spectral_law.py

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize, stats

from config import (
    BRACKET_EPS,
    DENSITY_COLLAR,
    DENSITY_POINTS,
    ETA_SCHEDULE,
    EXTRAPOLATION_TOL,
    POLE_GUARD,
    SOLVER_MAX_ITER,
    SOLVER_TOL,
    SPECTRUM_TAU,
    WEIGHT_TOL,
)
from errors import (
    BracketingError,
    BranchError,
    ConvergenceError,
    DomainError,
    PoleProximityError,
    SpectrumError,
    UnsupportedRegimeError,
)
from numerics import neville_at_zero

logger = logging.getLogger(__name__)

Number = Union[float, complex]


# ---------------- Population spectrum ----------------

@dataclass(frozen=True)
class PopulationSpectrum:
    """Atomic population measure pi = sum w_i delta_{sigma_i} plus phi = p/n."""

    values: Tuple[float, ...]
    weights: Tuple[float, ...]
    phi: float

    @classmethod
    def parse(cls, text: str, phi: float, tau: float = SPECTRUM_TAU) -> "PopulationSpectrum":
        s = (text or "").strip()
        if not s:
            raise SpectrumError("empty spectrum string")
        vals: List[float] = []
        wts: List[float] = []
        for pos, tok in enumerate(s.split(",")):
            tok = tok.strip()
            parts = tok.split(":")
            if len(parts) != 2:
                raise SpectrumError(f"atom {pos + 1}: expected 'weight:value', got {tok!r}", atom=pos + 1)
            try:
                w = float(parts[0])
                v = float(parts[1])
            except ValueError:
                raise SpectrumError(f"atom {pos + 1}: non-numeric entry {tok!r}", atom=pos + 1) from None
            wts.append(w)
            vals.append(v)
        if len(set(vals)) != len(vals):
            raise SpectrumError("atom values must be distinct")
        order = sorted(range(len(vals)), key=lambda i: -vals[i])
        spec = cls(
            values=tuple(vals[i] for i in order),
            weights=tuple(wts[i] for i in order),
            phi=float(phi),
        )
        spec.validate(tau)
        return spec

    @classmethod
    def identity(cls, phi: float) -> "PopulationSpectrum":
        spec = cls(values=(1.0,), weights=(1.0,), phi=float(phi))
        spec.validate()
        return spec

    @classmethod
    def from_diagonal(cls, sigma: Iterable[float], phi: float, tau: float = SPECTRUM_TAU) -> "PopulationSpectrum":
        arr = np.asarray(list(sigma) if not isinstance(sigma, np.ndarray) else sigma, dtype=float).ravel()
        if arr.size == 0:
            raise SpectrumError("empty diagonal")
        uniq, counts = np.unique(arr, return_counts=True)
        order = np.argsort(-uniq)
        spec = cls(
            values=tuple(float(v) for v in uniq[order]),
            weights=tuple(float(c) / arr.size for c in counts[order]),
            phi=float(phi),
        )
        spec.validate(tau)
        return spec

    def validate(self, tau: float = SPECTRUM_TAU) -> None:
        if not (self.phi > 0 and math.isfinite(self.phi)):
            raise SpectrumError(f"phi must be positive, got {self.phi}")
        if not self.values or len(self.values) != len(self.weights):
            raise SpectrumError("values and weights must be nonempty and of equal length")
        if any(not (0 < w <= 1) for w in self.weights):
            raise SpectrumError("weights must lie in (0, 1]")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_TOL * max(1, len(self.weights)):
            raise SpectrumError(f"weights sum to {total!r}, not 1")
        lo, hi = tau, 1.0 / tau
        for v in self.values:
            if not (lo <= v <= hi):
                raise SpectrumError(f"atom value {v} outside [{lo:g}, {hi:g}]")
        if any(a <= b for a, b in zip(self.values, self.values[1:])):
            raise SpectrumError("atom values must be sorted descending and distinct")

    def to_string(self) -> str:
        return ",".join(f"{w!r}:{v!r}" for w, v in zip(self.weights, self.values))

    @property
    def sigma(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def sqrt_phi(self) -> float:
        return math.sqrt(self.phi)

    @property
    def u(self) -> np.ndarray:
        # poles of f sit at -u_i
        return self.sqrt_phi / self.sigma

    @property
    def pole_scale(self) -> float:
        return max(1.0, float(np.max(self.u)))

    @property
    def is_identity(self) -> bool:
        return len(self.values) == 1 and self.values[0] == 1.0

    def moment(self, k: int) -> float:
        return float(np.sum(self.w * self.sigma ** k))


# ---------------- Master function f ----------------

def _fk(x: np.ndarray, spec: PopulationSpectrum, order: int) -> np.ndarray:
    k = int(order)
    c = spec.phi * spec.w
    u = spec.u
    fact = math.factorial(k)
    head = ((-1) ** (k + 1)) * fact / x ** (k + 1)
    tail = ((-1) ** k) * fact * np.sum(c / (u + x[..., None]) ** (k + 1), axis=-1)
    return head + tail


def _check_poles(x: np.ndarray, spec: PopulationSpectrum) -> None:
    guard = POLE_GUARD * spec.pole_scale
    near0 = np.abs(x) < guard
    near_u = np.abs(spec.u + x[..., None]) < guard
    if np.any(near0) or np.any(near_u):
        raise PoleProximityError("evaluation point within pole guard of f", guard=guard)


def master_f_derivative(x, spec: PopulationSpectrum, order: int = 0):
    """k-th derivative of f(x) = -1/x + phi * sum w_i / (sqrt(phi)/sigma_i + x)."""
    xa = np.asarray(x)
    xa = xa.astype(complex if np.iscomplexobj(xa) else float)
    _check_poles(xa, spec)
    out = _fk(xa, spec, order)
    return out.item() if np.ndim(x) == 0 else out


def master_f(x, spec: PopulationSpectrum):
    return master_f_derivative(x, spec, 0)


def master_f_d1(x, spec: PopulationSpectrum):
    return master_f_derivative(x, spec, 1)


def master_f_d2(x, spec: PopulationSpectrum):
    return master_f_derivative(x, spec, 2)


def master_f_d3(x, spec: PopulationSpectrum):
    return master_f_derivative(x, spec, 3)


# ---------------- Stieltjes transform ----------------

@dataclass(frozen=True)
class StieltjesValue:
    z: complex
    m: complex
    m1: complex
    m2: complex
    residual: float
    m3: complex = 0j

    def conjugate(self) -> "StieltjesValue":
        return StieltjesValue(
            z=self.z.conjugate(),
            m=self.m.conjugate(),
            m1=self.m1.conjugate(),
            m2=self.m2.conjugate(),
            residual=self.residual,
            m3=self.m3.conjugate(),
        )


def _h(m: np.ndarray, spec: PopulationSpectrum) -> np.ndarray:
    return np.sum(spec.phi * spec.w / (spec.u + m[..., None]), axis=-1)


def _top_eta(spec: PopulationSpectrum) -> float:
    s1 = spec.values[0]
    return 4.0 * max(s1, s1 / spec.sqrt_phi, 1.0)


def _newton(
    m: np.ndarray,
    z: np.ndarray,
    spec: PopulationSpectrum,
    tol: float,
    max_iter: int,
    keep_upper: bool = True,
) -> Tuple[np.ndarray, np.ndarray]:
    m = m.copy()
    scale = np.maximum(np.abs(z), 1e-300)
    res = np.abs(_fk(m, spec, 0) - z) / scale
    for _ in range(max_iter):
        active = res > tol * 1e-3
        if not np.any(active):
            break
        ma = m[active]
        step = (_fk(ma, spec, 0) - z[active]) / _fk(ma, spec, 1)
        new = ma - step
        if keep_upper:
            lam = 1.0
            bad = new.imag <= 0
            while np.any(bad) and lam > 1e-8:
                lam *= 0.5
                new[bad] = ma[bad] - lam * step[bad]
                bad = new.imag <= 0
        small = np.abs(step) <= 4e-16 * np.abs(ma)
        m[active] = new
        res[active] = np.abs(_fk(new, spec, 0) - z[active]) / scale[active]
        res[np.flatnonzero(active)[small]] = np.minimum(res[np.flatnonzero(active)[small]], tol * 1e-3)
    return m, res


def _solve_upper(z: np.ndarray, spec: PopulationSpectrum, tol: float, max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    """Continuation solve of z = f(m) on the Herglotz branch, Im z > 0 elementwise."""
    x = z.real
    eta_t = z.imag
    eta_top = max(_top_eta(spec), 2.0 * float(np.max(eta_t)))
    z0 = x + 1j * eta_top
    m = -1.0 / z0
    for _ in range(2000):
        nxt = 0.5 * m + 0.5 / (-z0 + _h(m, spec))
        done = np.max(np.abs(nxt - m) / np.maximum(np.abs(m), 1e-300)) <= 1e-15
        m = nxt
        if done:
            break
    steps = max(1, int(math.ceil(math.log2(eta_top / float(np.min(eta_t))))) + 1)
    logger.debug("continuation from eta=%.3g in %d steps for %d points", eta_top, steps, z.size)
    res = np.zeros(z.shape)
    for s in range(1, steps + 1):
        frac = s / steps
        zs = x + 1j * (eta_top ** (1.0 - frac) * eta_t ** frac)
        if s == steps:
            zs = z
        m, res = _newton(m, zs, spec, tol, max_iter)
        if np.any(m.imag <= 0):
            raise BranchError("iteration left the upper half-plane", step=s)
    if np.any(res > tol):
        worst = int(np.argmax(res))
        raise ConvergenceError(
            f"solver residual {res[worst]:.3e} above tolerance after {max_iter} iterations",
            z=complex(z[worst]),
        )
    return m, res


def m_derivatives(m: np.ndarray, spec: PopulationSpectrum) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """m', m'', m''' at z = f(m) by the inverse-function rule."""
    m = np.asarray(m)
    d1 = _fk(m, spec, 1)
    d2 = _fk(m, spec, 2)
    d3 = _fk(m, spec, 3)
    m1 = 1.0 / d1
    m2 = -d2 * m1 ** 3
    m3 = -d3 * m1 ** 4 + 3.0 * d2 ** 2 * m1 ** 5
    return m1, m2, m3


def solve_m_many(zs, spec: PopulationSpectrum, tol: float = SOLVER_TOL, max_iter: int = SOLVER_MAX_ITER):
    """Vectorized m(z) for nonreal z; lower half-plane values by conjugation.

    Returns (m, m1, m2, m3, residual) arrays shaped like ``zs``.
    """
    z = np.atleast_1d(np.asarray(zs, dtype=complex))
    shape = z.shape
    z = z.ravel()
    if np.any(z.imag == 0):
        raise DomainError("m(z) needs Im z != 0; use boundary_values for real points")
    lower = z.imag < 0
    zu = np.where(lower, z.conjugate(), z)
    m, res = _solve_upper(zu, spec, tol, max_iter)
    m1, m2, m3 = m_derivatives(m, spec)
    m, m1, m2, m3 = (np.where(lower, a.conjugate(), a) for a in (m, m1, m2, m3))
    return tuple(a.reshape(shape) for a in (m, m1, m2, m3, res))


def solve_m(z: complex, spec: PopulationSpectrum, tol: float = SOLVER_TOL, max_iter: int = SOLVER_MAX_ITER) -> StieltjesValue:
    m, m1, m2, m3, res = solve_m_many([z], spec, tol, max_iter)
    return StieltjesValue(
        z=complex(z),
        m=complex(m[0]),
        m1=complex(m1[0]),
        m2=complex(m2[0]),
        residual=float(res[0]),
        m3=complex(m3[0]),
    )


def companion_transform(z: complex, spec: PopulationSpectrum) -> complex:
    """Stieltjes transform of the p x p companion: m_p = (m + (1 - phi)/z) / phi."""
    z = complex(z)
    m = solve_m(z, spec).m
    return (m + (1.0 - spec.phi) / z) / spec.phi


# ---------------- Identity population ----------------

def identity_edges(phi: float) -> Tuple[float, float]:
    c = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    return c - 2.0, c + 2.0


def identity_stieltjes(z, phi: float):
    """Closed form m(z) for Sigma = I: root of the quadratic with Im m > 0."""
    z = np.asarray(z, dtype=complex)
    sp = math.sqrt(phi)
    a = z / sp
    b = z + 1.0 / sp - sp
    disc = np.sqrt(b * b - 4.0 * a)
    r1 = (-b + disc) / (2.0 * a)
    r2 = (-b - disc) / (2.0 * a)
    pick = np.where(np.sign(z.imag) * r1.imag > 0, r1, r2)
    return pick.item() if pick.ndim == 0 else pick


def identity_density(x, phi: float):
    x = np.asarray(x, dtype=float)
    lo, hi = identity_edges(phi)
    inside = (x > lo) & (x < hi)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = math.sqrt(phi) / (2.0 * math.pi) * np.sqrt((xi - lo) * (hi - xi)) / xi
    return out.item() if out.ndim == 0 else out


# ---------------- Support ----------------

@dataclass(frozen=True)
class SupportInfo:
    x1: float
    x2: float
    gamma_minus: float
    gamma_plus: float

    @property
    def width(self) -> float:
        return self.gamma_plus - self.gamma_minus

    @property
    def center(self) -> float:
        return 0.5 * (self.gamma_plus + self.gamma_minus)


def _split_check(spec: PopulationSpectrum) -> None:
    u = np.sort(spec.u)
    for lo, hi in zip(u[:-1], u[1:]):
        # interval (-hi, -lo) between consecutive poles; f' -> -inf at both ends
        a, b = -hi, -lo
        eps = BRACKET_EPS * (b - a)
        grid = np.linspace(a + eps, b - eps, 257)[1:-1]
        vals = _fk(grid, spec, 1)
        k = int(np.argmax(vals))
        best = float(vals[k])
        if best <= 0:
            left = grid[max(k - 1, 0)]
            right = grid[min(k + 1, grid.size - 1)]
            opt = optimize.minimize_scalar(
                lambda t: -float(_fk(np.asarray(t), spec, 1)),
                bounds=(left, right),
                method="bounded",
                options={"xatol": 1e-12 * (b - a)},
            )
            best = max(best, -float(opt.fun))
        if best > 0:
            raise UnsupportedRegimeError(
                "support splits into several bulk components for this spectrum",
                phi=spec.phi,
            )


def support(spec: PopulationSpectrum) -> SupportInfo:
    if spec.phi < 1.0:
        raise UnsupportedRegimeError(f"phi = {spec.phi} < 1 is outside the supported regime", phi=spec.phi)
    _split_check(spec)

    d1 = lambda t: float(_fk(np.asarray(t, dtype=float), spec, 1))  # noqa: E731
    u1 = float(np.min(spec.u))
    eps = BRACKET_EPS * u1
    lo, hi = -u1 + eps, -eps
    if not (d1(lo) < 0 < d1(hi)):
        raise BracketingError("f' does not change sign on the interval left of zero")
    x1 = optimize.brentq(d1, lo, hi, xtol=1e-15 * u1, rtol=4 * np.finfo(float).eps, maxiter=500)

    if abs(spec.phi - 1.0) <= 1e-12:
        x2 = math.inf
        gamma_minus = 0.0
    else:
        top = max(float(np.max(spec.u)), 1.0)
        for _ in range(200):
            if d1(top) < 0:
                break
            top *= 2.0
        else:
            raise BracketingError("no sign change of f' on the positive axis")
        x2 = optimize.brentq(d1, eps, top, xtol=1e-15 * max(1.0, top), rtol=4 * np.finfo(float).eps, maxiter=500)
        gamma_minus = float(_fk(np.asarray(x2), spec, 0))

    gamma_plus = float(_fk(np.asarray(x1), spec, 0))
    if not (gamma_plus >= gamma_minus >= 0.0):
        raise BracketingError(f"edges out of order: ({gamma_minus}, {gamma_plus})")
    return SupportInfo(x1=float(x1), x2=float(x2), gamma_minus=gamma_minus, gamma_plus=gamma_plus)


def asymptotic_edges(spec: PopulationSpectrum, order: int = 0) -> Tuple[float, float]:
    """Large-phi expansion of the edges.

    Order 0 is sqrt(phi) * E[sigma] +/- 2 sqrt(E[sigma^2]); orders 1 and 2 add
    the phi^{-1/2} and phi^{-1} corrections.
    """
    mu1, mu2, mu3, mu4 = (spec.moment(k) for k in (1, 2, 3, 4))
    head = spec.sqrt_phi * mu1
    half = 2.0 * math.sqrt(mu2)
    shift = 0.0
    spread = 0.0
    if order >= 1:
        shift = mu3 / mu2 / spec.sqrt_phi
    if order >= 2:
        spread = (mu4 - mu3 * mu3 / mu2) / mu2 ** 1.5 / spec.phi
    return head - half + shift - spread, head + half + shift + spread


# ---------------- Real-axis limits ----------------

def _rough_scale(spec: PopulationSpectrum) -> float:
    q = spec.phi ** 0.25
    return float(spec.values[0] * (q + 1.0 / q) ** 2)


def boundary_m(xs, spec: PopulationSpectrum, sup: Optional[SupportInfo] = None, scale: Optional[float] = None):
    """Limits m(x + i0) on the real axis.

    Im m(x + i eta) is sampled on the eta schedule, extrapolated linearly to
    eta = 0, then polished by Newton on f(m) = x. Returns (m_plus, flagged)
    where flagged marks points whose polish failed and whose extrapolants
    disagree beyond tolerance.
    """
    x = np.atleast_1d(np.asarray(xs, dtype=float)).ravel()
    if scale is None:
        scale = sup.width if sup is not None and sup.width > 0 else _rough_scale(spec)
    etas = sorted(float(e) * scale for e in ETA_SCHEDULE)
    samples = [_solve_upper(x + 1j * eta, spec, SOLVER_TOL, SOLVER_MAX_ITER)[0] for eta in etas]
    diag = neville_at_zero(etas, samples)
    m_lin = np.asarray(diag[1])
    m_check = np.asarray(neville_at_zero(etas[1:], samples[1:])[1])
    spread = np.abs(m_lin - m_check)

    target = x.astype(complex)
    m, res = _newton(m_lin.copy(), target, spec, 1e-13, 80, keep_upper=False)
    ok = res <= 1e-11
    m = np.where(m.imag < 0, m.conjugate(), m)
    tiny = np.abs(m.imag) <= 1e-12 * np.maximum(np.abs(m), 1.0)
    if sup is not None:
        inside = (x > sup.gamma_minus) & (x < sup.gamma_plus)
        # a real root inside the support means Newton left the branch
        ok &= ~(tiny & inside)
        # outside the support only the physical real root (f' > 0) is accepted
        outside_real = tiny & ~inside
        ok &= ~(outside_real & (_fk(m.real.astype(float), spec, 1) <= 0))
    m = np.where(tiny, m.real + 0j, m)

    fallback = m_lin.real + 1j * np.maximum(m_lin.imag, 0.0)
    m_plus = np.where(ok, m, fallback)
    flagged = ~ok & (spread > EXTRAPOLATION_TOL * np.maximum(np.abs(m_lin), 1.0))
    if np.any(flagged):
        logger.warning("%d real-axis points flagged: eta levels disagree", int(np.sum(flagged)))
    return m_plus, flagged


def density_profile(xs, spec: PopulationSpectrum) -> np.ndarray:
    """Pointwise density Im m(x + i0)/pi for any phi > 0 (no support needed)."""
    m_plus, _ = boundary_m(xs, spec)
    rho = np.maximum(np.asarray(m_plus).imag, 0.0) / math.pi
    return rho


def count_components(rho: Sequence[float], rel_threshold: float = 1e-6) -> int:
    r = np.asarray(rho, dtype=float)
    if r.size == 0 or np.max(r) <= 0:
        return 0
    on = r > rel_threshold * np.max(r)
    starts = np.flatnonzero(on & ~np.concatenate(([False], on[:-1])))
    return int(starts.size)


# ---------------- Density grid ----------------

@dataclass
class DensityGrid:
    xs: np.ndarray
    rho: np.ndarray
    total_mass: float
    support: SupportInfo
    flags: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def spacing(self) -> float:
        return float(np.max(np.diff(self.xs))) if self.xs.size > 1 else 0.0

    def cdf_values(self) -> np.ndarray:
        cum = integrate.cumulative_trapezoid(self.rho, self.xs, initial=0.0)
        return cum / cum[-1] if cum[-1] > 0 else cum

    def cdf(self, x):
        return np.interp(x, self.xs, self.cdf_values(), left=0.0, right=1.0)

    def quantiles(self, k: int) -> np.ndarray:
        cv = self.cdf_values()
        cv_u, idx = np.unique(cv, return_index=True)
        probs = (np.arange(k) + 0.5) / k
        return np.interp(probs, cv_u, self.xs[idx])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.xs, "rho": self.rho})

    def write_csv(self, path_or_buf) -> None:
        self.to_frame().to_csv(path_or_buf, index=False, float_format="%.17g")


def density(
    spec: PopulationSpectrum,
    n_points: int = DENSITY_POINTS,
    collar: float = DENSITY_COLLAR,
    sup: Optional[SupportInfo] = None,
) -> DensityGrid:
    sup = sup or support(spec)
    width = sup.width
    delta = collar * width
    xs = np.linspace(sup.gamma_minus - delta, sup.gamma_plus + delta, int(n_points))
    rho = np.zeros_like(xs)
    flags = np.zeros(xs.shape, dtype=bool)
    inside = (xs > sup.gamma_minus) & (xs < sup.gamma_plus)
    if np.any(inside):
        m_plus, flagged = boundary_m(xs[inside], spec, sup)
        rho[inside] = np.maximum(m_plus.imag, 0.0) / math.pi
        flags[inside] = flagged
    total = float(integrate.trapezoid(rho, xs))
    logger.debug("density grid: %d points, mass %.6f, %d flagged", xs.size, total, int(flags.sum()))
    return DensityGrid(xs=xs, rho=rho, total_mass=total, support=sup, flags=flags)


# ---------------- Integrals against the law ----------------

def _density_fn(spec: PopulationSpectrum, sup: SupportInfo) -> Callable[[float], float]:
    if spec.is_identity:
        return lambda x: float(identity_density(x, spec.phi))

    def _rho(x: float) -> float:
        m_plus, _ = boundary_m([x], spec, sup)
        return max(float(m_plus[0].imag), 0.0) / math.pi

    return _rho


def lss_centering(
    spec: PopulationSpectrum,
    tf: Callable[[np.ndarray], np.ndarray],
    sup: Optional[SupportInfo] = None,
    breakpoints: Optional[Sequence[float]] = None,
) -> float:
    """Integral of tf against the limiting law (the n-free part of the centering)."""
    sup = sup or support(spec)
    lo, hi = sup.gamma_minus, sup.gamma_plus
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    rho = _density_fn(spec, sup)

    def x_of(theta: float) -> float:
        return mid - half * math.cos(theta)

    def integrand(theta: float) -> float:
        x = x_of(theta)
        return float(tf(np.asarray(x))) * rho(x) * half * math.sin(theta)

    pts = breakpoints if breakpoints is not None else getattr(tf, "breakpoints", lambda: ())()
    thetas = sorted(
        math.acos(max(-1.0, min(1.0, (mid - b) / half)))
        for b in pts
        if lo < b < hi
    )
    val, err, info = integrate.quad(
        integrand, 0.0, math.pi, points=thetas or None, limit=400, epsabs=1e-13, epsrel=1e-11, full_output=1
    )[:3]
    if err > 1e-7 * max(1.0, abs(val)):
        raise ConvergenceError(f"quadrature error estimate {err:.3e} too large", value=val)
    return float(val)


def esd_distance(eigenvalues: Sequence[float], spec: PopulationSpectrum, grid: Optional[DensityGrid] = None) -> float:
    """Kolmogorov distance between the ESD of the nonzero eigenvalues and the law."""
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    if ev.size == 0:
        raise DomainError("empty eigenvalue list")
    cut = 1e-9 * max(1.0, float(np.max(np.abs(ev))))
    ev = ev[np.abs(ev) > cut]
    if ev.size == 0:
        return 1.0
    grid = grid or density(spec)
    return float(stats.kstest(ev, grid.cdf).statistic)
