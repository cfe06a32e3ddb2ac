# lss_functions.py

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from config import DEFAULT_A, DEFAULT_B, DEFAULT_C, DEFAULT_T, LOCAL_LOG_OFFSET
from errors import DomainError, LogDomainError

BASES = ("linear", "quadratic", "log", "logshift", "custom")
LOG_BASES = ("log", "logshift")


# ---------------- Mollifier ----------------

def _check_ab(a: float, b: float) -> None:
    if not (a > 0 and b > 0):
        raise DomainError(f"mollifier needs a > 0 and b > 0, got a={a}, b={b}")


def mollifier(x, a: float = DEFAULT_A, b: float = DEFAULT_B):
    """Smooth bump: 1 on |x| <= b, 0 on |x| >= b + a."""
    _check_ab(a, b)
    xa = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(xa)
    out[xa <= b] = 1.0
    mid = (xa > b) & (xa < b + a)
    r = xa[mid] - b
    out[mid] = np.exp(1.0 / a ** 2 - 1.0 / (a ** 2 - r ** 2))
    return out.item() if out.ndim == 0 else out


def mollifier_derivative(x, a: float = DEFAULT_A, b: float = DEFAULT_B):
    _check_ab(a, b)
    xs = np.asarray(x, dtype=float)
    xa = np.abs(xs)
    out = np.zeros_like(xa)
    mid = (xa > b) & (xa < b + a)
    r = xa[mid] - b
    k = np.exp(1.0 / a ** 2 - 1.0 / (a ** 2 - r ** 2))
    out[mid] = np.sign(xs[mid]) * k * (-2.0 * r / (a ** 2 - r ** 2) ** 2)
    return out.item() if out.ndim == 0 else out


# ---------------- Base functions ----------------

def _base_value(base: str, y, c: float):
    if base == "linear":
        return y
    if base == "quadratic":
        return y * y
    if base == "log":
        return np.log(y + c)
    if base == "logshift":
        return (y + c) - np.log(y + c)
    raise DomainError(f"unknown base {base!r}")


def _base_derivative(base: str, y, c: float):
    if base == "linear":
        return np.ones_like(y)
    if base == "quadratic":
        return 2.0 * y
    if base == "log":
        return 1.0 / (y + c)
    if base == "logshift":
        return 1.0 - 1.0 / (y + c)
    raise DomainError(f"unknown base {base!r}")


# ---------------- Test function ----------------

@dataclass(frozen=True)
class TestFunctionSpec:
    """f(x) = h((x - E)/eta0) * K((x - E)/eta0) with K the (a, b) mollifier."""

    __test__ = False

    base: str = "linear"
    c: float = DEFAULT_C
    center: float = 0.0
    eta0: float = 1.0
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    fn: Optional[Callable] = field(default=None, compare=False)
    dfn: Optional[Callable] = field(default=None, compare=False)
    singularities: Tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        if self.base not in BASES:
            raise DomainError(f"unknown base {self.base!r}; expected one of {', '.join(BASES)}")
        if self.base == "custom" and self.fn is None:
            raise DomainError("custom base needs fn")
        if not self.eta0 > 0:
            raise DomainError(f"eta0 must be positive, got {self.eta0}")
        _check_ab(self.a, self.b)
        if self.base in LOG_BASES and not self.c > 0:
            raise LogDomainError(f"log bases need c > 0, got {self.c}")

    @property
    def name(self) -> str:
        return self.label or self.base

    # -- scaled coordinate y = (x - E)/eta0 --

    def h(self, y):
        y = np.asarray(y)
        if self.base == "custom":
            return np.asarray(self.fn(y))
        return _base_value(self.base, y, self.c)

    def h_prime(self, y):
        y = np.asarray(y)
        if self.base == "custom":
            if self.dfn is None:
                raise DomainError("custom base needs dfn for derivative-based limits")
            return np.asarray(self.dfn(y))
        return _base_derivative(self.base, y, self.c)

    def h0(self) -> float:
        """h(0), which is also g(0) since K(0) = 1; NaN when undefined."""
        try:
            with np.errstate(all="ignore"):
                v = float(self.h(np.asarray(0.0)))
        except (ValueError, ZeroDivisionError, ArithmeticError):
            return math.nan
        return v if math.isfinite(v) else math.nan

    def g(self, y):
        y = np.asarray(y, dtype=float)
        k = mollifier(y, self.a, self.b)
        out = np.zeros(np.shape(y))
        live = np.asarray(k) > 0
        if np.any(live):
            yl = y[live] if y.ndim else y
            if self.base in LOG_BASES and np.any(yl + self.c <= 0):
                bad = float(np.min(yl))
                raise LogDomainError(
                    f"log argument {bad + self.c:.6g} <= 0 inside the mollifier window",
                    y=bad,
                )
            vals = np.asarray(self.h(yl), dtype=float)
            if y.ndim:
                out[live] = vals * np.asarray(k)[live]
            else:
                out = vals * k
        return out.item() if np.ndim(out) == 0 else out

    def g_prime(self, y):
        y = np.asarray(y, dtype=float)
        k = np.asarray(mollifier(y, self.a, self.b))
        dk = np.asarray(mollifier_derivative(y, self.a, self.b))
        out = np.zeros(np.shape(y))
        live = k > 0
        if np.any(live):
            yl = y[live] if y.ndim else y
            hv = np.asarray(self.h(yl), dtype=float)
            hd = np.asarray(self.h_prime(yl), dtype=float)
            kl = k[live] if y.ndim else k
            dkl = dk[live] if y.ndim else dk
            vals = hd * kl + hv * dkl
            if y.ndim:
                out[live] = vals
            else:
                out = vals
        return out.item() if np.ndim(out) == 0 else out

    # -- spectral coordinate x --

    def __call__(self, x):
        return self.g((np.asarray(x, dtype=float) - self.center) / self.eta0)

    def derivative(self, x):
        return self.g_prime((np.asarray(x, dtype=float) - self.center) / self.eta0) / self.eta0

    def analytic(self, z):
        """h((z - E)/eta0) for complex z; equals f wherever K = 1."""
        y = (np.asarray(z, dtype=complex) - self.center) / self.eta0
        if self.base == "custom":
            return np.asarray(self.fn(y), dtype=complex)
        return np.asarray(_base_value(self.base, y, self.c), dtype=complex)

    @property
    def window(self) -> Tuple[float, float]:
        """x-interval where K = 1."""
        return self.center - self.b * self.eta0, self.center + self.b * self.eta0

    @property
    def reach(self) -> Tuple[float, float]:
        """x-interval outside of which f vanishes."""
        w = (self.a + self.b) * self.eta0
        return self.center - w, self.center + w

    def breakpoints(self) -> Tuple[float, ...]:
        lo, hi = self.window
        rlo, rhi = self.reach
        return (rlo, lo, self.center, hi, rhi)

    def singular_points(self) -> Tuple[float, ...]:
        pts = list(self.singularities)
        if self.base in LOG_BASES:
            pts.append(self.center - self.c * self.eta0)
        return tuple(pts)


# ---------------- Constructors ----------------

def _covering_b(center: float, eta0: float, lo: float, hi: float, b_min: float) -> float:
    reach = max(abs(lo - center), abs(hi - center)) / eta0
    # leave half a support width of slack for alternatives that shift the spectrum
    slack = 0.5 * (hi - lo) / eta0
    return max(b_min, float(math.ceil(reach + slack)) + 1.0)


def global_function(
    base: str,
    phi: float,
    c: float = DEFAULT_C,
    t: float = DEFAULT_T,
    support_edges: Optional[Tuple[float, float]] = None,
    a: float = DEFAULT_A,
    b: float = DEFAULT_B,
) -> TestFunctionSpec:
    """Global (eta0 = 1) test functions for the statistics.

    linear/quadratic are centred at sqrt(phi) + 1/sqrt(phi) - c; the log bases
    use c = t + 1/t and centre sqrt(phi) + 1/sqrt(phi). The mollifier plateau
    is widened to cover the support.
    """
    sp = math.sqrt(phi)
    mid = sp + 1.0 / sp
    if base in LOG_BASES:
        if not t > 1:
            raise LogDomainError(f"log bases need t > 1, got {t}")
        c = t + 1.0 / t
        center = mid
    elif base in ("linear", "quadratic"):
        center = mid - c
    else:
        raise DomainError(f"global_function does not build base {base!r}")
    lo, hi = support_edges if support_edges is not None else (mid - 2.0, mid + 2.0)
    bb = _covering_b(center, 1.0, lo, hi, b)
    return TestFunctionSpec(base=base, c=c, center=center, eta0=1.0, a=a, b=bb)


def local_function(
    base: str,
    n: int,
    gamma_plus: float,
    eta0: Optional[float] = None,
    a: float = DEFAULT_A,
    b: float = DEFAULT_B,
    log_offset: float = LOCAL_LOG_OFFSET,
) -> TestFunctionSpec:
    """Edge-local test functions centred at gamma_+ with eta0 = n^{-1/4} by default.

    The log bases shift by b + a + log_offset so the logarithm stays finite on
    the whole mollifier window.
    """
    if eta0 is None:
        eta0 = float(n) ** -0.25
    c = DEFAULT_C
    if base in LOG_BASES:
        c = b + a + log_offset
    elif base not in ("linear", "quadratic"):
        raise DomainError(f"local_function does not build base {base!r}")
    return TestFunctionSpec(base=base, c=c, center=gamma_plus, eta0=eta0, a=a, b=b)
