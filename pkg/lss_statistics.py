# lss_statistics.py

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import special

from clt_functionals import identity_covariance, identity_lss_limit, identity_mean, local_limit_edge
from config import (
    ALL_KINDS,
    DEFAULT_A,
    DEFAULT_ALPHA,
    DEFAULT_B,
    DEFAULT_C,
    DEFAULT_T,
    GLOBAL_KINDS,
    LOCAL_KINDS,
    LOCAL_LOG_OFFSET,
)
from errors import (
    CumulantError,
    DataFormatError,
    DegenerateStatisticError,
    DimensionError,
    DomainError,
)
from lss_functions import TestFunctionSpec, global_function, local_function
from spectral_law import PopulationSpectrum, SupportInfo, identity_edges, lss_centering, support

logger = logging.getLogger(__name__)

BASE_OF = {"1": "linear", "2": "quadratic", "3": "logshift"}


# ---------------- Parameters ----------------

@dataclass(frozen=True)
class StatParams:
    c: float = DEFAULT_C
    t: float = DEFAULT_T
    eta0: Optional[float] = None
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    log_offset: float = LOCAL_LOG_OFFSET
    literal: bool = False

    def local_eta0(self, n: int) -> float:
        return float(self.eta0) if self.eta0 is not None else float(n) ** -0.25


@dataclass
class TestReport:
    __test__ = False

    kind: str
    raw: float
    centering: float
    scale: float
    z_value: float
    p_value: float
    reject: bool
    alpha: float
    kappa4_used: Optional[float]

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class NullConstants:
    kind: str
    centering: float
    scale: float


def _check_kind(kind: str) -> str:
    if kind not in ALL_KINDS:
        raise DomainError(f"unknown statistic {kind!r}; expected one of {', '.join(ALL_KINDS)}")
    return kind


def _is_local(kind: str) -> bool:
    return kind in LOCAL_KINDS


def _check_kappa4(kappa4: Optional[float]) -> float:
    if kappa4 is None:
        raise CumulantError("global statistics need kappa4")
    k = float(kappa4)
    if not k > -2.0:
        raise CumulantError(f"kappa4 = {k} gives a nonpositive variance 2 + kappa4")
    return k


# ---------------- Eigenvalues ----------------

def gram_eigenvalues(X, sigma: Optional[Sequence[float]] = None) -> np.ndarray:
    """Ascending eigenvalues of the n x n matrix X^T diag(sigma) X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {X.shape}")
    p, n = X.shape
    if not (p >= n >= 2):
        raise DimensionError(f"need p >= n >= 2, got p={p}, n={n}")
    if not np.all(np.isfinite(X)):
        raise DimensionError("matrix has non-finite entries")
    if sigma is None:
        Y = X
    else:
        s = np.asarray(sigma, dtype=float).ravel()
        if s.size != p:
            raise DimensionError(f"sigma has length {s.size}, expected {p}")
        if not np.all(s > 0):
            raise DimensionError("sigma must be strictly positive")
        Y = X * np.sqrt(s)[:, None]
    G = Y.T @ Y
    return np.linalg.eigvalsh(0.5 * (G + G.T))


# ---------------- Test functions per statistic ----------------

def _global_tf(ell: str, phi: float, params: StatParams) -> TestFunctionSpec:
    return global_function(BASE_OF[ell], phi, c=params.c, t=params.t, a=params.a)


def _local_tf(ell: str, n: int, phi: float, params: StatParams, sup: Optional[SupportInfo] = None) -> TestFunctionSpec:
    gamma_plus = sup.gamma_plus if sup is not None else identity_edges(phi)[1]
    return local_function(
        BASE_OF[ell],
        n,
        gamma_plus,
        eta0=params.local_eta0(n),
        a=params.a,
        b=params.b,
        log_offset=params.log_offset,
    )


def _raw_sum(tf: TestFunctionSpec, eigs: np.ndarray) -> float:
    return float(np.sum(tf(eigs)))


def stat_raw(
    eigs: Sequence[float],
    kind: str,
    phi: float,
    params: StatParams = StatParams(),
    sup: Optional[SupportInfo] = None,
) -> float:
    """Raw statistic from the n Gram eigenvalues; the order of ``eigs`` is irrelevant.

    Local kinds center their window at ``sup.gamma_plus``, the identity edge by default.
    """
    _check_kind(kind)
    ev = np.sort(np.asarray(eigs, dtype=float).ravel())
    n = ev.size
    if n < 2:
        raise DimensionError("need at least two eigenvalues")
    ell = kind[1]
    local = _is_local(kind)

    def one(e: str) -> float:
        tf = _local_tf(e, n, phi, params, sup) if local else _global_tf(e, phi, params)
        return _raw_sum(tf, ev)

    if ell != "4":
        return one(ell)
    t1 = one("1")
    t2 = one("2")
    if t1 == 0:
        raise DegenerateStatisticError(f"{kind}: T1 = 0 makes the ratio undefined")
    return n * n * t2 / (t1 * t1)


# ---------------- Null calibration ----------------

def _global_constants(kind: str, n: int, phi: float, kappa4: float, params: StatParams) -> NullConstants:
    c, t = params.c, params.t
    ip = 1.0 / math.sqrt(phi)
    mu1 = c - ip
    mu2 = 1.0 + c * c - 2.0 * c * ip + 1.0 / phi
    if kind == "t1g":
        return NullConstants(kind, n * mu1, math.sqrt(identity_covariance("linear", "linear", kappa4, c, t)))
    if kind == "t2g":
        centering = n * mu2 + identity_mean("quadratic", kappa4, c, t)
        return NullConstants(kind, centering, math.sqrt(identity_covariance("quadratic", "quadratic", kappa4, c, t)))
    if kind == "t3g":
        cl = t + 1.0 / t
        tf_log = global_function("log", phi, t=t, a=params.a)
        log_part = lss_centering(PopulationSpectrum.identity(phi), tf_log)
        lin_part = cl - ip
        m_log = identity_mean("log", kappa4, c, t)
        if params.literal:
            centering = n * (lin_part + log_part) + m_log
        else:
            centering = n * (lin_part - log_part) - m_log
        var = identity_covariance("logshift", "logshift", kappa4, c, t)
        return NullConstants(kind, centering, math.sqrt(var))
    # t4g
    if params.literal:
        d = c - 2.0 * ip
        centering = n * (1.0 + d ** -2) + (kappa4 + 1.0) * d * d
        scale = math.sqrt(c ** -4 * (4.0 + 4.0 * (kappa4 + 2.0) / c ** 2) ** 2)
        return NullConstants(kind, centering, scale)
    if mu1 == 0:
        raise DegenerateStatisticError("c = phi^{-1/2} puts the T1 limit at zero")
    m2 = identity_mean("quadratic", kappa4, c, t)
    centering = n * mu2 / mu1 ** 2 + m2 / mu1 ** 2
    grad = np.array([-2.0 * mu2 / mu1 ** 3, 1.0 / mu1 ** 2])
    V = np.array(
        [
            [identity_covariance("linear", "linear", kappa4, c, t), identity_covariance("linear", "quadratic", kappa4, c, t)],
            [identity_covariance("linear", "quadratic", kappa4, c, t), identity_covariance("quadratic", "quadratic", kappa4, c, t)],
        ]
    )
    var = float(grad @ V @ grad)
    if not var > 0:
        raise DegenerateStatisticError("delta-method variance is not positive")
    return NullConstants(kind, centering, math.sqrt(var))


def _local_limit_pair(tfs: List[TestFunctionSpec], phi: float, params: StatParams):
    if params.literal:
        return local_limit_edge(tfs, side="right")
    return identity_lss_limit(tfs, phi, regime="local-edge")


def _local_constants(kind: str, n: int, phi: float, params: StatParams) -> NullConstants:
    spec = PopulationSpectrum.identity(phi)
    sup = support(spec)
    ell = kind[1]
    if ell != "4":
        tf = _local_tf(ell, n, phi, params)
        m_l = lss_centering(spec, tf, sup)
        lim = _local_limit_pair([tf], phi, params)
        mean = tf.h0() / 4.0 if params.literal else float(lim.means[0])
        centering = n * m_l + mean
        var = lim.variance(0)
        if not var > 0:
            raise DegenerateStatisticError(f"{kind}: local variance is not positive")
        return NullConstants(kind, centering, math.sqrt(var))
    tf1 = _local_tf("1", n, phi, params)
    tf2 = _local_tf("2", n, phi, params)
    m1 = lss_centering(spec, tf1, sup)
    m2 = lss_centering(spec, tf2, sup)
    if m1 == 0:
        raise DegenerateStatisticError("local T1 centering is zero")
    lim = _local_limit_pair([tf1, tf2], phi, params)
    if params.literal:
        s1 = m1 + tf1.h0() / (4.0 * n)
        s2 = m2 + tf2.h0() / (4.0 * n)
    else:
        s1 = m1 + float(lim.means[0]) / n
        s2 = m2 + float(lim.means[1]) / n
    centering = n * s2 / (s1 * s1)
    grad = np.array([-2.0 * m2 / m1 ** 3, 1.0 / m1 ** 2])
    var = float(grad @ lim.covariance @ grad)
    if not var > 0:
        raise DegenerateStatisticError("local delta-method variance is not positive")
    return NullConstants(kind, centering, math.sqrt(var))


@lru_cache(maxsize=256)
def null_constants(kind: str, n: int, phi: float, kappa4: Optional[float], params: StatParams = StatParams()) -> NullConstants:
    """Centering and scale of a statistic under Sigma = I; kappa4 is ignored for local kinds."""
    _check_kind(kind)
    if _is_local(kind):
        return _local_constants(kind, int(n), float(phi), params)
    return _global_constants(kind, int(n), float(phi), _check_kappa4(kappa4), params)


# ---------------- Decision ----------------

def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


def critical_value(alpha: float = DEFAULT_ALPHA) -> float:
    return float(special.ndtri(1.0 - _check_alpha(alpha) / 2.0))


def p_value(z: float) -> float:
    """Two-sided normal p-value 2(1 - Phi(|z|))."""
    if math.isnan(z):
        return math.nan
    return float(special.erfc(abs(z) / math.sqrt(2.0)))


def decide(report: Union[TestReport, float], alpha: float = DEFAULT_ALPHA) -> bool:
    z = report.z_value if isinstance(report, TestReport) else float(report)
    return bool(abs(z) > critical_value(alpha))


def standardize(
    kind: str,
    raw: float,
    n: int,
    phi: float,
    kappa4: Optional[float] = None,
    params: StatParams = StatParams(),
    alpha: float = DEFAULT_ALPHA,
) -> TestReport:
    _check_kind(kind)
    _check_alpha(alpha)
    k4 = None if _is_local(kind) else _check_kappa4(kappa4)
    const = null_constants(kind, int(n), float(phi), k4, params)
    z = (float(raw) - const.centering) / const.scale
    return TestReport(
        kind=kind,
        raw=float(raw),
        centering=const.centering,
        scale=const.scale,
        z_value=z,
        p_value=p_value(z),
        reject=decide(z, alpha),
        alpha=alpha,
        kappa4_used=k4,
    )


class NullModel:
    """Standardizes statistics of one (n, phi) null with fixed kappa4 and parameters."""

    def __init__(
        self,
        n: int,
        phi: float,
        kappa4: Optional[float] = 0.0,
        params: StatParams = StatParams(),
        alpha: float = DEFAULT_ALPHA,
    ) -> None:
        self.n = int(n)
        self.phi = float(phi)
        self.kappa4 = kappa4
        self.params = params
        self.alpha = _check_alpha(alpha)

    def constants(self, kind: str) -> NullConstants:
        k4 = None if _is_local(kind) else _check_kappa4(self.kappa4)
        return null_constants(kind, self.n, self.phi, k4, self.params)

    def evaluate(self, eigs: Sequence[float], kinds: Iterable[str]) -> List[TestReport]:
        ev = np.asarray(eigs, dtype=float)
        if ev.size != self.n:
            raise DimensionError(f"expected {self.n} eigenvalues, got {ev.size}")
        out = []
        for kind in kinds:
            raw = stat_raw(ev, kind, self.phi, self.params)
            out.append(standardize(kind, raw, self.n, self.phi, self.kappa4, self.params, self.alpha))
        return out


# ---------------- Data input ----------------

def load_matrix(path_or_buf, rows: str = "vars", header: bool = False) -> np.ndarray:
    """Read a numeric CSV matrix and return it as p x n (variables by samples)."""
    if rows not in ("vars", "samples"):
        raise DomainError(f"rows must be 'vars' or 'samples', got {rows!r}")
    try:
        df = pd.read_csv(path_or_buf, header=None, skiprows=1 if header else 0, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError("input has no data rows") from None
    except pd.errors.ParserError as exc:
        raise DataFormatError(f"malformed CSV: {exc}") from None
    num = df.apply(pd.to_numeric, errors="coerce")
    bad = num.isna().to_numpy() | ~np.isfinite(num.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        line = int(r) + 1 + (1 if header else 0)
        cell = df.iat[int(r), int(c)]
        raise DataFormatError(f"non-numeric cell {cell!r} at row {line}, column {int(c) + 1}", row=line, column=int(c) + 1)
    X = num.to_numpy(dtype=float)
    return X if rows == "vars" else X.T


def run_test(
    X,
    kinds: Sequence[str],
    kappa4: Optional[float] = 0.0,
    params: StatParams = StatParams(),
    alpha: float = DEFAULT_ALPHA,
) -> List[TestReport]:
    """Test H0: Sigma = I on one p x n data matrix (already scaled to the model normalization)."""
    X = np.asarray(X, dtype=float)
    eigs = gram_eigenvalues(X)
    p, n = X.shape
    model = NullModel(n, p / n, kappa4, params, alpha)
    logger.info("testing %d statistics on p=%d, n=%d", len(kinds), p, n)
    return model.evaluate(eigs, kinds)


def kinds_from_arg(text: str) -> Tuple[str, ...]:
    raw = [s.strip().lower() for s in (text or "").split(",") if s.strip()]
    if not raw or raw == ["all"]:
        return ALL_KINDS
    if raw == ["global"]:
        return GLOBAL_KINDS
    if raw == ["local"]:
        return LOCAL_KINDS
    for k in raw:
        _check_kind(k)
    return tuple(raw)
