# simulation.py

import logging
import math
from dataclasses import dataclass, field, replace
from functools import partial
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, stats

from config import (
    DEFAULT_ALPHA,
    DESK_N,
    DESK_PHI,
    DESK_REPS,
    MAX_ENTRIES,
    PAPER_N,
    PAPER_PHI,
    PAPER_REPS,
    default_threads,
)
from errors import CumulantError, DegenerateStatisticError, DimensionError, DomainError
from lss_statistics import NullModel, StatParams, critical_value, gram_eigenvalues, stat_raw
from spectral_law import PopulationSpectrum

logger = logging.getLogger(__name__)

DIST_TAGS = ("gaussian", "twopoint_neg", "twopoint_pos", "twopoint")
ALT_KINDS = ("cluster", "spiked")
MIN_ECDF_REPS = 100
LAG1_BAND = 4.0


# ---------------- Entry laws ----------------

@dataclass(frozen=True)
class EntryDistribution:
    """Standardized entry law (mean 0, variance 1) before the (pn)^{-1/4} scaling."""

    tag: str = "gaussian"
    p_plus: float = 0.0
    v_plus: float = 0.0
    v_minus: float = 0.0

    @classmethod
    def gaussian(cls) -> "EntryDistribution":
        return cls("gaussian")

    @classmethod
    def twopoint_neg(cls) -> "EntryDistribution":
        # 1/3 at sqrt(2), 2/3 at -1/sqrt(2)
        return cls("twopoint_neg", 1.0 / 3.0, math.sqrt(2.0), -1.0 / math.sqrt(2.0))

    @classmethod
    def twopoint_pos(cls) -> "EntryDistribution":
        # p(1 - p) = 1/8 gives kappa4 = 2
        d = cls.two_point((1.0 - math.sqrt(0.5)) / 2.0)
        return replace(d, tag="twopoint_pos")

    @classmethod
    def two_point(cls, p_plus: float) -> "EntryDistribution":
        """Two-point law with P(v+) = p_plus solving mean 0 and variance 1."""
        if not (0.0 < p_plus < 1.0):
            raise CumulantError(f"p_plus must lie in (0, 1), got {p_plus}")
        q = 1.0 - p_plus
        return cls("twopoint", p_plus, math.sqrt(q / p_plus), -math.sqrt(p_plus / q))

    @classmethod
    def from_tag(cls, tag: str) -> "EntryDistribution":
        if tag == "gaussian":
            return cls.gaussian()
        if tag == "twopoint_neg":
            return cls.twopoint_neg()
        if tag == "twopoint_pos":
            return cls.twopoint_pos()
        if tag.startswith("twopoint:"):
            try:
                return cls.two_point(float(tag.split(":", 1)[1]))
            except ValueError:
                raise DomainError(f"bad two-point probability in {tag!r}") from None
        raise DomainError(f"unknown distribution {tag!r}; expected one of {', '.join(DIST_TAGS)}")

    def validate(self) -> None:
        if self.tag == "gaussian":
            return
        if self.tag not in DIST_TAGS:
            raise DomainError(f"unknown distribution {self.tag!r}")
        p, q = self.p_plus, 1.0 - self.p_plus
        if not (0.0 < p < 1.0):
            raise CumulantError(f"p_plus must lie in (0, 1), got {p}")
        mean = p * self.v_plus + q * self.v_minus
        var = p * self.v_plus ** 2 + q * self.v_minus ** 2
        if abs(mean) > 1e-12 or abs(var - 1.0) > 1e-12:
            raise CumulantError(f"two-point law has mean {mean:.3g} and variance {var:.6g}, not 0 and 1")

    def sample(self, rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
        if self.tag == "gaussian":
            return rng.standard_normal(shape)
        up = rng.random(shape) < self.p_plus
        return np.where(up, self.v_plus, self.v_minus)

    @property
    def label(self) -> str:
        return self.tag if self.tag != "twopoint" else f"twopoint:{self.p_plus:g}"


def kappa4_of(dist: EntryDistribution) -> float:
    """Fourth cumulant E xi^4 - 3 of the standardized entry law."""
    if dist.tag == "gaussian":
        return 0.0
    if dist.tag == "twopoint_neg":
        return -1.5
    if dist.tag == "twopoint_pos":
        return 2.0
    dist.validate()
    p = dist.p_plus
    return p * dist.v_plus ** 4 + (1.0 - p) * dist.v_minus ** 4 - 3.0


# ---------------- Population under test ----------------

@dataclass(frozen=True)
class AlternativeSpec:
    kind: str = "cluster"
    epsilon: float = 0.0
    a: float = 0.5
    r: int = 1

    def validate(self) -> None:
        if self.kind not in ALT_KINDS:
            raise DomainError(f"unknown alternative {self.kind!r}; expected cluster or spiked")
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.kind == "cluster" and not (0.0 < self.a < 1.0):
            raise DomainError(f"cluster weight a must lie in (0, 1), got {self.a}")
        if self.kind == "spiked" and self.r < 1:
            raise DomainError(f"spike count must be >= 1, got {self.r}")

    def diagonal(self, p: int) -> np.ndarray:
        self.validate()
        d = np.ones(int(p))
        k = int(round(self.a * p)) if self.kind == "cluster" else min(int(self.r), int(p))
        d[:k] = 1.0 + self.epsilon
        return d


def spectrum_diagonal(spec: PopulationSpectrum, p: int) -> np.ndarray:
    counts = [int(round(w * p)) for w in spec.weights]
    counts[-1] = p - sum(counts[:-1])
    if counts[-1] < 0:
        raise DimensionError(f"cannot spread spectrum weights over p={p}")
    return np.repeat(np.asarray(spec.values, dtype=float), counts)


@dataclass(frozen=True)
class EnsembleConfig:
    n: int = DESK_N
    phi: float = DESK_PHI
    dist: EntryDistribution = field(default_factory=EntryDistribution.gaussian)
    seed: int = 0
    reps: int = DESK_REPS
    sigma: Optional[PopulationSpectrum] = None
    alternative: Optional[AlternativeSpec] = None
    threads: Optional[int] = None
    stream: int = 0

    @classmethod
    def paper_scale(cls, **kw) -> "EnsembleConfig":
        base = dict(n=PAPER_N, phi=PAPER_PHI, reps=PAPER_REPS)
        base.update(kw)
        return cls(**base)

    @property
    def p(self) -> int:
        return int(round(self.phi * self.n))

    @property
    def effective_phi(self) -> float:
        return self.p / self.n

    def validate(self) -> None:
        if self.n < 2 or self.p < self.n:
            raise DimensionError(f"need p >= n >= 2, got p={self.p}, n={self.n}")
        if self.p * self.n > MAX_ENTRIES:
            raise DimensionError(f"p*n = {self.p * self.n} exceeds the cap {MAX_ENTRIES}")
        if self.reps < 1:
            raise DomainError("reps must be positive")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.sigma is not None and self.alternative is not None:
            raise DomainError("give either sigma or alternative, not both")
        self.dist.validate()

    def diagonal(self) -> np.ndarray:
        if self.alternative is not None:
            return self.alternative.diagonal(self.p)
        if self.sigma is not None:
            return spectrum_diagonal(self.sigma, self.p)
        return np.ones(self.p)

    def describe(self) -> Dict:
        return {
            "n": self.n,
            "p": self.p,
            "phi": self.phi,
            "dist": self.dist.label,
            "seed": int(self.seed),
            "reps": self.reps,
            "sigma": self.sigma.to_string() if self.sigma else None,
            "alternative": None
            if self.alternative is None
            else {"kind": self.alternative.kind, "epsilon": self.alternative.epsilon, "a": self.alternative.a, "r": self.alternative.r},
        }


# ---------------- Replicates ----------------

def replicate_generator(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one replicate; identical for serial and parallel runs."""
    key = (int(index),) if stream == 0 else (int(stream), int(index))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def sample_matrix(cfg: EnsembleConfig, index: int) -> np.ndarray:
    """p x n entries of the standardized law scaled by (pn)^{-1/4}."""
    cfg.validate()
    rng = replicate_generator(cfg.seed, index, cfg.stream)
    p, n = cfg.p, cfg.n
    return cfg.dist.sample(rng, (p, n)) * (p * n) ** -0.25


def replicate_statistics(cfg: EnsembleConfig, kinds: Sequence[str], params: StatParams, index: int) -> List[float]:
    X = sample_matrix(cfg, index)
    eigs = gram_eigenvalues(X, cfg.diagonal())
    return [stat_raw(eigs, k, cfg.effective_phi, params) for k in kinds]


def run_replicates(cfg: EnsembleConfig, kinds: Sequence[str], params: StatParams = StatParams()) -> np.ndarray:
    """Raw statistics, shape (reps, len(kinds)), ordered by replicate index."""
    cfg.validate()
    kinds = list(kinds)
    threads = cfg.threads or default_threads()
    worker = partial(replicate_statistics, cfg, kinds, params)
    logger.info("running %d replicates (p=%d, n=%d) on %d workers", cfg.reps, cfg.p, cfg.n, threads)
    if threads <= 1 or cfg.reps < 2 * threads:
        rows = [worker(i) for i in range(cfg.reps)]
    else:
        chunk = max(1, cfg.reps // (4 * threads))
        with Pool(processes=threads) as pool:
            rows = pool.map(worker, range(cfg.reps), chunksize=chunk)
    return np.asarray(rows, dtype=float).reshape(cfg.reps, len(kinds))


def _standardized(cfg: EnsembleConfig, kinds: Sequence[str], raws: np.ndarray, kappa4: float, params: StatParams) -> np.ndarray:
    model = NullModel(cfg.n, cfg.effective_phi, kappa4, params)
    z = np.empty_like(raws)
    for j, kind in enumerate(kinds):
        const = model.constants(kind)
        z[:, j] = (raws[:, j] - const.centering) / const.scale
    return z


def lag1_autocorrelation(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0.0
    v = v - v.mean()
    denom = float(v @ v)
    return float(v[:-1] @ v[1:]) / denom if denom > 0 else 0.0


# ---------------- ECDF calibration ----------------

@dataclass
class EcdfResult:
    kinds: List[str]
    z: np.ndarray
    raw: np.ndarray
    ks: Dict[str, float]
    seed: int
    reps: int
    compare_z: Optional[np.ndarray] = None
    compare_raw: Optional[np.ndarray] = None
    two_sample_ks: Dict[str, float] = field(default_factory=dict)
    lag1: Dict[str, float] = field(default_factory=dict)
    config: Dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        frames = []
        for j, kind in enumerate(self.kinds):
            part = pd.DataFrame(
                {"replicate": np.arange(self.reps), "kind": kind, "raw": self.raw[:, j], "z_value": self.z[:, j]}
            )
            if self.compare_z is not None:
                part["compare_raw"] = self.compare_raw[:, j]
                part["compare_z_value"] = self.compare_z[:, j]
            frames.append(part)
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> List[Dict]:
        out = []
        for kind in self.kinds:
            row = {"kind": kind, "ks": self.ks[kind], "reps": self.reps, "seed": int(self.seed)}
            if kind in self.lag1:
                row["lag1"] = self.lag1[kind]
            if kind in self.two_sample_ks:
                row["two_sample_ks"] = self.two_sample_ks[kind]
            out.append(row)
        return out


def ecdf_experiment(
    cfg: EnsembleConfig,
    kinds: Sequence[str],
    params: StatParams = StatParams(),
    kappa4: float = 0.0,
    compare: Optional[EntryDistribution] = None,
) -> EcdfResult:
    """Null ECDFs of the standardized statistics and their KS distance to N(0, 1).

    Global kinds are standardized with ``kappa4`` whatever the entry law; with
    ``compare`` a second ensemble under another entry law gives the two-sample
    KS distance per kind.
    """
    if cfg.reps < MIN_ECDF_REPS:
        raise DomainError(f"ECDF experiments need at least {MIN_ECDF_REPS} replicates")
    kinds = list(kinds)
    raws = run_replicates(cfg, kinds, params)
    z = _standardized(cfg, kinds, raws, kappa4, params)
    ks = {k: float(stats.kstest(z[:, j], "norm").statistic) for j, k in enumerate(kinds)}
    lag1 = {k: lag1_autocorrelation(z[:, j]) for j, k in enumerate(kinds)}
    result = EcdfResult(
        kinds=kinds, z=z, raw=raws, ks=ks, seed=cfg.seed, reps=cfg.reps, lag1=lag1, config=cfg.describe()
    )
    if compare is not None:
        other = replace(cfg, dist=compare, stream=cfg.stream + 1)
        raws_b = run_replicates(other, kinds, params)
        z_b = _standardized(other, kinds, raws_b, kappa4, params)
        result.compare_raw = raws_b
        result.compare_z = z_b
        result.two_sample_ks = {k: float(stats.ks_2samp(z[:, j], z_b[:, j]).statistic) for j, k in enumerate(kinds)}
    band = LAG1_BAND / math.sqrt(cfg.reps)
    for k in kinds:
        logger.info("%s: KS to normal %.4f, lag-1 correlation %.3f", k, ks[k], lag1[k])
        if abs(lag1[k]) > band:
            logger.warning("%s: replicates look serially correlated (lag-1 %.3f)", k, lag1[k])
    return result


# ---------------- Power ----------------

@dataclass
class PowerResult:
    table: pd.DataFrame
    seed: int
    reps: int

    def to_frame(self) -> pd.DataFrame:
        return self.table

    def summary(self) -> List[Dict]:
        return [
            {"kind": r.kind, "epsilon": float(r.epsilon), "power": float(r.power), "reps": self.reps, "seed": int(self.seed)}
            for r in self.table.itertuples()
        ]


def power_experiment(
    cfg: EnsembleConfig,
    epsilons: Sequence[float],
    kinds: Sequence[str],
    alternative: AlternativeSpec = AlternativeSpec(),
    alpha: float = DEFAULT_ALPHA,
    params: StatParams = StatParams(),
    kappa4: float = 0.0,
) -> PowerResult:
    """Rejection rates per (kind, epsilon) with null constants from Sigma = I."""
    kinds = list(kinds)
    crit = critical_value(alpha)
    rows = []
    for s, eps in enumerate(epsilons):
        alt = replace(alternative, epsilon=float(eps))
        alt.validate()
        sweep_cfg = replace(cfg, alternative=alt, stream=cfg.stream + s)
        raws = run_replicates(sweep_cfg, kinds, params)
        z = _standardized(sweep_cfg, kinds, raws, kappa4, params)
        for j, kind in enumerate(kinds):
            rate = float(np.mean(np.abs(z[:, j]) > crit))
            se = math.sqrt(rate * (1.0 - rate) / cfg.reps)
            rows.append({"kind": kind, "epsilon": float(eps), "power": rate, "se": se, "reps": cfg.reps})
            logger.info("%s at epsilon=%g: power %.3f", kind, eps, rate)
    return PowerResult(table=pd.DataFrame(rows), seed=cfg.seed, reps=cfg.reps)


# ---------------- ROC ----------------

def roc_curve(positive: Sequence[float], negative: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) sweeping the threshold over the pooled scores, from (0, 0) to (1, 1)."""
    pos = np.asarray(positive, dtype=float)
    neg = np.asarray(negative, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise DomainError("ROC needs scores under both hypotheses")
    pooled = np.concatenate([pos, neg])
    if np.all(pooled == pooled[0]):
        raise DegenerateStatisticError("all scores are equal; ROC is undefined")
    thresholds = np.unique(pooled)[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    tpr = 1.0 - np.searchsorted(pos_sorted, thresholds, side="left") / pos.size
    fpr = 1.0 - np.searchsorted(neg_sorted, thresholds, side="left") / neg.size
    return np.concatenate([[0.0], fpr]), np.concatenate([[0.0], tpr])


def auc(fpr: Sequence[float], tpr: Sequence[float]) -> float:
    return float(integrate.trapezoid(tpr, fpr))


@dataclass
class RocResult:
    curves: Dict[str, Tuple[np.ndarray, np.ndarray]]
    aucs: Dict[str, float]
    seed: int
    reps: int

    def to_frame(self) -> pd.DataFrame:
        frames = [
            pd.DataFrame({"kind": k, "fpr": fpr, "tpr": tpr}) for k, (fpr, tpr) in self.curves.items()
        ]
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> List[Dict]:
        return [{"kind": k, "auc": v, "reps": self.reps, "seed": int(self.seed)} for k, v in self.aucs.items()]


def roc_experiment(
    null_cfg: EnsembleConfig,
    alt_cfg: EnsembleConfig,
    kinds: Sequence[str],
    params: StatParams = StatParams(),
    kappa4: float = 0.0,
) -> RocResult:
    """ROC of |z| separating the alternative (positive) from the null (negative)."""
    if null_cfg.reps != alt_cfg.reps:
        raise DomainError("ROC experiments need equal replicate counts")
    kinds = list(kinds)
    if alt_cfg.stream == null_cfg.stream:
        alt_cfg = replace(alt_cfg, stream=null_cfg.stream + 1)
    z0 = _standardized(null_cfg, kinds, run_replicates(null_cfg, kinds, params), kappa4, params)
    z1 = _standardized(alt_cfg, kinds, run_replicates(alt_cfg, kinds, params), kappa4, params)
    curves = {}
    aucs = {}
    for j, kind in enumerate(kinds):
        fpr, tpr = roc_curve(np.abs(z1[:, j]), np.abs(z0[:, j]))
        curves[kind] = (fpr, tpr)
        aucs[kind] = auc(fpr, tpr)
        logger.info("%s: AUC %.4f", kind, aucs[kind])
    return RocResult(curves=curves, aucs=aucs, seed=null_cfg.seed, reps=null_cfg.reps)
