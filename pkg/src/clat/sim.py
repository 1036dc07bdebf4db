"""Monte Carlo harness: data generators, scoring and replication studies.

Every replicate draws from its own generator seeded by
``SeedSequence([seed, rep])``, so results do not depend on how replicates are
scheduled across workers.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baselines import bh, em_fit, em_lfdr, lfdr_oracle, lfdr_sc, lfdr_stepup, two_sided_pvalues, z_from_t, z_from_unif
from .dist import (
    DistributionSpec,
    FiniteMixture,
    LocationScale,
    Normal,
    SpikeTriangle,
    StandardNormal,
    StudentT,
    TwoGroupModel,
    Uniform01,
)
from .errors import ClatError, ConfigurationError, ParameterError
from .oracle import oracle_clat_interval
from .procedure import ClatConfig, PValueVector, clat, clat_right

METHODS = ("clat", "bh", "lfdr-oracle", "lfdr-sc", "lfdr-em")
CASES = ("I", "II", "III", "IV")
EM_COMPONENTS = {"I": 2, "II": 2, "III": 1, "IV": 2}
WORKERS_ENV = "CLAT_WORKERS"


def rng_for(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep)]))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class CaseConfig:
    case: str = "I"
    n: int = 5000
    beta: float = 0.3
    mu: float = 3.1
    sigma: float = 0.7
    p1: float = 0.9
    d: float = 10.0
    alpha: float = 0.5
    l: float = 1.2
    sigma2: float = 0.5
    seed: int = 0
    sc_scale: str = "z"  # "raw": Lfdr-SC estimates the density of the untransformed statistics

    def __post_init__(self):
        if self.case not in CASES:
            raise ParameterError(f"case must be one of {CASES}, got {self.case!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.case in ("I", "II", "IV"):
            if not self.sigma > 0:
                raise ParameterError("sigma must be positive")
            if not 0 <= self.p1 <= 1:
                raise ParameterError("p1 must lie in [0, 1]")
        if self.case == "II" and not self.d > 0:
            raise ParameterError("d must be positive")
        if self.case == "IV" and not self.sigma2 >= 0:
            raise ParameterError("sigma2 must be non-negative")
        if self.sc_scale not in ("z", "raw"):
            raise ParameterError("sc_scale must be 'z' or 'raw'")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        self.alt  # validates the case-specific alternative eagerly

    @property
    def pi1(self) -> float:
        return float(self.n) ** (-self.beta)

    @property
    def null(self) -> DistributionSpec:
        return {"I": StandardNormal(), "II": StudentT(self.d), "III": Uniform01(), "IV": StandardNormal()}[self.case]

    def _pm_mixture(self, base: DistributionSpec, mu: float, sigma: float) -> DistributionSpec:
        comps = [LocationScale(base, mu, sigma), LocationScale(base, -mu, sigma)]
        if self.p1 == 1:
            return comps[0]
        if self.p1 == 0:
            return comps[1]
        return FiniteMixture([self.p1, 1 - self.p1], comps)

    @property
    def alt(self) -> DistributionSpec:
        if self.case == "I" or self.case == "IV":
            return self._pm_mixture(StandardNormal(), self.mu, self.sigma)
        if self.case == "II":
            return self._pm_mixture(StudentT(self.d), self.mu, self.sigma)
        return SpikeTriangle(self.n, self.alpha, self.l)

    @property
    def model(self) -> TwoGroupModel:
        """Two-group law of the returned statistics (for Case IV, the marginal of ``Y_i``)."""
        if self.case != "IV":
            return TwoGroupModel(self.pi1, self.null, self.alt)
        s = math.sqrt(1 + self.sigma2**2)
        shrunk = replace(self, case="I", mu=self.mu / s, sigma=math.sqrt(self.sigma**2 + self.sigma2**2) / s)
        return TwoGroupModel(self.pi1, StandardNormal(), shrunk.alt)


@dataclass
class LabeledSample:
    stats: np.ndarray
    theta: np.ndarray
    z: np.ndarray | None = None  # N(0, 1)-null scale for the local-fdr methods

    def __post_init__(self):
        self.stats = np.asarray(self.stats, dtype=float)
        self.theta = np.asarray(self.theta, dtype=bool)
        if self.stats.shape != self.theta.shape:
            raise ParameterError("stats and theta must have equal lengths")
        if self.z is not None and np.shape(self.z) != self.stats.shape:
            raise ParameterError("z must match stats in length")


def _draw_two_group(null: DistributionSpec, alt: DistributionSpec, pi1: float, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    theta = rng.random(n) < pi1
    x0 = null.sample(rng, n)
    x1 = alt.sample(rng, int(theta.sum()))
    x = x0.copy()
    x[theta] = x1
    return x, theta


def sample_two_group(model: TwoGroupModel, n: int, rng: np.random.Generator) -> LabeledSample:
    x, theta = _draw_two_group(model.null, model.alt, model.pi1, n, rng)
    return LabeledSample(x, theta)


def generate(cfg: CaseConfig, rep: int = 0, rng: np.random.Generator | None = None) -> LabeledSample:
    rng = rng_for(cfg.seed, rep) if rng is None else rng
    x, theta = _draw_two_group(cfg.null, cfg.alt, cfg.pi1, cfg.n, rng)
    if cfg.case == "I":
        return LabeledSample(x, theta, x)
    if cfg.case == "II":
        return LabeledSample(x, theta, z_from_t(x, cfg.d))
    if cfg.case == "III":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            z = z_from_unif(x)
        return LabeledSample(x, theta, z)
    shared = rng.normal(0.0, cfg.sigma2)
    y = (x + shared) / math.sqrt(1 + cfg.sigma2**2)
    return LabeledSample(y, theta, y)


def score(decision, truth: LabeledSample) -> tuple[int, int, int]:
    """``(V, T, R)``: false, true and total rejections."""
    reject = np.asarray(getattr(decision, "reject", decision), dtype=bool)
    if reject.shape != truth.theta.shape:
        raise ParameterError("decision and truth must have equal lengths")
    T = int(np.count_nonzero(reject & truth.theta))
    R = int(np.count_nonzero(reject))
    return R - T, T, R


def run_method(method: str, sample: LabeledSample, cfg: CaseConfig, q: float) -> np.ndarray:
    """Decision mask of one method on one replicate, using the per-case conventions."""
    n = sample.stats.size
    if q == 0:
        return np.zeros(n, dtype=bool)
    case = cfg.case
    if method == "clat":
        if case == "III":
            # the minimum-length rule is calibrated for a N(0, 1)-scale statistic
            res = clat_right(sample.z, StandardNormal(), ClatConfig(q=q))
        else:
            res = clat(sample.stats, cfg.null, ClatConfig(q=q, null=cfg.null), sided="two")
        return res.reject
    if method == "bh":
        if case == "III":
            p = PValueVector(sample.stats, "left")
        else:
            p = two_sided_pvalues(sample.stats, cfg.null)
        return bh(p, q).reject
    if method == "lfdr-oracle":
        return lfdr_stepup(lfdr_oracle(sample.stats, cfg.model), q).reject
    if method == "lfdr-sc":
        if cfg.sc_scale == "raw":
            return lfdr_sc(sample.stats, cfg.pi1, cfg.null, q).reject
        return lfdr_sc(sample.z, cfg.pi1, StandardNormal(), q).reject
    if method == "lfdr-em":
        fit = em_fit(sample.z, EM_COMPONENTS[case])
        return lfdr_stepup(em_lfdr(sample.z, fit), q).reject
    raise ParameterError(f"unknown method {method!r}; choose from {METHODS}")


@dataclass
class ReplicateRecord:
    rep: int
    method: str
    V: int
    T: int
    R: int
    n_nonnull: int
    runtime: float = field(default=0.0, compare=False)
    error: str | None = None


def run_replicate(cfg: CaseConfig, methods, q: float, rep: int) -> list[ReplicateRecord]:
    sample = generate(cfg, rep)
    n1 = int(sample.theta.sum())
    out = []
    for m in methods:
        t0 = time.perf_counter()
        try:
            V, T, R = score(run_method(m, sample, cfg, q), sample)
            out.append(ReplicateRecord(rep, m, V, T, R, n1, time.perf_counter() - t0))
        except (ClatError, FloatingPointError, np.linalg.LinAlgError) as exc:
            out.append(ReplicateRecord(rep, m, 0, 0, 0, n1, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"))
    return out


def _replicate_job(args):
    cfg, methods, q, rep = args
    return run_replicate(cfg, methods, q, rep)


@dataclass
class MethodSummary:
    ET: float
    EV: float
    mFDR: float
    FDR: float
    mFNR: float
    power: float
    runtime: float = field(compare=False)
    n_ok: int = 0
    n_errors: int = 0

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("runtime")
        return d


def _fsum_mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else math.nan


def summarize(records: list[ReplicateRecord], n: int) -> MethodSummary:
    ok = [r for r in records if r.error is None]
    sum_v = math.fsum(r.V for r in ok)
    sum_r = math.fsum(r.R for r in ok)
    false_neg = [r.n_nonnull - r.T for r in ok]
    non_rej = [n - r.R for r in ok]
    sum_nr = math.fsum(non_rej)
    return MethodSummary(
        ET=_fsum_mean(r.T for r in ok),
        EV=_fsum_mean(r.V for r in ok),
        mFDR=sum_v / sum_r if sum_r > 0 else 0.0,
        FDR=_fsum_mean(r.V / max(r.R, 1) for r in ok),
        mFNR=math.fsum(false_neg) / sum_nr if sum_nr > 0 else 0.0,
        power=_fsum_mean(r.T / r.n_nonnull for r in ok if r.n_nonnull > 0),
        runtime=_fsum_mean(r.runtime for r in records),
        n_ok=len(ok),
        n_errors=len(records) - len(ok),
    )


@dataclass
class ReplicationSummary:
    config: CaseConfig
    q: float
    n_reps: int
    methods: dict[str, MethodSummary]
    records: list[ReplicateRecord] = field(repr=False, default_factory=list)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "config": asdict(self.config),
            "q": self.q,
            "n_reps": self.n_reps,
            "methods": {k: v.to_dict(timing) for k, v in self.methods.items()},
        }


def replicate(cfg: CaseConfig, methods=("clat",), q: float = 0.1, n_reps: int = 100,
              workers: int | None = None) -> ReplicationSummary:
    if int(n_reps) != n_reps or n_reps < 1:
        raise ParameterError("n_reps must be a positive integer")
    if not 0 <= q < 1:
        raise ParameterError(f"q must lie in [0, 1), got {q}")
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ParameterError(f"unknown method {m!r}; choose from {METHODS}")
    workers = default_workers() if workers is None else int(workers)
    jobs = [(cfg, methods, q, rep) for rep in range(n_reps)]
    if workers > 1 and n_reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_replicate_job, jobs))
    else:
        chunks = [_replicate_job(j) for j in jobs]
    records = sorted((r for c in chunks for r in c), key=lambda r: (r.rep, methods.index(r.method)))
    summary = {m: summarize([r for r in records if r.method == m], cfg.n) for m in methods}
    return ReplicationSummary(cfg, q, n_reps, summary, records)


def caption_grid(lo: float, hi: float, points: int = 8) -> np.ndarray:
    """Inclusive arithmetic grid used for the parameter sweeps."""
    return np.linspace(lo, hi, points)


@dataclass
class AverageR:
    mean: float
    values: np.ndarray
    n_excluded: int


def average_r(beta: float, sigma: float, mu: float, n: int = 100_000, n_reps: int = 100, seed: int = 0) -> AverageR:
    """Mean rank (in decreasing order) of the largest alternative-generated observation."""
    model = TwoGroupModel(float(n) ** (-beta), StandardNormal(), Normal(mu, sigma))
    ranks = []
    excluded = 0
    for rep in range(n_reps):
        s = sample_two_group(model, n, rng_for(seed, rep))
        if not s.theta.any():
            excluded += 1
            continue
        order = np.argsort(-s.stats, kind="stable")
        ranks.append(int(np.argmax(s.theta[order])) + 1)
    values = np.asarray(ranks, dtype=float)
    return AverageR(float(values.mean()) if values.size else math.nan, values, excluded)


@dataclass
class ConvergenceResult:
    n_grid: np.ndarray
    g_a0: float
    median_error: np.ndarray
    mfdr: np.ndarray
    slope: float
    intercept: float
    errors: list[np.ndarray] = field(repr=False, default_factory=list)


def convergence_experiment(model: TwoGroupModel, q: float, n_grid=(10**3, 10**4, 10**5, 10**6),
                           reps_per_n: int = 50, seed: int = 0) -> ConvergenceResult:
    """Rate at which the rejected proportion of right-sided CLAT approaches ``g(a0)``.

    CLAT is run with the true ``pi1``.  The slope is the least-squares fit of
    log median absolute error on log n.
    """
    interval = oracle_clat_interval(model, q)
    if interval.empty:
        raise ConfigurationError("oracle rejection interval is empty for this model")
    if interval.b_capped:
        raise ConfigurationError("oracle interval is unbounded; the experiment needs a finite interval")
    cfg = ClatConfig(q=q, pi1=model.pi1, null=model.null)
    med, mfdr, all_err = [], [], []
    for k, n in enumerate(n_grid):
        errs = np.empty(reps_per_n)
        sum_v = sum_r = 0
        for rep in range(reps_per_n):
            s = sample_two_group(model, int(n), rng_for(seed, k * reps_per_n + rep))
            res = clat_right(s.stats, model.null, cfg)
            V, _, R = score(res, s)
            sum_v += V
            sum_r += R
            errs[rep] = abs(R / n - interval.mass)
        all_err.append(errs)
        med.append(float(np.median(errs)))
        mfdr.append(sum_v / sum_r if sum_r else 0.0)
    ns = np.asarray(n_grid, dtype=float)
    med = np.asarray(med)
    slope, intercept = np.polyfit(np.log(ns), np.log(med), 1)
    return ConvergenceResult(ns, interval.mass, med, np.asarray(mfdr), float(slope), float(intercept), all_err)
