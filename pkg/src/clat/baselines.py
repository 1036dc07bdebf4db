"""Competing procedures: BH, local-fdr step-up (oracle, KDE, EM) and the
transforms that bring statistics to a N(0, 1) null scale."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .dist import DistributionSpec, StandardNormal, StudentT, TwoGroupModel
from .errors import DomainError, ParameterError, UndefinedPointError
from .procedure import PValueVector, RejectionResult

log = logging.getLogger(__name__)

Z_CLAMP = 8.2
_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class LfdrVector:
    values: np.ndarray
    source: Literal["oracle", "kde", "em"]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if np.any(~((vals >= 0) & (vals <= 1))):
            raise ParameterError("local fdr values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)


@dataclass
class EmFit:
    pi1_hat: float
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    iterations: int
    final_diff: float
    converged: bool = True
    loglik: np.ndarray | None = None  # per-iteration trace, only when requested

    @property
    def model(self) -> TwoGroupModel:
        from .dist import FiniteMixture, Normal

        comps = [Normal(float(m), float(np.sqrt(v))) for m, v in zip(self.means, self.variances)]
        alt = comps[0] if len(comps) == 1 else FiniteMixture(self.weights / self.weights.sum(), comps)
        return TwoGroupModel(pi1=float(self.pi1_hat), null=StandardNormal(), alt=alt)


def bh(p: PValueVector | np.ndarray, q: float, pi1: float = 0.0) -> RejectionResult:
    """Benjamini-Hochberg step-up; ``pi1 > 0`` gives the adaptive threshold."""
    if not 0 < q < 1:
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    values = p.values if isinstance(p, PValueVector) else np.asarray(p, dtype=float)
    n = values.size
    if n == 0:
        return RejectionResult(reject=np.zeros(0, dtype=bool))
    p_sorted = np.sort(values)
    thresholds = q * np.arange(1, n + 1) / (n * (1.0 - pi1))
    below = np.flatnonzero(p_sorted <= thresholds)
    if below.size == 0:
        return RejectionResult(reject=np.zeros(n, dtype=bool))
    R = int(below[-1]) + 1
    cut = p_sorted[R - 1]
    return RejectionResult(
        reject=values <= cut, I=1, J=R, M=R, interval_p=(float(p_sorted[0]), float(cut)), from_origin=True
    )


def lfdr_oracle(stats, model: TwoGroupModel) -> LfdrVector:
    x = np.asarray(stats, dtype=float)
    f0 = np.asarray(model.null.pdf(x), dtype=float)
    f = (1 - model.pi1) * f0 + model.pi1 * np.asarray(model.alt.pdf(x), dtype=float)
    if np.any(f <= 0):
        raise UndefinedPointError("mixture density vanishes at a statistic")
    return LfdrVector(np.clip((1 - model.pi1) * f0 / f, 0.0, 1.0), "oracle")


def lfdr_stepup(fdr: LfdrVector | np.ndarray, q: float) -> RejectionResult:
    """Reject the R smallest local fdrs, R the largest rank whose running mean is <= q."""
    if not 0 < q < 1:
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    values = fdr.values if isinstance(fdr, LfdrVector) else np.asarray(fdr, dtype=float)
    n = values.size
    reject = np.zeros(n, dtype=bool)
    if n == 0:
        return RejectionResult(reject=reject)
    order = np.argsort(values, kind="stable")
    running = np.cumsum(values[order]) / np.arange(1, n + 1)
    ok = np.flatnonzero(running <= q)
    if ok.size == 0:
        return RejectionResult(reject=reject)
    R = int(ok[-1]) + 1
    reject[order[:R]] = True
    return RejectionResult(reject=reject, I=1, J=R, M=R, from_origin=True)


def silverman_bandwidth(x) -> float:
    x = np.asarray(x, dtype=float)
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if not spread > 0:
        spread = sd
    if not spread > 0:
        raise ParameterError("bandwidth undefined for zero-variance input")
    return 0.9 * spread * x.size ** (-0.2)


def kde_density(stats, eval_points, bandwidth: float | None = None, chunk: int = 2048) -> np.ndarray:
    """Gaussian kernel density estimate, Silverman bandwidth by default."""
    x = np.asarray(stats, dtype=float)
    if x.size < 2:
        raise ParameterError("kernel density estimation needs at least two points")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    t = np.atleast_1d(np.asarray(eval_points, dtype=float))
    out = np.empty(t.size)
    for start in range(0, t.size, chunk):
        block = t[start:start + chunk]
        z = (block[:, None] - x[None, :]) / h
        out[start:start + chunk] = np.exp(-0.5 * z * z).sum(axis=1)
    out /= x.size * h * _SQRT_2PI
    return out.reshape(np.shape(eval_points))


def lfdr_sc(stats, pi1: float, null: DistributionSpec, q: float, bandwidth: float | None = None) -> RejectionResult:
    x = np.asarray(stats, dtype=float)
    f_hat = kde_density(x, x, bandwidth)
    f0 = np.asarray(null.pdf(x), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        fdr = np.where(f_hat > 0, (1 - pi1) * f0 / f_hat, 1.0)
    return lfdr_stepup(LfdrVector(np.clip(fdr, 0.0, 1.0), "kde"), q)


def _normal_pdf(x, mu, var):
    return np.exp(-0.5 * (x - mu) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def em_fit(
    stats,
    L: int,
    delta: float = 0.001,
    max_iter: int = 10_000,
    var_floor: float = 1e-6,
    weight_floor: float = 1e-8,
    track_loglik: bool = False,
) -> EmFit:
    """Fit ``(1 - pi1) phi(x) + pi1 sum_l p_l N(mu_l, sigma_l^2)`` by EM.

    Starts from ``pi1 = 0.5``, ``p_l = 1/L``, ``mu_l = (-1)^l``,
    ``sigma_l^2 = 1`` and stops once the squared parameter change drops to
    ``delta`` or ``max_iter`` is reached (``converged`` is then False).
    """
    x = np.asarray(stats, dtype=float)
    n = x.size
    if L < 1 or n < L + 1:
        raise ParameterError(f"need L >= 1 and n >= L + 1, got L={L}, n={n}")
    pi1 = 0.5
    p = np.full(L, 1.0 / L)
    mu = np.array([(-1.0) ** l for l in range(1, L + 1)])
    var = np.ones(L)
    phi = _normal_pdf(x, 0.0, 1.0)
    trace = []
    diff = 1.0
    it = 0
    while diff > delta and it < max_iter:
        comp = p[:, None] * _normal_pdf(x[None, :], mu[:, None], var[:, None])  # L x n
        alt = comp.sum(axis=0)
        mix = (1 - pi1) * phi + pi1 * alt
        if track_loglik:
            trace.append(float(np.sum(np.log(mix))))
        fdr = (1 - pi1) * phi / mix
        with np.errstate(invalid="ignore", divide="ignore"):
            omega = np.where(alt > 0, comp / alt, 1.0 / L)
        resp = 1.0 - fdr
        total = resp.sum()
        r_l = omega * resp  # joint responsibility of component l
        mass_l = r_l.sum(axis=1)

        pi1_new = total / n
        p_new = np.maximum(mass_l / total, weight_floor)
        p_new /= p_new.sum()
        safe = np.maximum(mass_l, np.finfo(float).tiny)
        mu_new = (r_l @ x) / safe
        var_new = np.maximum((r_l * (x[None, :] - mu_new[:, None]) ** 2).sum(axis=1) / safe, var_floor)

        diff = (
            (pi1_new - pi1) ** 2
            + np.sum((p_new - p) ** 2)
            + np.sum((mu_new - mu) ** 2)
            + np.sum((var_new - var) ** 2)
        )
        pi1, p, mu, var = pi1_new, p_new, mu_new, var_new
        it += 1
    if track_loglik:
        alt = (p[:, None] * _normal_pdf(x[None, :], mu[:, None], var[:, None])).sum(axis=0)
        trace.append(float(np.sum(np.log((1 - pi1) * phi + pi1 * alt))))
    converged = diff <= delta
    if not converged:
        log.warning("EM stopped after %d iterations without converging (diff=%.3g)", it, diff)
    return EmFit(
        pi1_hat=float(pi1),
        weights=p,
        means=mu,
        variances=var,
        iterations=it,
        final_diff=float(diff),
        converged=converged,
        loglik=np.array(trace) if track_loglik else None,
    )


def em_lfdr(stats, fit: EmFit) -> LfdrVector:
    x = np.asarray(stats, dtype=float)
    phi = _normal_pdf(x, 0.0, 1.0)
    alt = (fit.weights[:, None] * _normal_pdf(x[None, :], fit.means[:, None], fit.variances[:, None])).sum(axis=0)
    mix = (1 - fit.pi1_hat) * phi + fit.pi1_hat * alt
    with np.errstate(invalid="ignore", divide="ignore"):
        fdr = np.where(mix > 0, (1 - fit.pi1_hat) * phi / mix, 1.0)
    return LfdrVector(np.clip(fdr, 0.0, 1.0), "em")


def lfdr_em(stats, L: int, q: float, **em_kwargs) -> RejectionResult:
    fit = em_fit(stats, L, **em_kwargs)
    return lfdr_stepup(em_lfdr(stats, fit), q)


def z_from_t(t, df) -> np.ndarray:
    """``Phi^{-1}(T_d(t))`` elementwise, with real-valued ``d``."""
    t = np.asarray(t, dtype=float)
    df = np.broadcast_to(np.asarray(df, dtype=float), t.shape)
    if np.any(~(df > 0)):
        raise DomainError("degrees of freedom must be positive")
    out = np.empty(t.shape)
    flat_t, flat_d, flat_out = t.reshape(-1), df.reshape(-1), out.reshape(-1)
    for d in np.unique(flat_d):
        idx = flat_d == d
        tt = flat_t[idx]
        # work in the tail nearer to the observation so extreme t keep precision
        lower = np.asarray(StudentT(float(d)).cdf(-np.abs(tt)), dtype=float)
        z = np.where(lower > 0, special.ndtri(np.where(lower > 0, lower, 0.5)), -np.inf)
        flat_out[idx] = np.where(tt > 0, -z, z)
    if np.any(np.isinf(out)):
        warnings.warn(f"z-transform beyond double precision; clamped to +/-{Z_CLAMP}", RuntimeWarning)
        out = np.clip(out, -Z_CLAMP, Z_CLAMP)
    return out if out.ndim else float(out)


def z_from_unif(x) -> np.ndarray:
    """``Phi^{-1}(1 - x)``; values at 0 or 1 are clamped to +/-8.2 with a warning."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1) | np.isnan(x)):
        raise DomainError("uniform statistics must lie in [0, 1]")
    edge = (x <= 0) | (x >= 1)
    z = -special.ndtri(np.where(edge, 0.5, x))
    if edge.any():
        warnings.warn(f"{int(edge.sum())} boundary values clamped to +/-{Z_CLAMP}", RuntimeWarning)
        z = np.where(x <= 0, Z_CLAMP, np.where(x >= 1, -Z_CLAMP, z))
    return z if z.ndim else float(z)


def two_sided_pvalues(stats, null: DistributionSpec) -> PValueVector:
    x = np.asarray(stats, dtype=float)
    lower = np.asarray(null.cdf(x), dtype=float)
    upper = np.asarray(null.sf(x), dtype=float)
    return PValueVector(np.minimum(1.0, 2.0 * np.minimum(lower, upper)), "right")
