"""Parametric univariate distributions used by the two-group model.

Every family exposes ``pdf``, ``cdf``, ``sf``, ``quantile``, ``isf`` and
``sample``; all of them accept scalars or arrays.  Specs are frozen
dataclasses, so a spec can be shared freely between threads and processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError, UndefinedPointError

_QUANTILE_MAX_STEPS = 200


def _as_output(x, values):
    """Return a float for scalar input, an array otherwise."""
    if np.ndim(x) == 0:
        return float(values)
    return values


def _check_levels(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("quantile levels must lie strictly inside (0, 1)")
    return u


def _invert(spec: "DistributionSpec", u: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
    """Solve cdf(x) = u by bracketed Newton iteration with bisection fallback.

    Levels above 1/2 are solved through the survival function so that the
    upper tail keeps full relative precision.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    upper = u > 0.5
    target = np.where(upper, 1.0 - u, u)

    def g(x):
        # increasing in x, zero at the quantile
        return np.where(upper, target - spec.sf(x), spec.cdf(x) - target)

    s_lo, s_hi = spec.support
    lo = np.full(u.shape, -1.0)
    hi = np.full(u.shape, 1.0)
    if np.isfinite(s_lo):
        lo[:] = s_lo
    if np.isfinite(s_hi):
        hi[:] = s_hi
    for _ in range(2100):
        grow = g(lo) > 0
        if not grow.any():
            break
        lo[grow] = 2.0 * lo[grow] - 1.0
    for _ in range(2100):
        grow = g(hi) < 0
        if not grow.any():
            break
        hi[grow] = 2.0 * hi[grow] + 1.0

    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.asarray(x0, dtype=float), lo, hi)
    active = np.arange(u.size)
    for _ in range(_QUANTILE_MAX_STEPS):
        xa, ua, ta = x[active], upper[active], target[active]
        gx = np.where(ua, ta - spec.sf(xa), spec.cdf(xa) - ta)
        la = np.where(gx <= 0, xa, lo[active])
        ha = np.where(gx >= 0, xa, hi[active])
        d = np.asarray(spec.pdf(xa))
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = xa - gx / d
        ok = (d > 0) & np.isfinite(newton) & (newton > la) & (newton < ha)
        new = np.where(ok, newton, 0.5 * (la + ha))
        new = np.where(gx == 0, xa, new)
        scale = 1e-15 * (1.0 + np.abs(xa))
        done = (np.abs(new - xa) <= scale) | (ha - la <= scale)
        lo[active], hi[active], x[active] = la, ha, new
        active = active[~done]
        if active.size == 0:
            break
    return x


@dataclass(frozen=True)
class DistributionSpec:
    """Base class for a univariate law.

    Subclasses implement ``pdf``, ``cdf`` and (where a closed form is
    available) ``quantile``/``sf``; the inverse falls back to numerical
    inversion of the cdf.
    """

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        return _as_output(x, 1.0 - np.asarray(self.cdf(x)))

    def quantile(self, u):
        levels = _check_levels(u)
        return _as_output(u, _invert(self, levels).reshape(levels.shape))

    def isf(self, u):
        """Inverse survival function, i.e. ``quantile(1 - u)`` without cancellation."""
        levels = _check_levels(u)
        return _as_output(u, self._isf(levels))

    def _isf(self, u: np.ndarray) -> np.ndarray:
        # generic: solve sf(x) = u directly through the upper branch of _invert
        flat = np.atleast_1d(u)
        out = np.empty(flat.shape)
        small = flat < 0.5
        if small.any():
            out[small] = _invert(_Reflected(self), flat[small]) * -1.0
        if (~small).any():
            out[~small] = _invert(self, 1.0 - flat[~small])
        return out.reshape(np.shape(u))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class _Reflected(DistributionSpec):
    """Law of -X; used to invert the upper tail through the lower-tail solver."""

    base: DistributionSpec

    @property
    def support(self):
        lo, hi = self.base.support
        return (-hi, -lo)

    def pdf(self, x):
        return self.base.pdf(-np.asarray(x))

    def cdf(self, x):
        return self.base.sf(-np.asarray(x))

    def sf(self, x):
        return self.base.cdf(-np.asarray(x))


@dataclass(frozen=True)
class StandardNormal(DistributionSpec):
    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _as_output(x, np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi))

    def cdf(self, x):
        return _as_output(x, special.ndtr(np.asarray(x, dtype=float)))

    def sf(self, x):
        return _as_output(x, special.ndtr(-np.asarray(x, dtype=float)))

    def quantile(self, u):
        return _as_output(u, special.ndtri(_check_levels(u)))

    def _isf(self, u):
        return -special.ndtri(u)

    def sample(self, rng, n):
        return rng.standard_normal(n)


@dataclass(frozen=True)
class Normal(DistributionSpec):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def pdf(self, x):
        z = self._z(x)
        return _as_output(x, np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi)))

    def cdf(self, x):
        return _as_output(x, special.ndtr(self._z(x)))

    def sf(self, x):
        return _as_output(x, special.ndtr(-self._z(x)))

    def quantile(self, u):
        return _as_output(u, self.mu + self.sigma * special.ndtri(_check_levels(u)))

    def _isf(self, u):
        return self.mu - self.sigma * special.ndtri(u)

    def sample(self, rng, n):
        return self.mu + self.sigma * rng.standard_normal(n)


@dataclass(frozen=True)
class StudentT(DistributionSpec):
    """Student t with real-valued degrees of freedom ``d``."""

    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ParameterError(f"degrees of freedom must be positive, got {self.d}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        d = self.d
        logc = special.gammaln((d + 1) / 2) - special.gammaln(d / 2) - 0.5 * math.log(d * math.pi)
        return _as_output(x, np.exp(logc - (d + 1) / 2 * np.log1p(x * x / d)))

    def _tail(self, x):
        # P(T > |x|) through the regularized incomplete beta; the two branches
        # keep precision near zero and in the far tail respectively
        ax = np.abs(np.asarray(x, dtype=float))
        d = self.d
        with np.errstate(over="ignore", invalid="ignore"):
            t2 = ax * ax
            near = 0.5 - 0.5 * special.betainc(0.5, d / 2, t2 / (d + t2))
            far = 0.5 * special.betainc(d / 2, 0.5, d / (d + t2))
        out = np.where(t2 < d, near, far)
        return np.where(np.isinf(ax), 0.0, out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._tail(x)
        return _as_output(x, np.where(x > 0, 1.0 - tail, tail))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._tail(x)
        return _as_output(x, np.where(x > 0, tail, 1.0 - tail))

    def quantile(self, u):
        levels = _check_levels(u)
        flat = np.atleast_1d(levels)
        # symmetric: solve in the lower tail only
        low = np.minimum(flat, 1.0 - flat)
        x = _invert(self, low, x0=special.ndtri(low))
        x = np.where(flat > 0.5, -x, x)
        x = np.where(flat == 0.5, 0.0, x)
        return _as_output(u, x.reshape(levels.shape))

    def _isf(self, u):
        return -np.asarray(self.quantile(u))

    def sample(self, rng, n):
        return rng.standard_t(self.d, n)


@dataclass(frozen=True)
class GeneralizedGaussian(DistributionSpec):
    """Subbotin law with density ``C exp(-|x - mu|^gamma / gamma)``.

    ``C = gamma^(1 - 1/gamma) / (2 Gamma(1/gamma))``; gamma = 2 is N(mu, 1).
    """

    gamma: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")

    @property
    def log_norm_const(self) -> float:
        g = self.gamma
        return (1.0 - 1.0 / g) * math.log(g) - math.log(2.0) - special.gammaln(1.0 / g)

    def pdf(self, x):
        r = np.abs(np.asarray(x, dtype=float) - self.mu)
        with np.errstate(over="ignore"):
            return _as_output(x, np.exp(self.log_norm_const - r**self.gamma / self.gamma))

    def _half_tail(self, x):
        r = np.abs(np.asarray(x, dtype=float) - self.mu)
        with np.errstate(over="ignore"):
            return 0.5 * special.gammaincc(1.0 / self.gamma, r**self.gamma / self.gamma)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._half_tail(x)
        return _as_output(x, np.where(x > self.mu, 1.0 - tail, tail))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._half_tail(x)
        return _as_output(x, np.where(x > self.mu, tail, 1.0 - tail))

    def _radius(self, tail):
        # |x - mu| whose one-sided tail mass is `tail` (< 1/2)
        g = self.gamma
        return (g * special.gammainccinv(1.0 / g, 2.0 * tail)) ** (1.0 / g)

    def quantile(self, u):
        levels = _check_levels(u)
        low = np.minimum(levels, 1.0 - levels)
        r = self._radius(low)
        return _as_output(u, np.where(levels < 0.5, self.mu - r, self.mu + r))

    def _isf(self, u):
        return 2 * self.mu - np.asarray(self.quantile(u))

    def sample(self, rng, n):
        g = self.gamma
        r = (g * rng.gamma(1.0 / g, 1.0, n)) ** (1.0 / g)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return self.mu + signs * r


@dataclass(frozen=True)
class Uniform01(DistributionSpec):
    @property
    def support(self):
        return (0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _as_output(x, ((x >= 0) & (x <= 1)).astype(float))

    def cdf(self, x):
        return _as_output(x, np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    def sf(self, x):
        return _as_output(x, np.clip(1.0 - np.asarray(x, dtype=float), 0.0, 1.0))

    def quantile(self, u):
        return _as_output(u, np.array(_check_levels(u), dtype=float))

    def _isf(self, u):
        return 1.0 - u

    def sample(self, rng, n):
        return rng.random(n)


@dataclass(frozen=True)
class SpikeTriangle(DistributionSpec):
    """Triangular spike on ``[0, 2h]`` with apex at ``h = l * n**(-alpha)``.

    Peak height is ``1/h = n**alpha / l``.
    """

    n: int
    alpha: float
    l: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n}")
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.l > 0 or self.l > 0.5 * self.n**self.alpha:
            raise ParameterError(
                f"l must satisfy 0 < l <= n^alpha / 2, got l={self.l}"
            )

    @property
    def half_width(self) -> float:
        return self.l * self.n ** (-self.alpha)

    @property
    def support(self):
        return (0.0, 2.0 * self.half_width)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        h = self.half_width
        up = x / h**2
        down = (2 * h - x) / h**2
        out = np.where(x <= h, up, down)
        return _as_output(x, np.where((x < 0) | (x > 2 * h), 0.0, out))

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 2 * self.half_width)
        h = self.half_width
        out = np.where(x <= h, 0.5 * (x / h) ** 2, 1.0 - 0.5 * ((2 * h - x) / h) ** 2)
        return _as_output(x, out)

    def sf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 2 * self.half_width)
        h = self.half_width
        out = np.where(x <= h, 1.0 - 0.5 * (x / h) ** 2, 0.5 * ((2 * h - x) / h) ** 2)
        return _as_output(x, out)

    def quantile(self, u):
        levels = _check_levels(u)
        return _as_output(u, self._ppf(levels))

    def _ppf(self, u):
        h = self.half_width
        return np.where(u <= 0.5, h * np.sqrt(2.0 * u), 2 * h - h * np.sqrt(2.0 * (1.0 - u)))

    def _isf(self, u):
        h = self.half_width
        return np.where(u <= 0.5, 2 * h - h * np.sqrt(2.0 * u), h * np.sqrt(2.0 * (1.0 - u)))

    def sample(self, rng, n):
        # exact piecewise inverse cdf; rng.random() may return 0, which maps to 0
        return self._ppf(rng.random(n))


@dataclass(frozen=True)
class LocationScale(DistributionSpec):
    """Law of ``mu + sigma * Y`` with ``Y ~ base``."""

    base: DistributionSpec
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    @property
    def support(self):
        lo, hi = self.base.support
        return (self.mu + self.sigma * lo, self.mu + self.sigma * hi)

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def pdf(self, x):
        return _as_output(x, np.asarray(self.base.pdf(self._z(x))) / self.sigma)

    def cdf(self, x):
        return _as_output(x, np.asarray(self.base.cdf(self._z(x))))

    def sf(self, x):
        return _as_output(x, np.asarray(self.base.sf(self._z(x))))

    def quantile(self, u):
        return _as_output(u, self.mu + self.sigma * np.asarray(self.base.quantile(u)))

    def _isf(self, u):
        return self.mu + self.sigma * np.asarray(self.base.isf(u))

    def sample(self, rng, n):
        return self.mu + self.sigma * self.base.sample(rng, n)


@dataclass(frozen=True)
class FiniteMixture(DistributionSpec):
    weights: tuple[float, ...]
    components: tuple[DistributionSpec, ...]

    def __init__(self, weights: Sequence[float], components: Sequence[DistributionSpec]):
        w = tuple(float(v) for v in weights)
        comps = tuple(components)
        if len(w) != len(comps) or not comps:
            raise ParameterError("weights and components must be non-empty and of equal length")
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ParameterError(f"mixture weights must lie on the simplex, got {w}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def support(self):
        sup = [c.support for c in self.components]
        return (min(s[0] for s in sup), max(s[1] for s in sup))

    def pdf(self, x):
        out = sum(w * np.asarray(c.pdf(x)) for w, c in zip(self.weights, self.components))
        return _as_output(x, out)

    def cdf(self, x):
        out = sum(w * np.asarray(c.cdf(x)) for w, c in zip(self.weights, self.components))
        return _as_output(x, np.clip(out, 0.0, 1.0))

    def sf(self, x):
        out = sum(w * np.asarray(c.sf(x)) for w, c in zip(self.weights, self.components))
        return _as_output(x, np.clip(out, 0.0, 1.0))

    def sample(self, rng, n):
        which = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
        out = np.empty(n)
        for k, comp in enumerate(self.components):
            idx = np.flatnonzero(which == k)
            if idx.size:
                out[idx] = comp.sample(rng, idx.size)
        return out


@dataclass(frozen=True)
class TwoGroupModel:
    """``(1 - pi1) f0 + pi1 f1`` for null law ``null`` and alternative ``alt``."""

    pi1: float
    null: DistributionSpec
    alt: DistributionSpec = field(default_factory=StandardNormal)

    def __post_init__(self):
        if not 0.0 <= self.pi1 <= 1.0:
            raise ParameterError(f"pi1 must lie in [0, 1], got {self.pi1}")

    def pdf(self, x):
        return mixture_pdf(self, x)

    def cdf(self, x):
        return mixture_cdf(self, x)

    def sf(self, x):
        out = (1 - self.pi1) * np.asarray(self.null.sf(x)) + self.pi1 * np.asarray(self.alt.sf(x))
        return _as_output(x, out)

    def lr(self, x):
        return likelihood_ratio(self, x)


def pdf(spec: DistributionSpec, x):
    return spec.pdf(x)


def cdf(spec: DistributionSpec, x):
    return spec.cdf(x)


def quantile(spec: DistributionSpec, u):
    return spec.quantile(u)


def sample(spec: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 0:
        raise ParameterError("sample size must be non-negative")
    if n == 0:
        return np.empty(0)
    return np.asarray(spec.sample(rng, n), dtype=float)


def mixture_cdf(model: TwoGroupModel, x):
    if model.pi1 == 0:
        return model.null.cdf(x)
    if model.pi1 == 1:
        return model.alt.cdf(x)
    out = (1 - model.pi1) * np.asarray(model.null.cdf(x)) + model.pi1 * np.asarray(model.alt.cdf(x))
    return _as_output(x, out)


def mixture_pdf(model: TwoGroupModel, x):
    if model.pi1 == 0:
        return model.null.pdf(x)
    if model.pi1 == 1:
        return model.alt.pdf(x)
    out = (1 - model.pi1) * np.asarray(model.null.pdf(x)) + model.pi1 * np.asarray(model.alt.pdf(x))
    return _as_output(x, out)


def likelihood_ratio(model: TwoGroupModel, x):
    """``f1(x) / f0(x)``; ``+inf`` where only the null density vanishes."""
    f0 = np.asarray(model.null.pdf(x), dtype=float)
    f1 = np.asarray(model.alt.pdf(x), dtype=float)
    if np.any((f0 == 0) & (f1 == 0)):
        raise UndefinedPointError("likelihood ratio is 0/0 at a requested point")
    with np.errstate(divide="ignore"):
        out = np.where(f0 > 0, f1 / np.where(f0 > 0, f0, 1.0), np.inf)
    return _as_output(x, out)
