"""Population-level quantities for a known two-group model.

Masses are computed from cdf/sf differences (no density quadrature).  The
search strategy throughout is a dense grid followed by bracketed refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .dist import TwoGroupModel
from .errors import ParameterError, UndefinedPointError

GRID = 4096
TAIL = 1e-12
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-10, max_iter: int = 200):
    """Bisection for a sign change of ``f`` on ``[lo, hi]``.

    Returns the final bracket ``(a, b)`` with ``f(a)`` and ``f(b)`` of the
    same signs as ``f(lo)`` and ``f(hi)`` respectively.
    """
    flo = f(lo)
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo, hi


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8, max_iter: int = 200):
    """Golden-section search for the maximum of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@dataclass(frozen=True)
class OracleInterval:
    a: float
    b: float
    mass: float
    mfdr: float
    kind: Literal["BH", "CLAT", "LR-level-set"]
    empty: bool = False
    b_capped: bool = False  # right end sits at b_max, i.e. stands for +inf

    def to_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "mass": self.mass, "mfdr": self.mfdr,
            "kind": self.kind, "empty": self.empty, "b_capped": self.b_capped,
        }


@dataclass(frozen=True)
class SFunction:
    """``s(a, b) = (1 - pi1)(F0(b) - F0(a)) - q (F(b) - F(a))``; ``s <= 0`` iff mFDR on [a, b] <= q."""

    model: TwoGroupModel
    q: float

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ParameterError(f"q must lie in (0, 1), got {self.q}")


@dataclass(frozen=True)
class Existence:
    exists: bool
    max_lr: float
    argmax_lr: float
    q_prime: float
    c1: float | None = None
    c2: float | None = None

    def to_dict(self) -> dict:
        return {
            "exists": self.exists, "max_lr": self.max_lr, "argmax_lr": self.argmax_lr,
            "q_prime": self.q_prime, "c1": self.c1, "c2": self.c2,
        }


def default_bounds(model: TwoGroupModel, tail: float = TAIL) -> tuple[float, float]:
    """Null quantiles at ``tail`` and ``1 - tail``, clipped to the null support."""
    return float(model.null.quantile(tail)), float(model.null.isf(tail))


def _mass(dist, a, b):
    """``P(a < X <= b)`` choosing cdf or sf differences to avoid cancellation."""
    if np.ndim(a) == 0:
        if float(dist.cdf(a)) > 0.5:
            return np.asarray(dist.sf(a)) - np.asarray(dist.sf(b))
        return np.asarray(dist.cdf(b)) - np.asarray(dist.cdf(a))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    via_cdf = np.asarray(dist.cdf(b)) - np.asarray(dist.cdf(a))
    via_sf = np.asarray(dist.sf(a)) - np.asarray(dist.sf(b))
    return np.where(np.asarray(dist.cdf(a)) > 0.5, via_sf, via_cdf)


def q_prime(q: float, pi1: float) -> float:
    if not 0 < q < 1:
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    if not 0 <= pi1 < 1:
        raise ParameterError(f"pi1 must lie in [0, 1), got {pi1}")
    if pi1 == 0:
        return math.inf
    return (1 - q) * (1 - pi1) / (q * pi1)


def lr_crossings(model: TwoGroupModel, level: float, search_range=None, grid: int = GRID) -> list[float]:
    """Sorted solutions of ``Lambda(x) = level`` inside ``search_range``."""
    lo, hi = default_bounds(model) if search_range is None else search_range
    xs = np.linspace(lo, hi, grid)
    h = np.asarray(model.lr(xs)) - level
    roots = []
    for k in np.flatnonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0):
        a, b = bisect(lambda x: float(model.lr(x)) - level, xs[k], xs[k + 1])
        roots.append(0.5 * (a + b))
    roots.extend(float(xs[k]) for k in np.flatnonzero(h == 0))
    return sorted(roots)


def max_likelihood_ratio(model: TwoGroupModel, bounds=None, grid: int = GRID) -> tuple[float, float]:
    """``(max Lambda, argmax)`` over ``bounds`` by grid scan plus golden-section."""
    lo, hi = default_bounds(model) if bounds is None else bounds
    xs = np.linspace(lo, hi, grid)
    lr = np.asarray(model.lr(xs))
    k = int(np.argmax(lr))
    left, right = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    x, v = golden_max(lambda t: float(model.lr(t)), left, right, tol=1e-12)
    if lr[k] >= v:
        return float(lr[k]), float(xs[k])
    return v, x


def mfdr_of_region(model: TwoGroupModel, a: float, b: float) -> float:
    if not a < b:
        raise ParameterError("region needs a < b")
    total = float(_mass(model, a, b))
    if not total > 0:
        raise UndefinedPointError("region carries zero probability")
    null_mass = float(_mass(model.null, a, b))
    return (1 - model.pi1) * null_mass / total


def s_eval(sf: SFunction, a, b):
    m = sf.model
    out = (1 - m.pi1) * _mass(m.null, a, b) - sf.q * _mass(m, a, b)
    return float(out) if np.ndim(out) == 0 else out


def b_of_a(sf: SFunction, a: float, b_max: float | None = None, grid: int = GRID) -> float:
    """Largest ``b <= b_max`` with ``s(a, b) <= 0``; returns ``a`` when none exists.

    ``s(a, .)`` falls while ``Lambda > q'`` and rises otherwise, so the answer
    is the last grid point at or below zero, refined towards the next
    up-crossing.  Returning ``b_max`` means the interval is open to the right:
    that end is tested as ``s(a, +inf)``.  The returned point always
    satisfies ``s(a, b) <= 0``.
    """
    if b_max is None:
        b_max = float(sf.model.null.isf(TAIL))
    if a >= b_max:
        return a
    if s_eval(sf, a, math.inf) <= 0:
        return float(b_max)
    bs = np.linspace(a, b_max, grid + 1)[1:-1]
    s = s_eval(sf, a, bs)
    below = np.flatnonzero(s <= 0)
    if below.size == 0:
        return a
    k = int(below[-1])
    upper = float(bs[k + 1]) if k + 1 < bs.size else float(b_max)
    lo, _ = bisect(lambda b: s_eval(sf, a, b), float(bs[k]), upper)
    return lo


def _right_end(b: float, b_max: float) -> float:
    return math.inf if b >= b_max else b


def _g(sf: SFunction, a: float, b_max: float, grid: int) -> tuple[float, float]:
    b = b_of_a(sf, a, b_max, grid)
    if b <= a:
        return 0.0, a
    return float(_mass(sf.model, a, _right_end(b, b_max))), b


def _feasible(sf: SFunction, a: float, b_max: float, grid: int) -> bool:
    return b_of_a(sf, a, b_max, grid) > a


def oracle_clat_interval(
    model: TwoGroupModel,
    q: float,
    a_grid: int = GRID,
    bounds=None,
    b_max: float | None = None,
    b_grid: int = 1024,
) -> OracleInterval:
    """Interval ``[a0, b_{a0}]`` maximizing ``g(a) = F(b_a) - F(a)``.

    The a-grid spans ``[lower bound, c1]``; the grid argmax is refined by
    locating the left feasibility edge (where ``g`` may jump) and then by
    golden-section search.
    """
    sf = SFunction(model, q)
    lo, hi = default_bounds(model) if bounds is None else bounds
    if b_max is None:
        b_max = hi
    ex = exists_rejection(model, q, bounds=(lo, hi))
    if not ex.exists:
        return OracleInterval(math.nan, math.nan, 0.0, math.nan, "CLAT", empty=True)
    a_hi = ex.c1 if ex.c1 is not None and math.isfinite(ex.c1) else lo
    a_hi = min(max(a_hi, lo), b_max)
    a_vals = np.linspace(lo, a_hi, a_grid)
    g_vals = np.array([_g(sf, float(a), b_max, b_grid)[0] for a in a_vals])
    k = int(np.argmax(g_vals))  # first maximizer: smallest a wins ties
    if g_vals[k] <= 0:
        return OracleInterval(math.nan, math.nan, 0.0, math.nan, "CLAT", empty=True)

    left = float(a_vals[k - 1]) if k > 0 else lo
    right = float(a_vals[k + 1]) if k + 1 < a_grid else float(a_vals[k])
    if k > 0 and not _feasible(sf, left, b_max, b_grid):
        _, left = bisect(lambda a: 1.0 if _feasible(sf, a, b_max, b_grid) else -1.0, left, float(a_vals[k]))
    candidates = [left, float(a_vals[k])]
    if right > left:
        a_gs, _ = golden_max(lambda a: _g(sf, a, b_max, b_grid)[0], left, right)
        candidates.append(a_gs)
    scored = [(_g(sf, a, b_max, b_grid), a) for a in candidates]
    (mass, b), a0 = max(scored, key=lambda item: (item[0][0], -item[1]))
    return OracleInterval(
        a=float(a0),
        b=float(b),
        mass=float(mass),
        mfdr=mfdr_of_region(model, a0, _right_end(b, b_max)),
        kind="CLAT",
        b_capped=bool(b >= b_max),
    )


def oracle_bh_threshold(model: TwoGroupModel, q: float, distribution_free: bool = False, bounds=None,
                        grid: int = GRID) -> float:
    """Smallest ``t`` with ``w (1 - F0(t)) <= q (1 - F(t))``.

    ``w = 1 - pi1`` for the adaptive threshold and ``w = 1`` for the
    distribution-free one.  Returns ``+inf`` when no grid point qualifies
    (in particular whenever ``pi1 = 0``).
    """
    if not 0 < q < 1:
        raise ParameterError(f"q must lie in (0, 1), got {q}")
    if model.pi1 == 0:
        return math.inf
    w = 1.0 if distribution_free else 1.0 - model.pi1
    lo, hi = default_bounds(model) if bounds is None else bounds

    def h(t):
        return w * np.asarray(model.null.sf(t)) - q * np.asarray(model.sf(t))

    ts = np.linspace(lo, hi, grid)
    ok = np.flatnonzero(h(ts) <= 0)
    if ok.size == 0:
        return math.inf
    k = int(ok[0])
    if k == 0:
        return float(ts[0])
    _, t = bisect(lambda t: float(h(t)), float(ts[k - 1]), float(ts[k]), xtol=1e-12)
    return t


def oracle_bh_interval(model: TwoGroupModel, q: float, distribution_free: bool = False, bounds=None) -> OracleInterval:
    lo, hi = default_bounds(model) if bounds is None else bounds
    t = oracle_bh_threshold(model, q, distribution_free, bounds=(lo, hi))
    if not math.isfinite(t):
        return OracleInterval(math.nan, math.nan, 0.0, math.nan, "BH", empty=True)
    mass = float(model.sf(t))
    return OracleInterval(t, math.inf, mass, (1 - model.pi1) * float(model.null.sf(t)) / mass, "BH", b_capped=True)


def exists_rejection(model: TwoGroupModel, q: float, bounds=None, grid: int = GRID) -> Existence:
    """Compare ``max Lambda`` with ``q'``; report ``[c1, c2]`` when a valid region exists.

    ``c1 = -inf`` / ``c2 = +inf`` mean ``Lambda`` stays above ``q'`` up to
    the corresponding end of ``bounds``.
    """
    qp = q_prime(q, model.pi1)
    lo, hi = default_bounds(model) if bounds is None else bounds
    max_lr, x_star = max_likelihood_ratio(model, (lo, hi), grid)
    if not max_lr > qp:
        return Existence(False, max_lr, x_star, qp)
    roots = lr_crossings(model, qp, (lo, hi), grid)
    below = [r for r in roots if r < x_star]
    above = [r for r in roots if r > x_star]
    c1 = below[-1] if below else -math.inf
    c2 = above[0] if above else math.inf
    return Existence(True, max_lr, x_star, qp, c1, c2)


def side_condition(model: TwoGroupModel, q: float, c2: float) -> bool:
    """``q' F0(c2) > q``, the extra assumption of the convergence-rate result."""
    return q_prime(q, model.pi1) * float(model.null.cdf(c2)) > q


def oracle_report(model: TwoGroupModel, q: float, bounds=None) -> dict:
    """Every oracle quantity for one model and level, as plain data."""
    qp = q_prime(q, model.pi1)
    report: dict = {"q": q, "pi1": model.pi1, "q_prime": qp, "degenerate": not math.isfinite(qp)}
    lo, hi = default_bounds(model) if bounds is None else bounds
    report["bounds"] = [lo, hi]
    ex = exists_rejection(model, q, (lo, hi))
    report.update({"exists": ex.exists, "max_lr": ex.max_lr, "argmax_lr": ex.argmax_lr,
                   "c1": ex.c1, "c2": ex.c2})
    report["t_bh"] = oracle_bh_threshold(model, q, False, (lo, hi))
    report["t_bh_distribution_free"] = oracle_bh_threshold(model, q, True, (lo, hi))
    report["bh_interval"] = oracle_bh_interval(model, q, False, (lo, hi)).to_dict()
    if ex.exists:
        report["clat_interval"] = oracle_clat_interval(model, q, bounds=(lo, hi)).to_dict()
        c1 = ex.c1 if math.isfinite(ex.c1) else lo
        c2 = ex.c2 if math.isfinite(ex.c2) else hi
        report["lr_interval"] = OracleInterval(
            c1, c2, float(_mass(model, c1, c2)), mfdr_of_region(model, c1, c2), "LR-level-set",
            b_capped=not math.isfinite(ex.c2),
        ).to_dict()
        report["side_condition"] = side_condition(model, q, c2)
    else:
        report["clat_interval"] = OracleInterval(math.nan, math.nan, 0.0, math.nan, "CLAT", empty=True).to_dict()
        report["lr_interval"] = None
        report["side_condition"] = False
    return report
