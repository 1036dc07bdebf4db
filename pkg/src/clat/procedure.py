"""The CLAT interval-rejection procedure.

The data-driven rejection region is an interval of sorted p-values
``[p_(I), p_(J)]`` that maximizes ``J - I`` subject to

    p_(J) - p_(I) <= q (J - I) / (n (1 - pi1))

and a minimum statistic-space length ``C log(n) / sqrt(n)``.  Writing
``T_i = q i / (n (1 - pi1)) - p_(i)`` turns the first constraint into
``T_I <= T_J``, so after one stable sort of ``T`` the best pair is found in a
single pass that tracks the running minimum of the original ranks.

A virtual origin ``p_(0) = 0`` (``T_0 = 0``) is part of the search: choosing
it yields the tail region ``p <= p_(J)`` with ``M = J`` and is reported as
``I = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dist import DistributionSpec, StandardNormal
from .errors import ParameterError, SizeError

Side = Literal["right", "left"]

BRUTE_FORCE_MAX_N = 10_000


@dataclass(frozen=True)
class PValueVector:
    values: np.ndarray
    side: Side = "right"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ParameterError("p-values must form a 1-d vector")
        if np.any(~((vals >= 0) & (vals <= 1))):
            raise ParameterError("p-values must lie in [0, 1]")
        if self.side not in ("right", "left"):
            raise ParameterError(f"side must be 'right' or 'left', got {self.side!r}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ClatConfig:
    """Tuning of the interval search.

    ``length_check_origin`` controls whether the minimum-length rule also
    binds for the tail region anchored at ``p = 0``.  When the null quantile
    at that end is unbounded the rule is vacuous either way.
    """

    q: float
    pi1: float = 0.0
    length_constant: float = 2.0
    null: DistributionSpec = field(default_factory=StandardNormal)
    length_check_origin: bool = True

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ParameterError(f"q must lie in (0, 1), got {self.q}")
        if not 0 <= self.pi1 < 1:
            raise ParameterError(f"pi1 must lie in [0, 1), got {self.pi1}")
        if not self.length_constant >= 0:
            raise ParameterError("length_constant must be non-negative")


@dataclass
class RejectionResult:
    """Decision vector plus the rejection interval in sorted-rank form.

    ``I`` and ``J`` are 1-based ranks into the ascending p-values; ``J == I``
    means nothing is rejected.  ``from_origin`` marks the tail region
    ``p <= p_(J)`` (then ``M == J``); otherwise ``M == J - I``.
    """

    reject: np.ndarray
    I: int = 1
    J: int = 1
    M: int = 0
    interval_p: tuple[float, float] | None = None
    interval_x: tuple[float, float] | None = None
    from_origin: bool = False

    @property
    def n_rejected(self) -> int:
        return int(np.count_nonzero(self.reject))

    def to_dict(self) -> dict:
        return {
            "I": int(self.I),
            "J": int(self.J),
            "M": int(self.M),
            "from_origin": bool(self.from_origin),
            "interval_p": None if self.interval_p is None else [float(v) for v in self.interval_p],
            "interval_x": None if self.interval_x is None else [float(v) for v in self.interval_x],
            "n_rejected": self.n_rejected,
        }


@dataclass
class TwoSidedResult:
    """Union of a right-sided and a left-sided CLAT search."""

    right: RejectionResult
    left: RejectionResult

    @property
    def reject(self) -> np.ndarray:
        return self.right.reject | self.left.reject

    @property
    def n_rejected(self) -> int:
        return int(np.count_nonzero(self.reject))

    def to_dict(self) -> dict:
        return {"right": self.right.to_dict(), "left": self.left.to_dict(), "n_rejected": self.n_rejected}


def pvalues_right(stats, null: DistributionSpec) -> PValueVector:
    """``p_i = 1 - F0(x_i)``, evaluated through the survival function."""
    x = np.asarray(stats, dtype=float)
    return PValueVector(np.asarray(null.sf(x), dtype=float).reshape(x.shape), "right")


def pvalues_left(stats, null: DistributionSpec) -> PValueVector:
    x = np.asarray(stats, dtype=float)
    return PValueVector(np.asarray(null.cdf(x), dtype=float).reshape(x.shape), "left")


def statistic_of_p(p, null: DistributionSpec, side: Side) -> np.ndarray:
    """Map p-values back to statistic space (``p = 0`` maps to the support edge)."""
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape)
    lo, hi = null.support
    zero, one = p <= 0, p >= 1
    inner = ~(zero | one)
    if side == "right":
        out[zero], out[one] = hi, lo
        if inner.any():
            out[inner] = null.isf(p[inner])
    else:
        out[zero], out[one] = lo, hi
        if inner.any():
            out[inner] = null.quantile(p[inner])
    return out


def length_threshold(n: int, constant: float) -> float:
    return constant * math.log(n) / math.sqrt(n) if n > 1 else 0.0


def _t_scores(p_sorted: np.ndarray, cfg: ClatConfig) -> np.ndarray:
    n = p_sorted.size
    ranks = np.arange(1, n + 1, dtype=float)
    return cfg.q * ranks / (n * (1.0 - cfg.pi1)) - p_sorted


@dataclass
class _Prepared:
    order: np.ndarray  # argsort of p
    p_sorted: np.ndarray
    T: np.ndarray  # T[k] for rank k + 1
    x_sorted: np.ndarray  # statistic-space location of each sorted p
    x_origin: float
    threshold: float


def _prepare(p: PValueVector, cfg: ClatConfig) -> _Prepared:
    order = np.argsort(p.values, kind="stable")
    p_sorted = p.values[order]
    n = p_sorted.size
    return _Prepared(
        order=order,
        p_sorted=p_sorted,
        T=_t_scores(p_sorted, cfg),
        x_sorted=statistic_of_p(p_sorted, cfg.null, p.side),
        x_origin=float(statistic_of_p(np.zeros(1), cfg.null, p.side)[0]),
        threshold=length_threshold(n, cfg.length_constant),
    )


def _origin_length_ok(prep: _Prepared, cfg: ClatConfig) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        gap = np.abs(prep.x_sorted - prep.x_origin)
    if not cfg.length_check_origin:
        return np.ones(prep.p_sorted.size, dtype=bool)
    return np.isinf(prep.x_origin) | (gap > prep.threshold)


def _finish(p: PValueVector, prep: _Prepared, I: int, J: int, M: int, from_origin: bool) -> RejectionResult:
    n = p.values.size
    if M <= 0:
        return RejectionResult(reject=np.zeros(n, dtype=bool), I=1, J=1, M=0)
    p_hi = prep.p_sorted[J - 1]
    if from_origin:
        # ranks 1..J; in statistic space the region runs out to the support edge
        p_lo, x_lo_end = prep.p_sorted[0], prep.x_origin
        reject = p.values <= p_hi
    else:
        p_lo, x_lo_end = prep.p_sorted[I - 1], prep.x_sorted[I - 1]
        reject = (p.values >= p_lo) & (p.values <= p_hi)
    x_pair = sorted((float(x_lo_end), float(prep.x_sorted[J - 1])))
    return RejectionResult(
        reject=reject,
        I=int(I),
        J=int(J),
        M=int(M),
        interval_p=(float(p_lo), float(p_hi)),
        interval_x=(x_pair[0], x_pair[1]),
        from_origin=from_origin,
    )


def clat_search(p: PValueVector, cfg: ClatConfig) -> RejectionResult:
    """O(n log n) interval search.

    Equivalent to visiting the ranks ``l_1, l_2, ...`` in ascending order of
    ``T`` (ties by rank), keeping ``i_temp = min(l_1..l_j)`` and accepting a
    candidate only when it strictly beats the best value so far.  At each
    step the origin candidate ``(0, l_j)`` is tried before ``(i_temp, l_j)``.
    Because the accepted candidate is the first one attaining the global
    maximum, the pass is evaluated with array operations.
    """
    n = len(p)
    if n == 0:
        return RejectionResult(reject=np.zeros(0, dtype=bool))
    prep = _prepare(p, cfg)
    ranks = np.argsort(prep.T, kind="stable") + 1  # l_1..l_n
    i_temp = np.minimum.accumulate(ranks)

    # origin candidate: T_{l_j} >= T_0 = 0; J = 1 would give J == I, i.e. no rejection
    origin_ok = (prep.T[ranks - 1] >= 0) & _origin_length_ok(prep, cfg)[ranks - 1] & (ranks >= 2)
    origin_val = np.where(origin_ok, ranks, 0)

    with np.errstate(invalid="ignore"):
        gap = np.abs(prep.x_sorted[ranks - 1] - prep.x_sorted[i_temp - 1])
        long_enough = gap > prep.threshold
    inner_val = np.where(long_enough, ranks - i_temp, 0)

    best_origin = int(origin_val.max())
    best_inner = int(inner_val.max())
    M = max(best_origin, best_inner)
    if M <= 0:
        return _finish(p, prep, 1, 1, 0, False)
    pos_origin = int(np.argmax(origin_val == M)) if best_origin == M else n
    pos_inner = int(np.argmax(inner_val == M)) if best_inner == M else n
    if pos_origin <= pos_inner:
        return _finish(p, prep, 1, int(ranks[pos_origin]), M, True)
    return _finish(p, prep, int(i_temp[pos_inner]), int(ranks[pos_inner]), M, False)


def clat_brute_force(p: PValueVector, cfg: ClatConfig) -> RejectionResult:
    """Exhaustive O(n^2) reference for :func:`clat_search`.

    Every pair ``0 <= i < j <= n`` is checked against both constraints.
    Among maximizers the pair whose right end ``j`` appears first in the
    stable ``T`` ordering is returned, which is the pair the scan settles on.
    """
    n = len(p)
    if n > BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 0:
        return RejectionResult(reject=np.zeros(0, dtype=bool))
    prep = _prepare(p, cfg)
    position = np.empty(n, dtype=int)
    position[np.argsort(prep.T, kind="stable")] = np.arange(n)
    origin_ok = _origin_length_ok(prep, cfg)

    best = (0, n + 1, 1, 1, False)  # (M, position of j, I, J, from_origin)
    for j in range(1, n + 1):
        tj, xj, pos = prep.T[j - 1], prep.x_sorted[j - 1], position[j - 1]
        if j >= 2 and tj >= 0 and origin_ok[j - 1]:
            cand = (j, pos, 1, j, True)
            if cand[0] > best[0] or (cand[0] == best[0] and pos < best[1]):
                best = cand
        if j == 1:
            continue
        # all pairs (i, j) with i < j, checked directly
        feasible = prep.T[: j - 1] <= tj
        with np.errstate(invalid="ignore"):
            feasible &= np.abs(xj - prep.x_sorted[: j - 1]) > prep.threshold
        if not feasible.any():
            continue
        i = int(np.argmax(feasible)) + 1  # smallest feasible i gives the largest j - i
        m = j - i
        if m > best[0] or (m == best[0] and pos < best[1]):
            best = (m, pos, i, j, False)
    M, _, I, J, from_origin = best
    return _finish(p, prep, I, J, M, from_origin)


def clat_right(stats, null: DistributionSpec, cfg: ClatConfig) -> RejectionResult:
    return clat_search(pvalues_right(stats, null), _with_null(cfg, null))


def clat_left(stats, null: DistributionSpec, cfg: ClatConfig) -> RejectionResult:
    return clat_search(pvalues_left(stats, null), _with_null(cfg, null))


def clat_two_sided(stats, null: DistributionSpec, cfg: ClatConfig) -> TwoSidedResult:
    """Right- and left-sided searches, each at level ``q``; rejects their union."""
    return TwoSidedResult(right=clat_right(stats, null, cfg), left=clat_left(stats, null, cfg))


def clat(stats, null: DistributionSpec, cfg: ClatConfig, sided: str = "right"):
    if sided == "right":
        return clat_right(stats, null, cfg)
    if sided == "left":
        return clat_left(stats, null, cfg)
    if sided == "two":
        return clat_two_sided(stats, null, cfg)
    raise ParameterError(f"sided must be 'right', 'left' or 'two', got {sided!r}")


def _with_null(cfg: ClatConfig, null: DistributionSpec) -> ClatConfig:
    if cfg.null == null:
        return cfg
    return ClatConfig(
        q=cfg.q,
        pi1=cfg.pi1,
        length_constant=cfg.length_constant,
        null=null,
        length_check_origin=cfg.length_check_origin,
    )
