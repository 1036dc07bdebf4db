import math

import numpy as np
import pytest
from scipy import integrate, optimize

from clat.dist import Normal, SpikeTriangle, StandardNormal, TwoGroupModel, Uniform01
from clat.errors import ParameterError, UndefinedPointError
from clat.oracle import (
    SFunction,
    b_of_a,
    bisect,
    default_bounds,
    exists_rejection,
    golden_max,
    lr_crossings,
    max_likelihood_ratio,
    mfdr_of_region,
    oracle_bh_threshold,
    oracle_clat_interval,
    oracle_report,
    q_prime,
    s_eval,
)

MONO = TwoGroupModel(0.1, StandardNormal(), Normal(2.0, 1.0))
NONMONO = TwoGroupModel(0.1, StandardNormal(), Normal(1.5, 0.8))
EXAMPLE1 = TwoGroupModel(5000 ** -0.2, Uniform01(), SpikeTriangle(5000, 0.5, 1.2))


def gaussian_lr_roots(mu, sigma, level):
    """Roots of log(level) = -log(sigma) + x^2/2 - (x - mu)^2 / (2 sigma^2)."""
    a = 0.5 - 0.5 / sigma**2
    b = mu / sigma**2
    c = -mu**2 / (2 * sigma**2) - math.log(sigma) - math.log(level)
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    r = sorted([(-b - math.sqrt(disc)) / (2 * a), (-b + math.sqrt(disc)) / (2 * a)])
    return r


class TestHelpers:
    def test_bisect(self):
        lo, hi = bisect(lambda x: x * x - 2, 0, 2, xtol=1e-13)
        assert lo == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_golden(self):
        x, v = golden_max(lambda t: -(t - 0.3) ** 2, -1, 2, tol=1e-10)
        assert x == pytest.approx(0.3, abs=1e-8)


class TestQPrime:
    def test_values(self):
        assert q_prime(0.5, 0.5) == pytest.approx(1.0)
        assert q_prime(0.1, 0.182) == pytest.approx(0.9 * 0.818 / 0.0182)
        assert q_prime(1 - 1e-12, 0.3) == pytest.approx(0.0, abs=1e-10)
        assert q_prime(0.1, 0.0) == math.inf

    def test_validation(self):
        with pytest.raises(ParameterError):
            q_prime(0.0, 0.1)


class TestCrossings:
    def test_monotone_single_root(self):
        assert lr_crossings(MONO, math.e**2) == [pytest.approx(2.0, abs=1e-9)]

    @pytest.mark.parametrize("pi1", [0.1, 0.03, 100_000 ** -0.6 * 30])
    def test_quadratic_oracle(self, pi1):
        model = TwoGroupModel(pi1, StandardNormal(), Normal(1.5, 0.8))
        level = q_prime(0.3, pi1) if q_prime(0.3, pi1) < 28 else 20.0
        got = lr_crossings(model, level, (-10, 10))
        expect = gaussian_lr_roots(1.5, 0.8, level)
        assert len(got) == 2
        assert np.allclose(got, expect, atol=1e-8)

    def test_level_above_max(self):
        mx, _ = max_likelihood_ratio(NONMONO)
        assert lr_crossings(NONMONO, mx * 1.01) == []

    def test_max_lr_closed_form(self):
        # max of (1/s) exp(x^2/2 - (x-mu)^2/(2 s^2)) is at x = mu / (1 - s^2)
        mx, arg = max_likelihood_ratio(NONMONO)
        assert arg == pytest.approx(1.5 / (1 - 0.64), abs=1e-5)
        assert mx == pytest.approx(math.exp(1.5**2 / (2 * (1 - 0.64))) / 0.8, rel=1e-9)


class TestRegions:
    def test_null_only_region(self):
        assert mfdr_of_region(TwoGroupModel(0.0, StandardNormal(), Normal(2, 1)), -1, 1) == pytest.approx(1.0)

    def test_region_without_alternative(self):
        assert mfdr_of_region(EXAMPLE1, 0.5, 0.9) == 1.0

    def test_zero_mass(self):
        with pytest.raises(UndefinedPointError):
            mfdr_of_region(EXAMPLE1, 1.5, 2.0)

    def test_s_on_diagonal(self, rng):
        sf = SFunction(NONMONO, 0.1)
        for a in rng.uniform(-5, 5, 50):
            assert s_eval(sf, a, a) == 0.0

    def test_s_sign_matches_mfdr(self, rng):
        sf = SFunction(NONMONO, 0.3)
        for _ in range(50):
            a, b = np.sort(rng.uniform(-3, 6, 2))
            assert (s_eval(sf, a, b) <= 0) == (mfdr_of_region(NONMONO, a, b) <= 0.3)

    def test_mass_against_quadrature(self):
        val = integrate.quad(lambda t: float(NONMONO.pdf(t)), 2.0, 4.0)[0]
        sf = SFunction(NONMONO, 0.2)
        direct = s_eval(sf, 2.0, 4.0)
        null = integrate.quad(lambda t: float(StandardNormal().pdf(t)), 2.0, 4.0)[0]
        assert direct == pytest.approx(0.9 * null - 0.2 * val, abs=1e-12)


class TestBOfA:
    def test_monotone_runs_to_cap(self):
        ex = exists_rejection(MONO, 0.1)
        sf = SFunction(MONO, 0.1)
        b_max = default_bounds(MONO)[1]
        for c in (ex.c1 + 0.01, ex.c1 + 0.5, 4.0):
            assert b_of_a(sf, c) == b_max

    def test_crossing_interval(self):
        model = TwoGroupModel(0.1, StandardNormal(), Normal(1.5, 0.8))
        ex = exists_rejection(model, 0.3)
        sf = SFunction(model, 0.3)
        assert b_of_a(sf, ex.c1) >= ex.c2

    def test_infeasible_returns_a(self):
        sf = SFunction(NONMONO, 0.01)
        assert b_of_a(sf, 0.0) == 0.0

    def test_result_feasible(self, rng):
        sf = SFunction(NONMONO, 0.3)
        for a in rng.uniform(1.0, 4.0, 20):
            b = b_of_a(sf, a)
            assert s_eval(sf, a, b) <= 1e-15


class TestPopulationChecks:
    def test_monotone_interval_is_bh(self):
        iv = oracle_clat_interval(MONO, 0.1)
        t_bh = oracle_bh_threshold(MONO, 0.1)
        assert abs(iv.a - t_bh) <= 1e-6
        assert iv.b_capped and iv.b == default_bounds(MONO)[1]
        assert iv.mfdr <= 0.1 + 1e-8

    def test_bh_threshold_grid_scan(self):
        t = np.linspace(2.5, 3.1, 600_001)
        h = 0.9 * StandardNormal().sf(t) - 0.1 * MONO.sf(t)
        grid_t = t[np.argmax(h <= 0)]
        assert oracle_bh_threshold(MONO, 0.1) == pytest.approx(grid_t, abs=1e-6)
        root = optimize.brentq(lambda x: 0.9 * StandardNormal().sf(x) - 0.1 * MONO.sf(x), 2, 4, xtol=1e-14)
        assert oracle_bh_threshold(MONO, 0.1) == pytest.approx(root, abs=1e-9)

    def test_distribution_free_is_larger(self):
        for model in (MONO, NONMONO):
            assert oracle_bh_threshold(model, 0.3, True) >= oracle_bh_threshold(model, 0.3)

    def test_null_only_bh(self):
        assert oracle_bh_threshold(TwoGroupModel(0.0, StandardNormal(), Normal(2, 1)), 0.1) == math.inf

    def test_empty_regime(self, rng):
        model = TwoGroupModel(100_000 ** -0.6, StandardNormal(), Normal(1.5, 0.8))
        ex = exists_rejection(model, 0.1)
        assert not ex.exists and ex.q_prime > ex.max_lr
        assert oracle_clat_interval(model, 0.1).empty
        for _ in range(1000):
            a, b = np.sort(rng.uniform(-8, 8, 2))
            if float(model.cdf(b) - model.cdf(a)) > 0:
                assert mfdr_of_region(model, a, b) > 0.1

    def test_level_set_controls(self):
        model = TwoGroupModel(0.1, StandardNormal(), Normal(1.5, 0.8))
        ex = exists_rejection(model, 0.3)
        assert ex.exists and ex.q_prime < ex.max_lr
        assert mfdr_of_region(model, ex.c1, ex.c2) <= 0.3 + 1e-9

    def test_monotone_crossing_tail(self):
        ex = exists_rejection(MONO, 0.1)
        sf = SFunction(MONO, 0.1)
        bs = np.linspace(ex.c1 + 1e-9, 9, 400)
        assert np.all(s_eval(sf, ex.c1, bs) <= 1e-15)

    def test_example_one(self):
        ex = exists_rejection(EXAMPLE1, 0.1)
        assert ex.exists
        assert ex.max_lr == pytest.approx(5000 ** 0.5 / 1.2, rel=1e-6)
        assert ex.q_prime == pytest.approx(40.435, abs=1e-3)
        low_q = exists_rejection(EXAMPLE1, 0.07)
        assert not low_q.exists

    def test_table_two_model_finite(self):
        # empty at small q, so move to a level with a valid region
        model = TwoGroupModel(100_000 ** -0.6, StandardNormal(), Normal(1.5, 0.8))
        iv = oracle_clat_interval(model, 0.98)
        assert not iv.empty and not iv.b_capped and math.isfinite(iv.b)

    @pytest.mark.parametrize("model,q", [(MONO, 0.1), (NONMONO, 0.3), (NONMONO, 0.5)])
    def test_interval_controls_mfdr(self, model, q):
        iv = oracle_clat_interval(model, q)
        assert iv.mfdr <= q + 1e-8
        assert 0 <= iv.mass <= 1 and iv.a <= iv.b

    def test_interval_beats_level_set(self):
        model = TwoGroupModel(0.1, StandardNormal(), Normal(1.5, 0.8))
        ex = exists_rejection(model, 0.3)
        iv = oracle_clat_interval(model, 0.3)
        assert iv.mass >= float(model.cdf(ex.c2) - model.cdf(ex.c1))


def test_report_degenerate():
    rep = oracle_report(TwoGroupModel(0.0, StandardNormal(), Normal(2, 1)), 0.1)
    assert rep["degenerate"] and not rep["exists"] and rep["clat_interval"]["empty"]


def test_report_monotone():
    rep = oracle_report(MONO, 0.1)
    assert rep["exists"] and rep["c2"] == math.inf
    assert abs(rep["clat_interval"]["a"] - rep["t_bh"]) <= 1e-6
    assert rep["t_bh_distribution_free"] >= rep["t_bh"]
