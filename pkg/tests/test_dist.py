import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from clat.dist import (
    FiniteMixture,
    GeneralizedGaussian,
    LocationScale,
    Normal,
    SpikeTriangle,
    StandardNormal,
    StudentT,
    TwoGroupModel,
    Uniform01,
    cdf,
    likelihood_ratio,
    mixture_cdf,
    mixture_pdf,
    pdf,
    quantile,
    sample,
)
from clat.errors import DomainError, ParameterError, UndefinedPointError

GRID = np.linspace(0.001, 0.999, 999)

FAMILIES = {
    "std-normal": StandardNormal(),
    "normal": Normal(1.5, 0.8),
    "t1": StudentT(1),
    "t10": StudentT(10),
    "t-real-df": StudentT(7.3),
    "gg-half": GeneralizedGaussian(0.5, 0.0),
    "gg-3": GeneralizedGaussian(3.0, -1.0),
    "uniform": Uniform01(),
    "spike": SpikeTriangle(5000, 0.5, 1.2),
    "loc-scale-t": LocationScale(StudentT(10), 3.0, 0.7),
    "mixture": FiniteMixture([0.9, 0.1], [Normal(3.0, 0.7), Normal(-3.0, 0.7)]),
}


def _pieces(spec):
    """Integration breakpoints so quad sees the kinks and far tails."""
    lo, hi = spec.support
    if isinstance(spec, SpikeTriangle):
        h = spec.half_width
        return [(0.0, h), (h, 2 * h)]
    if math.isfinite(lo) and math.isfinite(hi):
        return [(lo, hi)]
    centre = float(spec.quantile(0.5))
    return [(-np.inf, centre), (centre, np.inf)]


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_quantile_cdf_roundtrip(name):
    spec = FAMILIES[name]
    x = np.asarray(spec.quantile(GRID))
    assert np.max(np.abs(np.asarray(spec.cdf(x)) - GRID)) <= 1e-8
    # and back in x-space at interior points
    assert np.allclose(spec.quantile(spec.cdf(x)), x, rtol=0, atol=1e-8 * (1 + np.abs(x)).max())


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_pdf_integrates_to_one(name):
    spec = FAMILIES[name]
    total = sum(integrate.quad(lambda t: float(spec.pdf(t)), a, b, limit=200, epsabs=1e-12)[0]
                for a, b in _pieces(spec))
    assert abs(total - 1.0) <= 1e-6


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_cdf_matches_integrated_pdf(name):
    spec = FAMILIES[name]
    lo, _ = spec.support
    for u in (0.1, 0.5, 0.8):
        x = float(spec.quantile(u))
        start = lo if math.isfinite(lo) else -np.inf
        val = integrate.quad(lambda t: float(spec.pdf(t)), start, x, limit=200, epsabs=1e-12,
                             points=None if not math.isfinite(start) else None)[0]
        assert val == pytest.approx(u, abs=1e-6)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_cdf_monotone_and_limits(name):
    spec = FAMILIES[name]
    lo, hi = spec.support
    xs = np.linspace(max(lo, -50), min(hi, 50), 2001)
    F = np.asarray(spec.cdf(xs))
    assert np.all(np.diff(F) >= 0)
    assert float(spec.cdf(-1e300)) == 0.0
    assert float(spec.cdf(1e300)) == 1.0
    assert np.all(np.asarray(spec.pdf(xs)) >= 0)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sf_complements_cdf(name):
    spec = FAMILIES[name]
    x = np.asarray(spec.quantile(GRID))
    assert np.allclose(np.asarray(spec.sf(x)) + np.asarray(spec.cdf(x)), 1.0, atol=1e-12)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sampling_ks(name):
    spec = FAMILIES[name]
    n = 100_000
    x = spec.sample(np.random.default_rng(7), n)
    assert x.shape == (n,)
    xs = np.sort(x)
    F = np.asarray(spec.cdf(xs))
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    d = max(np.max(ecdf_hi - F), np.max(F - ecdf_lo))
    assert d <= 1.63 / math.sqrt(n)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sample_empty(name):
    assert sample(FAMILIES[name], np.random.default_rng(0), 0).shape == (0,)


class TestClosedForms:
    def test_normal_density_at_zero(self):
        assert pdf(StandardNormal(), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)

    def test_spike_peak(self):
        spike = SpikeTriangle(5000, 0.5, 1.2)
        h = 1.2 * 5000 ** -0.5
        assert pdf(spike, h) == pytest.approx(5000 ** 0.5 / 1.2, rel=1e-12)
        assert pdf(spike, h) == pytest.approx(58.926, abs=1e-3)
        assert cdf(spike, h) == pytest.approx(0.5, abs=1e-15)
        assert pdf(spike, 2.5 * h) == 0.0

    def test_uniform(self):
        assert pdf(Uniform01(), 0.5) == 1.0
        assert pdf(Uniform01(), 1.5) == 0.0
        assert quantile(Uniform01(), 0.3) == pytest.approx(0.3, abs=1e-15)

    def test_cdf_symmetry_points(self):
        assert cdf(StandardNormal(), 0.0) == 0.5
        assert quantile(StandardNormal(), 0.5) == 0.0

    def test_cauchy_cdf_exact(self):
        assert abs(cdf(StudentT(1), 1.0) - 0.75) <= 1e-12

    def test_t10_quantile_against_quadrature(self):
        # independent oracle: bisection on the numerically integrated t10 density
        dens = lambda t: math.exp(math.lgamma(5.5) - math.lgamma(5.0)) / math.sqrt(10 * math.pi) * (1 + t * t / 10) ** -5.5
        F = lambda x: 0.5 + integrate.quad(dens, 0.0, x, epsabs=1e-14, epsrel=1e-14)[0]
        lo, hi = 2.0, 2.5
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if F(mid) < 0.975 else (lo, mid)
        assert quantile(StudentT(10), 0.975) == pytest.approx(0.5 * (lo + hi), abs=1e-9)
        assert quantile(StudentT(10), 0.975) == pytest.approx(2.2281, abs=1e-4)

    def test_real_df_matches_reference(self):
        x = np.linspace(-8, 8, 41)
        for d in (0.7, 2.5, 7.3, 150.0):
            assert np.allclose(StudentT(d).cdf(x), stats.t.cdf(x, d), rtol=1e-10, atol=1e-14)

    def test_t_deep_tail_precision(self):
        assert StudentT(5).sf(60.0) == pytest.approx(stats.t.sf(60.0, 5), rel=1e-9)

    def test_gg2_is_gaussian(self):
        gg = GeneralizedGaussian(2.0, 0.0)
        x = np.linspace(-5, 5, 101)
        assert np.allclose(gg.pdf(x), stats.norm.pdf(x), rtol=1e-12)
        assert np.allclose(gg.cdf(x), stats.norm.cdf(x), rtol=1e-12, atol=1e-15)

    def test_gg1_is_laplace(self):
        gg = GeneralizedGaussian(1.0, 0.5)
        x = np.linspace(-5, 5, 101)
        assert np.allclose(gg.pdf(x), stats.laplace.pdf(x, loc=0.5), rtol=1e-12)


def test_location_scale_exact():
    base = StudentT(4)
    ls = LocationScale(base, 2.0, 0.5)
    x = np.linspace(-3, 6, 37)
    assert np.array_equal(ls.cdf(x), base.cdf((x - 2.0) / 0.5))


def test_mean_of_large_sample():
    n = 10**6
    x = StandardNormal().sample(np.random.default_rng(3), n)
    assert abs(x.mean()) < 4 / math.sqrt(n)


def test_spike_sample_support():
    spike = SpikeTriangle(5000, 0.5, 1.2)
    x = spike.sample(np.random.default_rng(1), 10**5)
    assert x.min() >= 0 and x.max() <= 2 * 1.2 * 5000 ** -0.5


@pytest.mark.parametrize(
    "factory",
    [
        lambda: Normal(0.0, 0.0),
        lambda: Normal(0.0, -1.0),
        lambda: StudentT(0.0),
        lambda: GeneralizedGaussian(-1.0, 0.0),
        lambda: SpikeTriangle(5000, 1.2, 1.0),
        lambda: SpikeTriangle(5000, 0.5, 100.0),
        lambda: SpikeTriangle(0, 0.5, 1.0),
        lambda: LocationScale(StandardNormal(), 0.0, 0.0),
        lambda: FiniteMixture([0.5, 0.6], [StandardNormal(), StandardNormal()]),
        lambda: FiniteMixture([1.2, -0.2], [StandardNormal(), StandardNormal()]),
        lambda: TwoGroupModel(1.5, StandardNormal(), StandardNormal()),
    ],
)
def test_invalid_parameters(factory):
    with pytest.raises(ParameterError):
        factory()


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_domain(u):
    with pytest.raises(DomainError):
        quantile(StudentT(3), u)


class TestTwoGroup:
    def test_degenerate_weights(self):
        x = np.linspace(-4, 6, 51)
        alt = Normal(2, 1)
        assert np.array_equal(mixture_cdf(TwoGroupModel(0.0, StandardNormal(), alt), x), StandardNormal().cdf(x))
        assert np.array_equal(mixture_cdf(TwoGroupModel(1.0, StandardNormal(), alt), x), alt.cdf(x))
        assert np.array_equal(mixture_pdf(TwoGroupModel(1.0, StandardNormal(), alt), x), alt.pdf(x))

    def test_case_one_cdf_by_quadrature(self):
        pi1 = 5000 ** -0.3
        alt = FiniteMixture([0.9, 0.1], [Normal(3.1, 0.7), Normal(-3.1, 0.7)])
        model = TwoGroupModel(pi1, StandardNormal(), alt)
        val = integrate.quad(lambda t: float(mixture_pdf(model, t)), -np.inf, 0.0, epsabs=1e-13)[0]
        assert mixture_cdf(model, 0.0) == pytest.approx(val, abs=1e-6)

    def test_gaussian_lr_closed_form(self):
        model = TwoGroupModel(0.1, StandardNormal(), Normal(2, 1))
        assert likelihood_ratio(model, 0.0) == pytest.approx(math.exp(-2), rel=1e-12)
        assert likelihood_ratio(model, 2.0) == pytest.approx(math.exp(2), rel=1e-12)

    def test_spike_lr(self):
        model = TwoGroupModel(5000 ** -0.2, Uniform01(), SpikeTriangle(5000, 0.5, 1.2))
        assert likelihood_ratio(model, 1.2 * 5000 ** -0.5) == pytest.approx(58.926, abs=1e-3)

    def test_lr_vanishes_in_tail(self):
        model = TwoGroupModel(0.1, StandardNormal(), Normal(1.5, 0.8))
        assert likelihood_ratio(model, 20.0) < 1e-12

    def test_lr_outside_null_support(self):
        model = TwoGroupModel(0.1, Uniform01(), Normal(0.5, 1.0))
        assert likelihood_ratio(model, 2.0) == math.inf
        with pytest.raises(UndefinedPointError):
            likelihood_ratio(TwoGroupModel(0.1, Uniform01(), Uniform01()), 2.0)


@settings(max_examples=60, deadline=None)
@given(
    mu=st.floats(-5, 5),
    sigma=st.floats(0.1, 5),
    u=st.floats(1e-6, 1 - 1e-6),
)
def test_normal_roundtrip_property(mu, sigma, u):
    d = Normal(mu, sigma)
    assert float(d.cdf(d.quantile(u))) == pytest.approx(u, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(df=st.floats(0.3, 500), u=st.floats(1e-6, 1 - 1e-6))
def test_t_roundtrip_property(df, u):
    d = StudentT(df)
    assert float(d.cdf(d.quantile(u))) == pytest.approx(u, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(gamma=st.floats(0.3, 8), mu=st.floats(-3, 3), u=st.floats(1e-6, 1 - 1e-6))
def test_gg_roundtrip_property(gamma, mu, u):
    d = GeneralizedGaussian(gamma, mu)
    assert float(d.cdf(d.quantile(u))) == pytest.approx(u, abs=1e-10)
