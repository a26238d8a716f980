import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grenander.density_models import (
    DomainError,
    PiecewiseConstant,
    PowerLaw,
    TruncatedExponential,
    Uniform,
    parse_model,
)
from oracles import log_quadrature

from conftest import MODELS


class TestPointValues:
    def test_uniform_pdf(self):
        assert Uniform().pdf(0.7) == 1.0

    def test_power_law_pdf_at_one(self):
        assert PowerLaw(0.75).pdf(1.0) == pytest.approx(0.25, abs=1e-15)

    def test_power_law_pdf_interior(self):
        # 0.5 * 0.25**-0.5 = 0.5 * 2
        assert PowerLaw(0.5).pdf(0.25) == pytest.approx(1.0, abs=1e-15)

    def test_power_law_cdf(self):
        # 0.0625**0.25 = 0.5
        assert PowerLaw(0.75).cdf(0.0625) == pytest.approx(0.5, abs=1e-15)

    def test_quantiles(self):
        assert Uniform().quantile(0.3) == 0.3
        assert PowerLaw(0.5).quantile(0.5) == pytest.approx(0.25, abs=1e-15)

    def test_moments(self):
        assert Uniform().weighted_moment_1(0.0, 1.0) == 0.5
        assert PowerLaw(0.5).weighted_moment_1(0.0, 1.0) == pytest.approx(1 / 3, rel=1e-15)
        assert Uniform().weighted_moment_2(0.0, 1.0) == 0.5
        assert PowerLaw(0.75).weighted_moment_2(0.0, 1.0) == pytest.approx(0.125, rel=1e-15)

    def test_power_law_blows_up_at_zero(self):
        f = PowerLaw(0.75)
        vals = [f.pdf(x) for x in (1e-3, 1e-6, 1e-9)]
        assert vals[0] < vals[1] < vals[2] and vals[2] > 1e5


class TestEndpoints:
    def test_cdf_and_quantile_endpoints(self, model):
        assert model.cdf(0.0) == 0.0
        assert model.cdf(1.0) == 1.0
        assert model.quantile(0.0) == 0.0
        assert model.quantile(1.0) == 1.0

    def test_empty_interval_moments(self, model):
        assert model.weighted_moment_1(0.3, 0.3) == 0.0
        assert model.weighted_moment_2(0.3, 0.3) == 0.0


class TestDomain:
    @pytest.mark.parametrize("x", [0.0, -0.1, 1.5, math.nan])
    def test_pdf_rejects(self, model, x):
        with pytest.raises(DomainError):
            model.pdf(x)

    @pytest.mark.parametrize("x", [-1e-9, 1.0 + 1e-9])
    def test_cdf_quantile_reject(self, model, x):
        with pytest.raises(DomainError):
            model.cdf(x)
        with pytest.raises(DomainError):
            model.quantile(x)

    @pytest.mark.parametrize("a,b", [(0.5, 0.4), (-0.1, 0.5), (0.2, 1.1)])
    def test_moments_reject(self, model, a, b):
        with pytest.raises(DomainError):
            model.weighted_moment_1(a, b)
        with pytest.raises(DomainError):
            model.weighted_moment_2(a, b)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
    def test_power_law_alpha_range(self, alpha):
        with pytest.raises(DomainError):
            PowerLaw(alpha)

    def test_bad_exponential_rate(self):
        with pytest.raises(DomainError):
            TruncatedExponential(0.0)

    def test_piecewise_validation(self):
        with pytest.raises(DomainError):
            PiecewiseConstant((0.5,), (0.5, 1.5))  # increasing
        with pytest.raises(DomainError):
            PiecewiseConstant((0.5,), (2.0, 1.0))  # mass 1.5
        with pytest.raises(DomainError):
            PiecewiseConstant((0.6, 0.5), (1.0, 1.0, 1.0))


class TestInvariants:
    def test_pdf_nonincreasing_on_grid(self, model):
        x = np.linspace(1e-6, 1.0, 10_000)
        f = model.pdf(x)
        assert np.all(f >= 0.0)
        assert np.all(f[:-1] >= f[1:] - 1e-12)

    def test_cdf_nondecreasing_concave(self, model):
        x = np.linspace(0.0, 1.0, 2001)
        F = model.cdf(x)
        assert np.all(np.diff(F) >= -1e-15)
        # concavity: second differences nonpositive
        assert np.all(np.diff(F, 2) <= 1e-12)

    def test_cdf_quantile_roundtrip(self, model):
        u = np.random.default_rng(0).random(1000)
        np.testing.assert_allclose(model.cdf(model.quantile(u)), u, rtol=0, atol=1e-10)

    def test_quantile_cdf_roundtrip(self, model):
        x = np.random.default_rng(1).uniform(1e-3, 1.0, 1000)
        np.testing.assert_allclose(model.quantile(model.cdf(x)), x, rtol=1e-9)

    def test_second_moment_bounded_by_half(self, model):
        assert model.weighted_moment_2(0.0, 1.0) <= 0.5 + 1e-12

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_additivity(self, p, q, r):
        a, b, c = sorted((p, q, r))
        for m in MODELS:
            for moment in (m.weighted_moment_1, m.weighted_moment_2):
                whole = moment(a, c)
                parts = moment(a, b) + moment(b, c)
                assert parts == pytest.approx(whole, rel=1e-12, abs=1e-15)

    def test_pdf_inverse_maximises_cdf_minus_line(self, model):
        x = np.linspace(0.0, 1.0, 20001)
        F = model.cdf(x)
        for s in (0.0, 0.3, 0.9, 1.0, 1.7, 4.0, 50.0):
            xs = model.pdf_inverse(s)
            best = np.max(F - s * x)
            assert model.cdf(xs) - s * xs >= best - 1e-12


EPS = 1e-60


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (0.0, 0.05), (0.1, 0.7), (0.3, 1.0), (1e-9, 0.2)])
def test_moments_match_quadrature(model, a, b):
    # quadrature above EPS, closed form on the negligible stretch below it
    lo = max(a, EPS)
    breaks = [t for t in model.breakpoints if lo < t < b]
    edges = [lo, *breaks, b]
    m1 = sum(log_quadrature(lambda x: x * model.pdf(x), p, q) for p, q in zip(edges, edges[1:]))
    m2 = sum(log_quadrature(lambda x: x * model.pdf(x) ** 2, p, q) for p, q in zip(edges, edges[1:]))
    if a < EPS:
        m1 += model.weighted_moment_1(a, EPS)
        m2 += model.weighted_moment_2(a, EPS)
    assert model.weighted_moment_1(a, b) == pytest.approx(m1, rel=1e-8)
    assert model.weighted_moment_2(a, b) == pytest.approx(m2, rel=1e-8)


class TestParse:
    def test_forms(self):
        assert parse_model("uniform") == Uniform()
        assert parse_model("powerlaw:alpha=0.75") == PowerLaw(0.75)
        assert parse_model("texp:lambda=2.0") == TruncatedExponential(2.0)
        assert parse_model("pwc:breaks=0.2,0.5;values=3,1,0.2") == PiecewiseConstant((0.2, 0.5), (3.0, 1.0, 0.2))

    def test_name_roundtrip(self, model):
        assert parse_model(model.name) == model

    def test_pwc_normalised_with_warning(self):
        with pytest.warns(UserWarning, match="rescaled"):
            m = parse_model("pwc:breaks=0.2,0.5;values=2.5,1.0,0.25")
        widths = np.diff([0.0, 0.2, 0.5, 1.0])
        assert float(np.sum(widths * np.array(m.values))) == pytest.approx(1.0, abs=1e-12)
        assert m.values[0] / m.values[1] == pytest.approx(2.5)

    @pytest.mark.parametrize("spec", ["normal", "powerlaw", "powerlaw:alpha=x", "powerlaw:alpha=2",
                                      "uniform:foo=1", "texp:lambda", "pwc:breaks=0.5;values=1,2"])
    def test_rejects(self, spec):
        with pytest.raises(DomainError):
            parse_model(spec)
