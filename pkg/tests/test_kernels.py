import numpy as np
import pytest
import scipy.integrate
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkes_multiscale import (
    ExponentialKernel,
    ParameterError,
    PowerLawKernel,
    TabulatedKernel,
    kernel_eval,
    kernel_l1_norm,
)
from hawkes_multiscale.kernels import (
    kernel_abs_norm,
    kernel_mass_beyond,
    kernel_support_horizon,
    kernel_upper_bound_after,
    offset_cdf,
    sample_offsets,
)

BENCH = PowerLawKernel(amplitude=0.06, offset=0.005, exponent=1.3)


class TestEval:
    def test_powerlaw_at_zero(self):
        assert kernel_eval(BENCH, 0.0) == pytest.approx(0.06 * 0.005 ** -1.3, rel=1e-14)
        assert kernel_eval(BENCH, 0.0) == pytest.approx(58.815, abs=0.01)

    def test_exponential_at_zero(self):
        assert kernel_eval(ExponentialKernel(0.5, 2.0), 0.0) == 1.0

    def test_causality(self):
        tab = TabulatedKernel((0.0, 1.0, 2.0), (1.0, -0.5, 0.0))
        for spec in (BENCH, ExponentialKernel(0.5, 2.0), tab):
            assert kernel_eval(spec, -1.0) == 0.0
            assert np.all(kernel_eval(spec, np.array([-5.0, -1e-12])) == 0.0)

    def test_tabulated_interpolation(self):
        tab = TabulatedKernel((0.0, 2.0), (0.0, 4.0))
        assert kernel_eval(tab, 1.0) == pytest.approx(2.0)
        assert kernel_eval(tab, 3.0) == 0.0

    @given(
        st.floats(0.01, 10),
        st.floats(1e-4, 10),
        st.floats(1.05, 4),
        st.floats(-2, 50),
    )
    def test_powerlaw_formula(self, a, c, g, t):
        spec = PowerLawKernel(a, c, g)
        expect = a / (c + t) ** g if t >= 0 else 0.0
        assert kernel_eval(spec, t) == pytest.approx(expect, rel=1e-12, abs=1e-300)


class TestNorm:
    def test_powerlaw_closed_form(self):
        n = kernel_l1_norm(BENCH)
        assert n == pytest.approx(0.06 * 0.005 ** (1 - 1.3) / 0.3, rel=1e-12)
        assert round(n, 2) == 0.98

    def test_exponential_norm_is_branching(self):
        assert kernel_l1_norm(ExponentialKernel(0.37, 9.0)) == 0.37

    def test_powerlaw_mass_split_over_decades(self):
        # ~5% of the mass below 1 ms and ~5% beyond 100 s
        below = kernel_l1_norm(BENCH) - kernel_mass_beyond(BENCH, 1e-3)
        beyond = kernel_mass_beyond(BENCH, 100.0)
        assert below == pytest.approx(0.05, abs=0.003)
        assert beyond == pytest.approx(0.05, abs=0.001)

    def test_divergent_norm_raises(self):
        with pytest.raises(ParameterError):
            kernel_l1_norm(PowerLawKernel(1.0, 0.1, 1.0))
        with pytest.raises(ParameterError):
            kernel_l1_norm(PowerLawKernel(1.0, 0.1, 0.7))

    def test_tabulated_signed_norm(self):
        tab = TabulatedKernel((0.0, 4.0), (-0.1, 0.0))
        assert kernel_l1_norm(tab) == pytest.approx(-0.2)
        assert kernel_abs_norm(tab) == pytest.approx(0.2)

    def test_tabulated_abs_norm_with_sign_change(self):
        tab = TabulatedKernel((0.0, 1.0, 2.0), (1.0, -1.0, 0.0))
        # crosses zero at 0.5: signed areas 0.25, -0.25, -0.5
        assert kernel_l1_norm(tab) == pytest.approx(-0.5, rel=1e-12)
        assert kernel_abs_norm(tab) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize(
        "spec",
        [
            PowerLawKernel(0.3, 0.02, 1.7),
            ExponentialKernel(0.8, 3.0),
            TabulatedKernel((0.1, 0.5, 2.0, 3.0), (0.2, 1.0, -0.3, 0.0)),
        ],
    )
    def test_norm_against_quadrature(self, spec):
        # log-spaced panels keep the quadrature accurate on heavy tails
        panels = np.concatenate([[0.0], np.logspace(-6, 10, 81)])
        num = sum(
            scipy.integrate.quad(lambda t: kernel_eval(spec, t), a, b, limit=200)[0]
            for a, b in zip(panels[:-1], panels[1:])
        )
        assert kernel_l1_norm(spec) == pytest.approx(num, rel=1e-5, abs=1e-9)

    def test_mass_beyond_matches_quadrature(self):
        num, _ = scipy.integrate.quad(lambda t: kernel_eval(BENCH, t), 2.5, np.inf, limit=400)
        assert kernel_mass_beyond(BENCH, 2.5) == pytest.approx(num, rel=1e-7)

    def test_support_horizon(self):
        for spec in (BENCH, ExponentialKernel(0.4, 1.3)):
            h = kernel_support_horizon(spec, 1e-4)
            assert kernel_mass_beyond(spec, h) <= 1e-4 * kernel_abs_norm(spec) * (1 + 1e-9)


class TestSampling:
    def test_powerlaw_offsets_match_cdf(self):
        # empirical CDF of 1e6 draws vs F(t) = 1 - (c/(c+t))^(gamma-1)
        rng = np.random.default_rng(2024)
        draws = sample_offsets(BENCH, rng, 1_000_000)
        c, g = BENCH.offset, BENCH.exponent
        stat = scipy.stats.kstest(draws, lambda t: 1 - (c / (c + t)) ** (g - 1)).statistic
        assert stat < 0.002

    def test_exponential_offsets(self):
        rng = np.random.default_rng(7)
        draws = sample_offsets(ExponentialKernel(0.5, 2.0), rng, 200_000)
        stat = scipy.stats.kstest(draws, scipy.stats.expon(scale=0.5).cdf).statistic
        assert stat < 0.004

    def test_tabulated_offsets(self):
        spec = TabulatedKernel((0.0, 1.0, 3.0), (2.0, 1.0, 0.0))
        rng = np.random.default_rng(11)
        draws = sample_offsets(spec, rng, 200_000)
        stat = scipy.stats.kstest(draws, lambda t: offset_cdf(spec, t)).statistic
        assert stat < 0.004

    def test_negative_kernel_rejected(self):
        with pytest.raises(ParameterError):
            sample_offsets(TabulatedKernel((0.0, 1.0), (-1.0, 0.0)), np.random.default_rng(0), 10)


class TestUpperBound:
    def test_monotone_families_bound_is_value(self):
        lags = np.array([0.0, 0.1, 3.0])
        assert np.allclose(kernel_upper_bound_after(BENCH, lags), kernel_eval(BENCH, lags))

    @given(st.floats(0, 5), st.floats(0, 5))
    @settings(max_examples=50)
    def test_bound_dominates_later_values(self, lag, ahead):
        spec = TabulatedKernel((0.0, 0.5, 1.0, 4.0), (0.1, 2.0, -1.0, 0.0))
        bound = kernel_upper_bound_after(spec, lag)
        later = kernel_eval(spec, lag + ahead)
        assert bound >= later - 1e-12


class TestValidation:
    def test_bad_params(self):
        with pytest.raises(ParameterError):
            PowerLawKernel(1.0, 0.0, 1.3)
        with pytest.raises(ParameterError):
            ExponentialKernel(0.5, 0.0)
        with pytest.raises(ParameterError):
            TabulatedKernel((0.0,), (1.0,))
        with pytest.raises(ParameterError):
            TabulatedKernel((1.0, 0.5), (1.0, 1.0))
        with pytest.raises(ParameterError):
            TabulatedKernel((-0.5, 0.5), (1.0, 1.0))
