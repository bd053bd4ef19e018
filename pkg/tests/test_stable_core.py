import math

import numpy as np
import pytest
from scipy import integrate, special

from stablefield.errors import DomainError
from stablefield.stable_core import (StableParams, abs_moment_gaussian, c_alpha, sample_stable,
                                     sine_integral)
from stablefield.statistics import ks_test


@pytest.mark.parametrize('alpha,beta,scale', [(0.0, 0.0, 1.0), (2.5, 0.0, 1.0), (1.5, 1.2, 1.0),
                                              (1.5, 0.0, -1.0)])
def test_params_validation(alpha, beta, scale):
    with pytest.raises(DomainError):
        StableParams(alpha=alpha, beta=beta, scale=scale)


def test_gaussian_case_ignores_skewness():
    params = StableParams(alpha=2.0, beta=0.7)
    assert params.is_gaussian
    assert params.effective_beta == 0.0


def test_gaussian_variance_is_twice_scale_squared():
    draws = sample_stable(StableParams(alpha=2.0), np.random.default_rng(1), size=100_000)
    assert 1.94 <= np.var(draws) <= 2.06


def test_symmetric_median_near_zero():
    draws = sample_stable(StableParams(alpha=1.5), np.random.default_rng(2), size=100_000)
    assert -0.02 <= np.median(draws) <= 0.02


def test_scale_equivariance_on_shared_stream():
    unit = sample_stable(StableParams(alpha=1.5), np.random.default_rng(3), size=1000)
    tripled = sample_stable(StableParams(alpha=1.5, scale=3.0), np.random.default_rng(3), size=1000)
    np.testing.assert_allclose(tripled, 3.0 * unit, rtol=1e-14)


def test_single_draw_is_float():
    assert isinstance(sample_stable(StableParams(alpha=1.0), np.random.default_rng(4)), float)


def test_cauchy_case_matches_cauchy_law():
    draws = sample_stable(StableParams(alpha=1.0), np.random.default_rng(5), size=20_000)
    reference = np.random.default_rng(6).standard_cauchy(20_000)
    assert ks_test(draws, reference, level=0.01).passed


def test_totally_skewed_draws_are_positive_below_one():
    draws = sample_stable(StableParams(alpha=0.5, beta=1.0), np.random.default_rng(7), size=5000)
    assert np.all(draws > 0.0)


def test_gaussian_sampler_passes_ks_against_normal():
    draws = sample_stable(StableParams(alpha=2.0, scale=1.5), np.random.default_rng(8), size=100_000)
    reference = np.random.default_rng(9).normal(scale=math.sqrt(2.0) * 1.5, size=100_000)
    assert ks_test(draws, reference, level=0.01).passed


@pytest.mark.parametrize('alpha', [0.3, 0.7, 1.0, 1.3, 1.7])
def test_c_alpha_inverts_sine_integral(alpha):
    assert c_alpha(alpha) * sine_integral(alpha) == pytest.approx(1.0, abs=1e-6)


def test_c_alpha_closed_forms():
    assert c_alpha(1.0) == pytest.approx(2.0 / math.pi)
    assert c_alpha(0.5) == pytest.approx(0.5 / (special.gamma(1.5) * math.cos(math.pi / 4)), rel=1e-12)
    assert c_alpha(1.5) == pytest.approx(1.0 / sine_integral(1.5), rel=1e-8)


@pytest.mark.parametrize('alpha', [0.0, 2.0])
def test_c_alpha_domain(alpha):
    with pytest.raises(DomainError):
        c_alpha(alpha)


def test_abs_moment_gaussian_values():
    assert abs_moment_gaussian(2.0) == pytest.approx(1.0)
    assert abs_moment_gaussian(1.0) == pytest.approx(math.sqrt(2.0 / math.pi))
    density = lambda x: abs(x) ** 1.5 * math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    expected, _ = integrate.quad(density, -np.inf, np.inf)
    assert abs_moment_gaussian(1.5) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize('alpha', [0.3, 1.0, 1.7])
def test_abs_moment_gaussian_matches_monte_carlo(alpha):
    g = np.random.default_rng(10).standard_normal(1_000_000)
    values = np.abs(g) ** alpha
    se = values.std(ddof=1) / math.sqrt(values.size)
    assert abs(values.mean() - abs_moment_gaussian(alpha)) < 4.0 * se
