import math

import numpy as np
import pytest

from stablefield.errors import DegenerateLimitError, DomainError
from stablefield.limit_theory import (ORACLE_QUANTITIES, PowerMode, codifference_identity_gap, evaluate_oracles,
                                      gaussian_limit_variance, increment_power_bound_holds, limit_params,
                                      limit_scale_mean, limit_scale_variance, poisson_functional_moment)
from stablefield.random_field import gaussian_filter, indicator_filter, zero_filter

SQUARE_MOMENT = (2.0 * math.pi) ** 2 + math.pi


@pytest.mark.parametrize('mode', list(PowerMode))
def test_zero_filter_moments_vanish(mode):
    estimate = poisson_functional_moment(zero_filter(), 1.0, 1.5, mode, 1000, np.random.default_rng(0))
    assert estimate.estimate == 0.0
    assert estimate.std_error == 0.0


@pytest.mark.parametrize('r', [0.5, 1.0, 2.0])
def test_square_mode_matches_closed_form(r):
    estimate = poisson_functional_moment(gaussian_filter(), r, 2.0, PowerMode.SQUARE, 20_000,
                                         np.random.default_rng(1))
    expected = (2.0 * math.pi * r) ** 2 + math.pi * r
    assert abs(estimate.estimate - expected) < 4.0 * estimate.std_error


def test_abs_alpha_mode_at_two_equals_square_mode():
    square = poisson_functional_moment(gaussian_filter(), 1.0, 2.0, PowerMode.SQUARE, 5000,
                                       np.random.default_rng(2))
    absolute = poisson_functional_moment(gaussian_filter(), 1.0, 2.0, PowerMode.MEAN_ABS_ALPHA, 5000,
                                         np.random.default_rng(2))
    assert absolute.estimate == pytest.approx(square.estimate, rel=1e-12)


def test_moment_does_not_depend_on_worker_count():
    single = poisson_functional_moment(indicator_filter(1), 2.0, 1.5, PowerMode.MEAN_ABS_ALPHA, 12_000,
                                       np.random.default_rng(3), workers=1, chunk_draws=1000)
    threaded = poisson_functional_moment(indicator_filter(1), 2.0, 1.5, PowerMode.MEAN_ABS_ALPHA, 12_000,
                                         np.random.default_rng(3), workers=4, chunk_draws=1000)
    assert single == threaded


def test_moment_input_validation():
    with pytest.raises(DomainError):
        poisson_functional_moment(gaussian_filter(), 0.0, 1.5, PowerMode.SQUARE, 1000, np.random.default_rng(0))
    with pytest.raises(DomainError):
        poisson_functional_moment(gaussian_filter(), 1.0, 1.5, PowerMode.SQUARE, 10, np.random.default_rng(0))


def test_limit_scale_mean_gaussian_at_two():
    estimate = limit_scale_mean(gaussian_filter(), 1.0, 2.0, 20_000, np.random.default_rng(4))
    assert abs(estimate.estimate - math.sqrt(SQUARE_MOMENT)) < 4.0 * estimate.std_error


def test_limit_scale_mean_homogeneous_in_filter():
    psi = indicator_filter(1)
    base = limit_scale_mean(psi, 1.0, 1.5, 2000, np.random.default_rng(5))
    doubled = limit_scale_mean(psi.scaled(2.0), 1.0, 1.5, 2000, np.random.default_rng(5))
    assert doubled.estimate == pytest.approx(2.0 * base.estimate, rel=1e-12)


def test_limit_scale_mean_zero_filter():
    assert limit_scale_mean(zero_filter(), 1.0, 1.5, 500, np.random.default_rng(6)).estimate == 0.0


def test_limit_scale_variance_point_mass_at_two():
    with pytest.raises(DegenerateLimitError) as excinfo:
        limit_scale_variance(gaussian_filter(), 1.5, 2.0, 1000, np.random.default_rng(7))
    assert excinfo.value.point_mass == pytest.approx(2.0 * 1.5 * math.pi, rel=1e-8)


def test_limit_scale_variance_zero_filter():
    assert limit_scale_variance(zero_filter(), 1.0, 1.2, 500, np.random.default_rng(8)).estimate == 0.0


def test_limit_scale_variance_reproducible_across_seeds():
    first = limit_scale_variance(gaussian_filter(), 1.0, 1.0, 5000, np.random.default_rng(9))
    second = limit_scale_variance(gaussian_filter(), 1.0, 1.0, 5000, np.random.default_rng(10))
    assert first.estimate > 0.0
    combined_se = math.hypot(first.std_error, second.std_error)
    assert abs(first.estimate - second.estimate) < 4.0 * combined_se


def test_gaussian_limit_variance_zero_filter():
    assert gaussian_limit_variance(zero_filter(1)) == 0.0


@pytest.mark.parametrize('r', [1.0, 2.0])
def test_gaussian_limit_variance_indicator_filter(r):
    # tau is the tent 2(1 - |t|)+, so r * 2 + 2
    assert gaussian_limit_variance(indicator_filter(1), r) == pytest.approx(2.0 * r + 2.0, rel=1e-3)


@pytest.mark.slow
def test_gaussian_limit_variance_gaussian_filter():
    value = gaussian_limit_variance(gaussian_filter())
    assert value == pytest.approx(8.0 * math.pi ** 2 + 2.0 * math.pi, rel=1e-6)
    scale = limit_scale_mean(gaussian_filter(), 1.0, 2.0, 20_000, np.random.default_rng(11))
    assert abs(value - 2.0 * scale.estimate ** 2) < 4.0 * 4.0 * scale.estimate * scale.std_error


def test_codifference_gap_vanishes_for_zero_filter():
    gap = codifference_identity_gap(zero_filter(1), 1.5, 500, np.random.default_rng(12))
    assert gap.gap == 0.0


def test_codifference_gap_closes_at_two():
    gap = codifference_identity_gap(indicator_filter(1), 2.0, 20_000, np.random.default_rng(13))
    assert gap.rhs == pytest.approx(2.0, abs=1e-8)
    assert gap.gap < 4.0 * gap.std_error


def test_codifference_gap_opens_below_two():
    gap = codifference_identity_gap(indicator_filter(1), 1.5, 20_000, np.random.default_rng(14))
    assert gap.rhs == pytest.approx(2.0, abs=1e-8)
    assert gap.lhs.estimate == pytest.approx(1.3727, abs=0.05)
    assert gap.gap > 5.0 * gap.std_error


def test_increment_power_bound_fixtures():
    assert increment_power_bound_holds(0.7, 0.7, 1.3)
    assert increment_power_bound_holds(1.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        increment_power_bound_holds(1.0, 0.0, 2.5)
    with pytest.raises(DomainError):
        increment_power_bound_holds(1.0, 0.0, 1.5, form='loose')


def test_increment_power_bound_sweep():
    rng = np.random.default_rng(15)
    a = rng.uniform(-100.0, 100.0, 100_000)
    b = rng.uniform(-100.0, 100.0, 100_000)
    alpha = 2.0 - rng.uniform(0.0, 2.0, 100_000)
    assert np.all(increment_power_bound_holds(a, b, alpha))


def test_limit_params_at_two_reports_point_mass():
    params = limit_params(gaussian_filter(), 1.0, 2.0, 2000, np.random.default_rng(16))
    assert params.scale_variance is None
    assert params.variance_point_mass == pytest.approx(2.0 * math.pi, rel=1e-8)
    assert params.phi == pytest.approx(2.0 * math.pi, rel=1e-9)
    assert params.phi2 == pytest.approx(math.sqrt(math.pi), rel=1e-9)
    assert params.to_dict()['mc_draws'] == 2000


def test_evaluate_oracles_records():
    records = evaluate_oracles(['c_alpha', 'sigma_psi', 'scale_variance'], gaussian_filter(), 1.5,
                               draws=500, seed=3)
    assert [r['quantity'] for r in records] == ['c_alpha', 'sigma_psi', 'scale_variance']
    assert records[1]['estimate'] == pytest.approx((2.0 * math.pi / 1.5) ** (2.0 / 3.0), rel=1e-8)
    assert records[2]['draws'] == 500 and records[2]['seed'] == 3
    assert set(records[0]) == {'quantity', 'estimate', 'std_error', 'draws', 'seed'}


def test_evaluate_oracles_degenerate_and_unknown():
    records = evaluate_oracles(['scale_variance'], gaussian_filter(), 2.0, draws=500, seed=1)
    assert records[0]['degenerate'] is True
    with pytest.raises(DomainError):
        evaluate_oracles(['bogus'], gaussian_filter(), 1.5)
    assert 'codifference_gap' in ORACLE_QUANTITIES


def test_statement_form_fails_for_small_arguments():
    assert increment_power_bound_holds(0.01, 0.009, 1.5, form='proof')
    assert not increment_power_bound_holds(0.01, 0.009, 1.5, form='statement')
    np.testing.assert_array_equal(increment_power_bound_holds([3.0, 0.01], [2.5, 0.009], 1.5, form='statement'),
                                  [True, False])
