import math

import numpy as np
import pytest

from stablefield.errors import DomainError, NumericError
from stablefield.quadrature import GAUSS_ORDER, axis_rule, integrate_box, points_at_level, tensor_rule


def test_axis_rule_integrates_polynomials_exactly():
    nodes, weights = axis_rule(0.0, 2.0, level=1)
    assert len(nodes) == 2 * GAUSS_ORDER
    assert np.sum(weights) == pytest.approx(2.0)
    assert np.sum(weights * nodes ** 5) == pytest.approx(2.0 ** 6 / 6)


def test_axis_rule_splits_at_breakpoints():
    nodes, _ = axis_rule(-1.0, 1.0, level=0, breakpoints=(0.0, 5.0))
    # 5.0 lies outside and is ignored
    assert len(nodes) == 2 * GAUSS_ORDER
    assert not np.any(nodes == 0.0)
    assert np.sum(nodes < 0.0) == GAUSS_ORDER


def test_axis_rule_rejects_empty_interval():
    with pytest.raises(DomainError):
        axis_rule(1.0, 1.0, level=2)


def test_tensor_rule_shapes_and_volume():
    points, weights = tensor_rule([0.0, 0.0], [1.0, 3.0], level=1)
    assert points.shape == (points_at_level(2, 1), 2)
    assert np.sum(weights) == pytest.approx(3.0)


def test_tensor_rule_checks_breakpoint_axes():
    with pytest.raises(DomainError):
        tensor_rule([0.0, 0.0], [1.0, 1.0], level=1, breakpoints=[(0.5,)])


def test_integrate_box_gaussian_2d():
    result = integrate_box(lambda x: np.exp(-np.sum(x * x, axis=-1)), [-7.5, -7.5], [7.5, 7.5])
    assert result.value == pytest.approx(math.pi, rel=1e-9)
    assert result.error <= 1e-8


def test_integrate_box_piecewise_constant_with_breakpoints():
    indicator = lambda x: ((x[:, 0] >= 0.0) & (x[:, 0] <= 0.3)).astype(float)
    result = integrate_box(indicator, [-1.0], [1.0], breakpoints=[(0.0, 0.3)])
    assert result.value == pytest.approx(0.3, abs=1e-12)


def test_integrate_box_vector_valued():
    result = integrate_box(lambda x: np.stack([x[:, 0], x[:, 0] ** 2], axis=-1), [0.0], [1.0])
    assert result.value == pytest.approx([0.5, 1.0 / 3.0])


def test_integrate_box_reports_diagnostics_at_point_limit():
    rough = lambda x: np.sign(np.sin(40.0 * x[:, 0] * x[:, 1]))
    with pytest.raises(NumericError) as excinfo:
        integrate_box(rough, [0.0, 0.0], [3.0, 3.0], rtol=1e-12, max_points=20_000)
    assert excinfo.value.diagnostics['dimension'] == 2
    assert 'level' in str(excinfo.value)
