import numpy as np
import pytest

from stablefield.errors import DomainError
from stablefield.point_process import (PointPattern, Region, area, block_membership, coordinate_columns, erode,
                                       restrict, sample_prm)
from stablefield.statistics import ks_test


def test_region_areas():
    assert area(Region(sides=(10, 10))) == pytest.approx(100.0)
    assert area(Region(sides=(5, 20))) == pytest.approx(100.0)
    assert area(Region(sides=(1, 1, 1), scale=3)) == pytest.approx(27.0)


@pytest.mark.parametrize('sides,scale', [((0.0, 1.0), 1.0), ((1.0, -2.0), 1.0), ((1.0, 1.0), 0.0)])
def test_region_rejects_degenerate_boxes(sides, scale):
    with pytest.raises(DomainError):
        Region(sides=sides, scale=scale)


def test_region_dict_round_trip_keeps_origin():
    region = Region(sides=(2.0, 3.0), scale=2.0, origin=(1.0, -1.0))
    assert Region.from_dict(region.to_dict()) == region
    np.testing.assert_allclose(region.upper, [5.0, 5.0])
    np.testing.assert_allclose(region.center, [3.0, 2.0])


def test_coordinate_columns():
    assert coordinate_columns(1) == ['x']
    assert coordinate_columns(2) == ['x', 'y']
    assert coordinate_columns(3) == ['x1', 'x2', 'x3']


def test_erode_square():
    erosion = erode(Region(sides=(10, 10)), 0.2)
    np.testing.assert_allclose(erosion.block.lengths, [2.0, 2.0])
    np.testing.assert_allclose(erosion.anchors.lengths, [8.0, 8.0])
    assert area(erosion.anchors) == pytest.approx(64.0)


def test_erode_rectangle():
    erosion = erode(Region(sides=(5, 20)), 0.4)
    np.testing.assert_allclose(erosion.block.lengths, [2.0, 8.0])
    np.testing.assert_allclose(erosion.anchors.lengths, [3.0, 12.0])


def test_erode_small_block_keeps_nearly_full_anchor_set():
    region = Region(sides=(10, 10))
    assert area(erode(region, 1e-6).anchors) == pytest.approx(area(region), rel=1e-4)


@pytest.mark.parametrize('c', [0.0, 1.0, -0.1])
def test_erode_rejects_ratio_outside_unit_interval(c):
    with pytest.raises(DomainError):
        erode(Region(sides=(10, 10)), c)


def test_point_pattern_rejects_outside_points():
    with pytest.raises(DomainError):
        PointPattern(points=[(11.0, 1.0)], region=Region(sides=(10, 10)))


def test_point_pattern_does_not_alias_input():
    points = np.array([[1.0, 2.0]])
    pattern = PointPattern(points=points, region=Region(sides=(10, 10)))
    points[0, 0] = 9.0
    assert pattern.points[0, 0] == 1.0
    assert not pattern.points.flags.writeable


def test_prm_count_moments():
    region = Region(sides=(10, 10))
    rng = np.random.default_rng(11)
    counts = np.array([sample_prm(region, 1.0, rng).count for _ in range(10_000)])
    assert 99.7 <= counts.mean() <= 100.3
    assert 94.0 <= counts.var() <= 106.0


def test_prm_disjoint_halves_uncorrelated():
    region = Region(sides=(10, 10))
    rng = np.random.default_rng(12)
    left, right = [], []
    for _ in range(10_000):
        points = sample_prm(region, 1.0, rng).points
        left.append(np.sum(points[:, 0] < 5.0))
        right.append(np.sum(points[:, 0] >= 5.0))
    assert abs(np.corrcoef(left, right)[0, 1]) < 0.03


def test_prm_points_stay_inside_shifted_region():
    region = Region(sides=(2.0, 3.0), origin=(-5.0, 4.0))
    pattern = sample_prm(region, 5.0, np.random.default_rng(13))
    assert pattern.count > 0
    assert np.all(pattern.points >= region.lower)
    assert np.all(pattern.points < region.upper)


def test_prm_rejects_nonpositive_intensity():
    with pytest.raises(DomainError):
        sample_prm(Region(sides=(1, 1)), 0.0, np.random.default_rng(0))


def test_block_membership_is_half_open():
    points = np.array([[0.0, 0.0], [1.0, 0.5], [2.0, 0.5], [0.5, 2.0]])
    membership = block_membership(points, np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1.0, 1.0]))
    np.testing.assert_array_equal(membership, [[True, False, False, False],
                                               [False, True, False, False]])


def test_restrict_full_block_is_identity():
    region = Region(sides=(10, 10))
    pattern = sample_prm(region, 1.0, np.random.default_rng(14))
    sub = restrict(pattern, region.lower, region)
    np.testing.assert_array_equal(sub.points, pattern.points)


def test_restrict_empty_pattern():
    region = Region(sides=(10, 10))
    empty = PointPattern(points=np.empty((0, 2)), region=region)
    assert restrict(empty, (1.0, 1.0), Region(sides=(2.0, 2.0))).count == 0


def test_restrict_hand_fixture():
    region = Region(sides=(10, 10))
    points = [(1.5, 1.5), (2.9, 1.0), (3.0, 2.0), (0.5, 0.5), (7.0, 7.0)]
    sub = restrict(PointPattern(points=points, region=region), (1.0, 1.0), Region(sides=(2.0, 2.0)))
    np.testing.assert_array_equal(sub.points, [[1.5, 1.5], [2.9, 1.0]])
    np.testing.assert_allclose(sub.region.lower, [1.0, 1.0])


def test_restrict_rejects_block_leaving_region():
    region = Region(sides=(10, 10))
    pattern = PointPattern(points=[(1.0, 1.0)], region=region)
    with pytest.raises(DomainError):
        restrict(pattern, (9.0, 9.0), Region(sides=(2.0, 2.0)))


def test_point_pattern_rejects_non_finite_coordinates():
    with pytest.raises(DomainError):
        PointPattern(points=[(1.0, np.nan)], region=Region(sides=(10, 10)))
    with pytest.raises(DomainError):
        PointPattern(points=[(np.inf, 1.0)], region=Region(sides=(10, 10)))


def test_restrict_is_additive_over_split_blocks():
    region = Region(sides=(10, 10))
    pattern = sample_prm(region, 3.0, np.random.default_rng(15))
    # the point on x = 4 belongs to the right half only
    pattern = PointPattern(points=np.vstack([pattern.points, [[4.0, 3.0]]]), region=region, intensity=3.0)
    whole = restrict(pattern, (2.0, 1.0), Region(sides=(4.0, 5.0)))
    left = restrict(pattern, (2.0, 1.0), Region(sides=(2.0, 5.0)))
    right = restrict(pattern, (4.0, 1.0), Region(sides=(2.0, 5.0)))
    assert whole.count == left.count + right.count
    merged = np.vstack([left.points, right.points])
    np.testing.assert_array_equal(np.sort(merged, axis=0), np.sort(whole.points, axis=0))


def test_sub_box_counts_are_poisson():
    region = Region(sides=(10, 10))
    rng = np.random.default_rng(16)
    block = Region(sides=(3.0, 3.0))
    counts = [restrict(sample_prm(region, 1.0, rng), (2.0, 5.0), block).count for _ in range(2000)]
    reference = np.random.default_rng(17).poisson(9.0, size=2000)
    assert ks_test(counts, reference, level=0.01).passed
