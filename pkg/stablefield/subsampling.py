"""
Block subsampling distributions for the mean and the confidence intervals they calibrate.

Two statistics are supported:

* known_alpha: N_sub**(1 - 1/alpha) * (mean_sub - full_mean), which needs alpha;
* self_normalized: sqrt(N_sub) * (mean_sub - full_mean) / std_sub, which does not.

Blocks with no points contribute 0. A zero subsample deviation is replaced by
``tiny_sigma``.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from stablefield.errors import DomainError
from stablefield.point_process import Erosion, block_membership, erode
from stablefield.statistics import (EmpiricalDistribution, MarkedSample, quantile, sample_mean,
                                    sample_std)

logger = logging.getLogger(__name__)

ZERO_COUNT_STAT = 0.0
RECORD_QUANTILES = (0.005, 0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975, 0.995)
# Anchors per membership matrix in build_distribution
ANCHOR_CHUNK = 256


class Method(str, Enum):
    KNOWN_ALPHA = 'known_alpha'
    SELF_NORMALIZED = 'self_normalized'


class AnchorMode(str, Enum):
    MONTE_CARLO = 'monte_carlo'
    GRID = 'grid'


@dataclass(frozen=True)
class SubsampleConfig:
    """Settings of one subsampling distribution.

    Args:
        c: Block ratio; the block is c*K_n.
        num_draws: Number M of Monte Carlo anchors.
        method: Statistic to subsample.
        alpha: Stability index, required by the known-alpha statistic.
        tiny_sigma: Replacement for a zero subsample standard deviation.
        anchor_mode: Uniform random anchors or an exhaustive grid.
        grid_points: Grid anchors per axis in grid mode.
    """
    c: float
    num_draws: int
    method: Method
    alpha: Optional[float] = None
    tiny_sigma: float = 1e-10
    anchor_mode: AnchorMode = AnchorMode.MONTE_CARLO
    grid_points: int = 2

    def __post_init__(self):
        object.__setattr__(self, 'method', Method(self.method))
        object.__setattr__(self, 'anchor_mode', AnchorMode(self.anchor_mode))
        if not 0.0 < self.c < 1.0:
            raise DomainError(f"Block ratio c must lie in (0, 1), got {self.c}")
        if self.num_draws < 1:
            raise DomainError(f"Number of anchor draws must be positive, got {self.num_draws}")
        if self.method is Method.KNOWN_ALPHA and (self.alpha is None or not 1.0 < self.alpha <= 2.0):
            raise DomainError(f"Known-alpha subsampling needs alpha in (1, 2], got {self.alpha}")
        if not self.tiny_sigma > 0.0:
            raise DomainError(f"tiny_sigma must be positive, got {self.tiny_sigma}")
        if self.grid_points < 1:
            raise DomainError(f"grid_points must be positive, got {self.grid_points}")

    def anchor_count(self, dimension: int) -> int:
        if self.anchor_mode is AnchorMode.GRID:
            return self.grid_points ** dimension
        return self.num_draws

    def to_dict(self) -> Dict[str, Any]:
        return {'c': self.c, 'num_draws': self.num_draws, 'method': self.method.value, 'alpha': self.alpha,
                'tiny_sigma': self.tiny_sigma, 'anchor_mode': self.anchor_mode.value,
                'grid_points': self.grid_points}


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: Method

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class SubsamplingDistribution:
    """Empirical law of the M subsample statistics."""
    stats: EmpiricalDistribution
    config: SubsampleConfig
    zero_count_fraction: float

    def to_record(self, intervals: Sequence[ConfidenceInterval] = ()) -> Dict[str, Any]:
        """JSON-ready record; one ci_lower/ci_upper pair per interval level."""
        record = {
            'method': self.config.method.value,
            'c': self.config.c,
            'M': self.stats.count,
            'quantiles': {f'{q:g}': quantile(self.stats, q) for q in RECORD_QUANTILES},
            'zero_count_fraction': self.zero_count_fraction,
        }
        if len(intervals) == 1:
            record['level'] = intervals[0].level
            record['ci_lower'] = intervals[0].lower
            record['ci_upper'] = intervals[0].upper
        elif intervals:
            record['ci_lower'] = {f'{ci.level:g}': ci.lower for ci in intervals}
            record['ci_upper'] = {f'{ci.level:g}': ci.upper for ci in intervals}
        return record


def subsample_stat(sub: MarkedSample, full_mean: float, config: SubsampleConfig) -> float:
    """Statistic of one block restriction, with the empty and single-point conventions."""
    n_sub = sub.count
    if n_sub == 0:
        return ZERO_COUNT_STAT
    deviation = sample_mean(sub) - full_mean
    if config.method is Method.KNOWN_ALPHA:
        return n_sub ** (1.0 - 1.0 / config.alpha) * deviation
    std = sample_std(sub)
    if std == 0.0:
        std = config.tiny_sigma
    return math.sqrt(n_sub) * deviation / std


def draw_anchors(erosion: Erosion, config: SubsampleConfig, rng: np.random.Generator) -> np.ndarray:
    """Anchor points y on the eroded region, shape (M, d)."""
    anchors = erosion.anchors
    if np.prod(anchors.lengths) <= 0.0:
        raise DomainError("Anchor set has zero volume")
    if config.anchor_mode is AnchorMode.GRID:
        axes = [np.linspace(lo, hi, config.grid_points) for lo, hi in zip(anchors.lower, anchors.upper)]
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=-1)
    return anchors.lower + rng.random((config.num_draws, anchors.dimension)) * anchors.lengths


def _chunk_stats(points: np.ndarray, centered: np.ndarray, anchors: np.ndarray, block_lengths: np.ndarray,
                 config: SubsampleConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Statistics and occupancy for one chunk of anchors; memory is O(len(anchors) * N)."""
    membership = block_membership(points, anchors, block_lengths).astype(float)
    counts = membership.sum(axis=1)
    occupied = counts > 0
    safe_counts = np.where(occupied, counts, 1.0)
    mean_dev = (membership @ centered) / safe_counts

    if config.method is Method.KNOWN_ALPHA:
        stats = safe_counts ** (1.0 - 1.0 / config.alpha) * mean_dev
    else:
        spread = (centered[None, :] - mean_dev[:, None]) ** 2
        std = np.sqrt(np.sum(spread * membership, axis=1) / safe_counts)
        std = np.where(std == 0.0, config.tiny_sigma, std)
        stats = np.sqrt(safe_counts) * mean_dev / std
    return np.where(occupied, stats, ZERO_COUNT_STAT), occupied


def build_distribution(full: MarkedSample, config: SubsampleConfig,
                       rng: np.random.Generator) -> SubsamplingDistribution:
    """Subsampling distribution over M translated blocks B + y.

    Anchors are evaluated in chunks of ``ANCHOR_CHUNK`` against the (chunk, N)
    membership matrix; the result does not depend on evaluation order.
    """
    full_mean = sample_mean(full)
    erosion = erode(full.region, config.c)
    anchors = draw_anchors(erosion, config, rng)
    centered = full.marks - full_mean

    stats = np.empty(len(anchors))
    occupied = np.empty(len(anchors), dtype=bool)
    for start in range(0, len(anchors), ANCHOR_CHUNK):
        stop = start + ANCHOR_CHUNK
        stats[start:stop], occupied[start:stop] = _chunk_stats(full.pattern.points, centered, anchors[start:stop],
                                                               erosion.block.lengths, config)

    zero_fraction = float(np.mean(~occupied))
    logger.debug(f"[SUBSAMPLE] method={config.method.value} c={config.c} M={len(anchors)} "
                 f"empty={zero_fraction:.4f}")
    return SubsamplingDistribution(stats=EmpiricalDistribution(stats), config=config,
                                   zero_count_fraction=zero_fraction)


def _check_level(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DomainError(f"Miscoverage p must lie in (0, 1), got {p}")


def known_alpha_interval(full: MarkedSample, dist: SubsamplingDistribution, p: float,
                         alpha: float) -> ConfidenceInterval:
    """(1-p) interval [mean - L(1-p/2) * N**(1/alpha-1), mean - L(p/2) * N**(1/alpha-1)]."""
    _check_level(p)
    if dist.config.method is not Method.KNOWN_ALPHA:
        raise DomainError("Known-alpha interval needs a known-alpha subsampling distribution")
    if dist.config.alpha is not None and dist.config.alpha != alpha:
        raise DomainError(f"Distribution built at alpha={dist.config.alpha}, interval requested at {alpha}")
    mean = sample_mean(full)
    rate = full.count ** (1.0 / alpha - 1.0)
    return ConfidenceInterval(
        lower=mean - quantile(dist.stats, 1.0 - 0.5 * p) * rate,
        upper=mean - quantile(dist.stats, 0.5 * p) * rate,
        level=1.0 - p,
        method=Method.KNOWN_ALPHA,
    )


def self_normalized_interval(full: MarkedSample, dist: SubsamplingDistribution, p: float) -> ConfidenceInterval:
    """(1-p) interval [mean - L(1-p/2) * std/sqrt(N), mean - L(p/2) * std/sqrt(N)]."""
    _check_level(p)
    if dist.config.method is not Method.SELF_NORMALIZED:
        raise DomainError("Self-normalized interval needs a self-normalized subsampling distribution")
    mean = sample_mean(full)
    half_scale = sample_std(full) / math.sqrt(full.count)
    return ConfidenceInterval(
        lower=mean - quantile(dist.stats, 1.0 - 0.5 * p) * half_scale,
        upper=mean - quantile(dist.stats, 0.5 * p) * half_scale,
        level=1.0 - p,
        method=Method.SELF_NORMALIZED,
    )


def confidence_interval(full: MarkedSample, dist: SubsamplingDistribution, level: float) -> ConfidenceInterval:
    """Interval at nominal coverage ``level`` for whichever method built ``dist``."""
    p = 1.0 - level
    if dist.config.method is Method.KNOWN_ALPHA:
        return known_alpha_interval(full, dist, p, dist.config.alpha)
    return self_normalized_interval(full, dist, p)
