"""
Point estimators on marked samples and empirical-distribution utilities.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from stablefield.errors import DegenerateSampleError, DomainError, EmptySampleError
from stablefield.point_process import PointPattern, Region, block_membership, coordinate_columns
from stablefield.quadrature import integrate_box

if TYPE_CHECKING:
    from stablefield.random_field import FilterSpec

logger = logging.getLogger(__name__)

MARK_COLUMN = 'mark'


@dataclass(frozen=True)
class MarkedSample:
    """Observation points paired with one mark each."""
    pattern: PointPattern
    marks: np.ndarray

    def __post_init__(self):
        marks = np.array(self.marks, dtype=float).reshape(-1)
        if marks.size != self.pattern.count:
            raise DomainError(f"Got {marks.size} marks for {self.pattern.count} points")
        if not np.isfinite(marks).all():
            bad = int(np.sum(~np.isfinite(marks)))
            raise DomainError(f"Marks must be finite; found {bad} missing or infinite value(s)")
        marks.setflags(write=False)
        object.__setattr__(self, 'marks', marks)

    @property
    def count(self) -> int:
        return self.pattern.count

    @property
    def region(self) -> Region:
        return self.pattern.region

    def restrict(self, y: Sequence[float], block: Region) -> 'MarkedSample':
        """Marks of the points inside the half-open block B + y."""
        y = np.asarray(y, dtype=float).reshape(-1)
        lengths = block.lengths
        if not self.region.contains_box(y, y + lengths):
            raise DomainError(f"Block at {y.tolist()} leaves the region")
        mask = block_membership(self.pattern.points, y[None, :], lengths)[0]
        translated = Region(sides=tuple(lengths), scale=1.0, origin=tuple(y))
        return MarkedSample(
            pattern=PointPattern(points=self.pattern.points[mask], region=translated,
                                 intensity=self.pattern.intensity),
            marks=self.marks[mask],
        )

    def map_marks(self, scale: float = 1.0, shift: float = 0.0) -> 'MarkedSample':
        return MarkedSample(pattern=self.pattern, marks=scale * self.marks + shift)

    def to_frame(self) -> pd.DataFrame:
        frame = self.pattern.to_frame()
        frame[MARK_COLUMN] = self.marks
        return frame

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, region: Region, intensity: float = 1.0) -> 'MarkedSample':
        columns = coordinate_columns(region.dimension)
        missing = [c for c in columns + [MARK_COLUMN] if c not in frame.columns]
        if missing:
            raise DomainError(f"Marked sample is missing columns {missing}")
        points = frame[columns].to_numpy(dtype=float)
        return cls(pattern=PointPattern(points=points, region=region, intensity=intensity),
                   marks=frame[MARK_COLUMN].to_numpy(dtype=float))


def read_marked_sample_csv(path: str, region: Region, intensity: float = 1.0) -> MarkedSample:
    return MarkedSample.from_frame(pd.read_csv(path), region, intensity)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted values with the right-continuous step CDF F(x) = #{v <= x} / n."""
    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.array(self.values, dtype=float).reshape(-1))
        if values.size == 0:
            raise EmptySampleError("Empirical distribution needs at least one value")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def cdf(self, x):
        return np.searchsorted(self.values, x, side='right') / self.count

    def to_csv(self, path: str) -> None:
        pd.DataFrame({'value': self.values}).to_csv(path, index=False)


def _require_nonempty(sample: MarkedSample) -> None:
    if sample.count == 0:
        raise EmptySampleError("Statistic undefined on an empty sample")


def sample_mean(sample: MarkedSample) -> float:
    _require_nonempty(sample)
    return float(np.mean(sample.marks))


def sample_std(sample: MarkedSample) -> float:
    """Standard deviation with divisor N."""
    _require_nonempty(sample)
    return float(np.std(sample.marks))


def self_normalized(sample: MarkedSample, mu0: float) -> float:
    """sqrt(N) * (mean - mu0) / std."""
    std = sample_std(sample)
    if std == 0.0:
        raise DegenerateSampleError("Self-normalized statistic undefined for zero standard deviation")
    return math.sqrt(sample.count) * (sample_mean(sample) - mu0) / std


def normalized_moments(sample: MarkedSample, alpha: float) -> Tuple[float, float]:
    """Jointly normalized sum and sum of squares, (N**(-1/alpha) sum Z, N**(-2/alpha) sum Z**2)."""
    _require_nonempty(sample)
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    n = sample.count
    return (n ** (-1.0 / alpha) * float(np.sum(sample.marks)),
            n ** (-2.0 / alpha) * float(np.sum(sample.marks ** 2)))


def quantile(dist: EmpiricalDistribution, p: float) -> float:
    """Smallest value x with F(x) >= p, i.e. the ceil(p*n)-th order statistic."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"Quantile level must lie in (0, 1), got {p}")
    n = dist.count
    # guard against p*n landing a hair above an integer
    rank = max(1, math.ceil(p * n - 1e-12 * n))
    return float(dist.values[rank - 1])


def ks_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """sup |F_a - F_b| over all jump points of both step functions."""
    jumps = np.concatenate([a.values, b.values])
    return float(np.max(np.abs(a.cdf(jumps) - b.cdf(jumps))))


def ks_critical_value(level: float, n: int, m: int) -> float:
    """Asymptotic two-sample KS critical value at significance ``level``."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"Significance level must lie in (0, 1), got {level}")
    return math.sqrt(-0.5 * math.log(0.5 * level)) * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class KSResult:
    distance: float
    critical_value: float
    level: float

    @property
    def passed(self) -> bool:
        return self.distance <= self.critical_value


def ks_test(a, b, level: float = 0.01) -> KSResult:
    """Two-sample KS test on raw samples or empirical distributions."""
    a = a if isinstance(a, EmpiricalDistribution) else EmpiricalDistribution(a)
    b = b if isinstance(b, EmpiricalDistribution) else EmpiricalDistribution(b)
    return KSResult(distance=ks_distance(a, b), critical_value=ks_critical_value(level, a.count, b.count),
                    level=level)


def _difference_norm(filter_spec: 'FilterSpec', alpha: float, lag: np.ndarray, rtol: float) -> float:
    """Integral of |psi(x + h) - psi(x)|**alpha."""
    margin = float(np.max(np.abs(lag)))
    lower, upper = filter_spec.bounding_box(margin)
    integrand = lambda x: np.abs(filter_spec(x + lag) - filter_spec(x)) ** alpha
    result = integrate_box(integrand, lower, upper, rtol=rtol,
                           breakpoints=filter_spec.axis_breakpoints(shift=lag))
    return float(result.value)


def codifference(filter_spec: 'FilterSpec', alpha: float, lag: Sequence[float],
                 rtol: float = 1e-9, norm: Optional[float] = None) -> float:
    """tau(h) = 2 * ||psi||_alpha^alpha - ||psi(. + h) - psi||_alpha^alpha by cubature.

    Args:
        filter_spec: Filter psi.
        alpha: Stability index in (0, 2].
        lag: Lag vector h.
        rtol: Relative tolerance of the cubature.
        norm: Precomputed ||psi||_alpha^alpha, reused across many lags.
    """
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    lag = np.atleast_1d(np.asarray(lag, dtype=float))
    if lag.size != filter_spec.dimension:
        raise DomainError(f"Lag {lag.tolist()} does not match filter dimension {filter_spec.dimension}")
    if norm is None:
        lower, upper = filter_spec.bounding_box()
        norm = float(integrate_box(lambda x: np.abs(filter_spec(x)) ** alpha, lower, upper, rtol=rtol,
                                   breakpoints=filter_spec.axis_breakpoints()).value)
    if not np.any(lag):
        return 2.0 * norm
    return 2.0 * norm - _difference_norm(filter_spec, alpha, lag, rtol)
