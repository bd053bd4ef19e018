"""
Scaled box regions and the homogeneous Poisson random measure on them.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from stablefield.errors import DomainError

logger = logging.getLogger(__name__)

# Slack for floating-point comparisons against box faces
CONTAINMENT_TOLERANCE = 1e-9


def coordinate_columns(dimension: int) -> List[str]:
    """CSV column names for point coordinates."""
    if dimension == 1:
        return ['x']
    if dimension == 2:
        return ['x', 'y']
    return [f'x{i + 1}' for i in range(dimension)]


@dataclass(frozen=True)
class Region:
    """Axis-aligned box K_n = n*K placed at ``origin``.

    Args:
        sides: Prototype side lengths (a_1, ..., a_d).
        scale: Scaling factor n.
        origin: Lower corner of the realized box; defaults to zero.
    """
    sides: Tuple[float, ...]
    scale: float = 1.0
    origin: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        sides = tuple(float(s) for s in np.atleast_1d(self.sides))
        if len(sides) == 0 or not all(np.isfinite(s) and s > 0.0 for s in sides):
            raise DomainError(f"Region sides must be positive, got {self.sides}")
        if not (np.isfinite(self.scale) and self.scale > 0.0):
            raise DomainError(f"Region scale must be positive, got {self.scale}")
        origin = (0.0,) * len(sides) if self.origin is None else tuple(float(o) for o in np.atleast_1d(self.origin))
        if len(origin) != len(sides):
            raise DomainError(f"Origin {origin} does not match dimension {len(sides)}")
        object.__setattr__(self, 'sides', sides)
        object.__setattr__(self, 'scale', float(self.scale))
        object.__setattr__(self, 'origin', origin)

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def lengths(self) -> np.ndarray:
        return self.scale * np.asarray(self.sides)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.origin)

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.lengths

    @property
    def center(self) -> np.ndarray:
        return self.lower + 0.5 * self.lengths

    def contains_box(self, lower: np.ndarray, upper: np.ndarray, tol: float = CONTAINMENT_TOLERANCE) -> bool:
        return bool(np.all(lower >= self.lower - tol) and np.all(upper <= self.upper + tol))

    def to_dict(self) -> Dict[str, Any]:
        return {'sides': list(self.sides), 'scale': self.scale, 'origin': list(self.origin)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Region':
        if 'sides' not in data:
            raise DomainError("Region specification needs 'sides'")
        return cls(sides=tuple(data['sides']), scale=data.get('scale', 1.0), origin=data.get('origin'))


def area(region: Region) -> float:
    """Lebesgue measure of the realized box."""
    return float(np.prod(region.lengths))


@dataclass(frozen=True)
class Erosion:
    """Anchor set K_n(1-c) and the block B = c*K_n it admits."""
    anchors: Region
    block: Region
    c: float


def erode(region: Region, c: float) -> Erosion:
    """Anchor set of block translations that keep B = c*K_n inside the region.

    For a box this is the origin-anchored box with sides (1-c)*n*a_i.
    """
    if not 0.0 < c < 1.0:
        raise DomainError(f"Block ratio c must lie in (0, 1), got {c}")
    lengths = region.lengths
    block = Region(sides=tuple(c * lengths), scale=1.0, origin=region.origin)
    anchors = Region(sides=tuple((1.0 - c) * lengths), scale=1.0, origin=region.origin)
    return Erosion(anchors=anchors, block=block, c=c)


@dataclass(frozen=True)
class PointPattern:
    """Realized Poisson points inside a region."""
    points: np.ndarray
    region: Region
    intensity: float = 1.0

    def __post_init__(self):
        points = np.array(self.points, dtype=float).reshape(-1, self.region.dimension)
        if not np.isfinite(points).all():
            raise DomainError("Point pattern has non-finite coordinates")
        if points.size and not self.region.contains_box(points.min(axis=0), points.max(axis=0)):
            raise DomainError("Point pattern has points outside its region")
        if not self.intensity > 0.0:
            raise DomainError(f"Intensity must be positive, got {self.intensity}")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @property
    def count(self) -> int:
        return int(self.points.shape[0])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.points, columns=coordinate_columns(self.region.dimension))

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False)


def sample_prm(region: Region, r: float, rng: np.random.Generator) -> PointPattern:
    """Homogeneous Poisson random measure with mean measure r * Lebesgue on the region.

    The count is Poisson(r * area) and, given the count, locations are i.i.d.
    uniform on the box.
    """
    if not r > 0.0:
        raise DomainError(f"Intensity r must be positive, got {r}")
    count = rng.poisson(r * area(region))
    points = region.lower + rng.random((count, region.dimension)) * region.lengths
    return PointPattern(points=points, region=region, intensity=r)


def block_membership(points: np.ndarray, anchors: np.ndarray, block_lengths: np.ndarray) -> np.ndarray:
    """Half-open membership of points in translated blocks.

    Args:
        points: Array (N, d) of locations.
        anchors: Array (M, d) of block lower corners y.
        block_lengths: Block side lengths (d,).

    Returns:
        Boolean array (M, N); entry (m, i) is True when y_m <= t_i < y_m + side.
    """
    points = np.asarray(points, dtype=float)
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    upper = anchors + np.asarray(block_lengths, dtype=float)
    inside = (points[None, :, :] >= anchors[:, None, :]) & (points[None, :, :] < upper[:, None, :])
    return np.all(inside, axis=-1)


def restrict(pattern: PointPattern, y: Sequence[float], block: Region) -> PointPattern:
    """Sub-pattern of points in the translated block B + y.

    Raises:
        DomainError: If B + y is not contained in the pattern's region.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != pattern.region.dimension:
        raise DomainError(f"Block anchor {y} does not match dimension {pattern.region.dimension}")
    lengths = block.lengths
    if not pattern.region.contains_box(y, y + lengths):
        raise DomainError(f"Block at {y.tolist()} with sides {lengths.tolist()} leaves the region")
    mask = block_membership(pattern.points, y[None, :], lengths)[0]
    translated = Region(sides=tuple(lengths), scale=1.0, origin=tuple(y))
    return PointPattern(points=pattern.points[mask], region=translated, intensity=pattern.intensity)
