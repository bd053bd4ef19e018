"""
Adaptive tensor-grid Gauss-Legendre cubature over axis-aligned boxes.

Each axis is cut at the supplied breakpoints, every segment is split into
2**level equal panels and an 8-point Gauss-Legendre rule is placed on each
panel. The level is raised until two successive estimates agree.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from stablefield.errors import DomainError, NumericError

logger = logging.getLogger(__name__)

GAUSS_ORDER = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)

# Evaluation chunk (points per integrand call)
DEFAULT_CHUNK_SIZE = 65536
DEFAULT_MAX_POINTS = 4_000_000

Breakpoints = Optional[Sequence[Sequence[float]]]


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of an adaptive cubature run."""
    value: Union[float, np.ndarray]
    error: float
    level: int
    n_points: int


def axis_rule(lower: float, upper: float, level: int,
              breakpoints: Sequence[float] = ()) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on one axis.

    Args:
        lower: Left end of the interval.
        upper: Right end of the interval.
        level: Each segment between breakpoints is split into 2**level panels.
        breakpoints: Points where the integrand may be non-smooth. Points
            outside (lower, upper) are ignored.

    Returns:
        Tuple of (nodes, weights) as 1-D arrays.
    """
    if not upper > lower:
        raise DomainError(f"Empty integration interval [{lower}, {upper}]")
    inner = [b for b in breakpoints if lower < b < upper]
    edges = np.unique(np.concatenate(([lower], inner, [upper])))
    panels_per_segment = 2 ** level

    panel_edges = np.concatenate([
        np.linspace(a, b, panels_per_segment + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])
    ] + [[edges[-1]]])
    left = panel_edges[:-1]
    half = 0.5 * np.diff(panel_edges)
    mid = left + half

    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def tensor_rule(lower: Sequence[float], upper: Sequence[float], level: int,
                breakpoints: Breakpoints = None) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on a box; returns points of shape (P, d) and weights (P,)."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape:
        raise DomainError("Box corners must have the same dimension")
    dim = lower.size
    axis_breaks = breakpoints if breakpoints is not None else [()] * dim
    if len(axis_breaks) != dim:
        raise DomainError(f"Expected breakpoints for {dim} axes, got {len(axis_breaks)}")

    rules = [axis_rule(lower[i], upper[i], level, axis_breaks[i]) for i in range(dim)]
    grids = np.meshgrid(*[nodes for nodes, _ in rules], indexing='ij')
    weight_grids = np.meshgrid(*[weights for _, weights in rules], indexing='ij')
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in weight_grids], axis=-1), axis=-1)
    return points, weights


def apply_rule(func: Callable[[np.ndarray], np.ndarray], points: np.ndarray,
               weights: np.ndarray, chunk_size: int = DEFAULT_CHUNK_SIZE) -> Union[float, np.ndarray]:
    """Weighted sum of ``func`` over a fixed rule, evaluated in chunks.

    ``func`` maps an (n, d) array of points to an (n,) or (n, k) array.
    """
    total = None
    for start in range(0, len(points), chunk_size):
        chunk = points[start:start + chunk_size]
        values = np.asarray(func(chunk), dtype=float)
        contribution = np.tensordot(weights[start:start + chunk_size], values, axes=(0, 0))
        total = contribution if total is None else total + contribution
    if np.ndim(total) == 0:
        return float(total)
    return total


def points_at_level(dim: int, level: int, n_segments: int = 1) -> int:
    return (n_segments * GAUSS_ORDER * 2 ** level) ** dim


def integrate_box(func: Callable[[np.ndarray], np.ndarray],
                  lower: Sequence[float],
                  upper: Sequence[float],
                  rtol: float = 1e-9,
                  atol: float = 1e-13,
                  breakpoints: Breakpoints = None,
                  min_level: int = 3,
                  max_points: int = DEFAULT_MAX_POINTS,
                  chunk_size: int = DEFAULT_CHUNK_SIZE) -> QuadratureResult:
    """Integrate ``func`` over the box [lower, upper] by level refinement.

    Args:
        func: Vectorized integrand, (n, d) points -> (n,) or (n, k) values.
        lower: Lower box corner.
        upper: Upper box corner.
        rtol: Relative tolerance between successive levels.
        atol: Absolute tolerance between successive levels.
        breakpoints: Optional per-axis sequences of non-smooth points.
        min_level: First refinement level evaluated.
        max_points: Upper bound on rule size before giving up.
        chunk_size: Points per integrand call.

    Returns:
        QuadratureResult with the finest estimate.

    Raises:
        NumericError: If the tolerance is not met within ``max_points``.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    dim = lower.size

    level = min_level
    points, weights = tensor_rule(lower, upper, level, breakpoints)
    previous = apply_rule(func, points, weights, chunk_size)
    previous_points = len(points)
    history = []

    while True:
        level += 1
        next_points = previous_points * 2 ** dim
        if next_points > max_points:
            raise NumericError(
                "Cubature did not converge",
                diagnostics={'level': level - 1, 'points': previous_points, 'dimension': dim,
                             'history': history[-3:], 'rtol': rtol, 'atol': atol},
            )
        points, weights = tensor_rule(lower, upper, level, breakpoints)
        current = apply_rule(func, points, weights, chunk_size)
        difference = float(np.max(np.abs(np.asarray(current) - np.asarray(previous))))
        scale = float(np.max(np.abs(current)))
        history.append(difference)
        logger.debug(f"[QUADRATURE] level={level} points={len(points)} diff={difference:.3e}")
        if difference <= max(atol, rtol * scale):
            return QuadratureResult(value=current, error=difference, level=level, n_points=len(points))
        previous = current
        previous_points = len(points)
