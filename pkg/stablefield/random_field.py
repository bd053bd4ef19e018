"""
Symmetric alpha-stable random fields by truncated series representation.

X(t) = C_alpha**(1/alpha) * sum_i eps_i * Gamma_i**(-1/alpha) * psi(U_i + t - v) * q(U_i)**(-1/alpha)

with Rademacher signs eps_i, unit-rate Poisson arrival times Gamma_i and
locations U_i drawn from the product Cauchy density q. The observed marks are
Z(t) = X(t) + mu.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, partial
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from stablefield.errors import DomainError
from stablefield.point_process import Region, sample_prm
from stablefield.quadrature import integrate_box
from stablefield.stable_core import c_alpha
from stablefield.statistics import MarkedSample

logger = logging.getLogger(__name__)

# Entries per (points x terms) block in eval_mark
MAX_BLOCK_ELEMENTS = 2_000_000


def _gaussian(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.sum(x * x, axis=-1))


def _unit_box(x: np.ndarray) -> np.ndarray:
    return np.all((x >= 0.0) & (x <= 1.0), axis=-1).astype(float)


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros(x.shape[:-1])


def _radial(radii: np.ndarray, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    distance = np.sqrt(np.sum(x * x, axis=-1))
    return np.interp(distance, radii, values, right=0.0)


def _scaled(k: float, func: Callable, x: np.ndarray) -> np.ndarray:
    return k * func(x)


def _summed(first: Callable, second: Callable, x: np.ndarray) -> np.ndarray:
    return first(x) + second(x)


@dataclass(frozen=True)
class FilterSpec:
    """Filter psi of the moving-average representation.

    Args:
        evaluate: Vectorized map from (..., d) points to (...) values.
        dimension: Spatial dimension d.
        effective_radius: |psi| < 1e-12 outside the cube [-R, R]^d.
        delta: Integrability exponent in (0, 1].
        name: Label used in logs and reports.
        breakpoints: Coordinates where psi is non-smooth along every axis.
    """
    evaluate: Callable[[np.ndarray], np.ndarray]
    dimension: int
    effective_radius: float
    delta: float = 1.0
    name: str = 'custom'
    breakpoints: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError(f"Filter dimension must be positive, got {self.dimension}")
        if not self.effective_radius > 0.0:
            raise DomainError(f"Effective radius must be positive, got {self.effective_radius}")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"Integrability exponent must lie in (0, 1], got {self.delta}")
        object.__setattr__(self, 'breakpoints', tuple(float(b) for b in self.breakpoints))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float))

    def __add__(self, other: 'FilterSpec') -> 'FilterSpec':
        if other.dimension != self.dimension:
            raise DomainError("Cannot add filters of different dimension")
        return FilterSpec(
            evaluate=partial(_summed, self.evaluate, other.evaluate),
            dimension=self.dimension,
            effective_radius=max(self.effective_radius, other.effective_radius),
            delta=min(self.delta, other.delta),
            name=f'{self.name}+{other.name}',
            breakpoints=tuple(sorted(set(self.breakpoints) | set(other.breakpoints))),
        )

    def scaled(self, k: float) -> 'FilterSpec':
        return FilterSpec(
            evaluate=partial(_scaled, float(k), self.evaluate),
            dimension=self.dimension,
            effective_radius=self.effective_radius,
            delta=self.delta,
            name=f'{k}*{self.name}',
            breakpoints=self.breakpoints,
        )

    def bounding_box(self, margin: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        radius = self.effective_radius + margin
        return np.full(self.dimension, -radius), np.full(self.dimension, radius)

    def axis_breakpoints(self, shift: Optional[np.ndarray] = None) -> Tuple[Tuple[float, ...], ...]:
        """Per-axis breakpoints, optionally merged with those of psi(x + shift)."""
        axes = []
        for i in range(self.dimension):
            points = set(self.breakpoints)
            if shift is not None:
                points |= {b - float(shift[i]) for b in self.breakpoints}
            axes.append(tuple(sorted(points)))
        return tuple(axes)


def gaussian_filter() -> FilterSpec:
    """psi(x) = exp(-|x|^2 / 2) in two dimensions."""
    return FilterSpec(evaluate=_gaussian, dimension=2, effective_radius=7.5, name='gauss2d')


def indicator_filter(dimension: int = 1) -> FilterSpec:
    """Indicator of the unit cube [0, 1]^d."""
    return FilterSpec(evaluate=_unit_box, dimension=dimension, effective_radius=1.0,
                      name='indicator', breakpoints=(0.0, 1.0))


def zero_filter(dimension: int = 2) -> FilterSpec:
    return FilterSpec(evaluate=_zero, dimension=dimension, effective_radius=1.0, name='zero')


def radial_profile_filter(radii: Sequence[float], values: Sequence[float], dimension: int = 2) -> FilterSpec:
    """Radial filter linearly interpolated between grid values and zero beyond the last radius."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.ndim != 1 or radii.size < 2 or radii.shape != values.shape:
        raise DomainError("Radial profile needs matching radii and values with at least two entries")
    if radii[0] != 0.0 or np.any(np.diff(radii) <= 0.0):
        raise DomainError("Radial profile radii must start at 0 and increase strictly")
    if not np.all(np.isfinite(values)):
        raise DomainError("Radial profile values must be finite")
    return FilterSpec(evaluate=partial(_radial, radii, values), dimension=dimension,
                      effective_radius=float(radii[-1]), name='radial_profile')


FILTER_REGISTRY: Dict[str, Callable[..., FilterSpec]] = {
    'gauss2d': gaussian_filter,
    'indicator': indicator_filter,
    'indicator1d': partial(indicator_filter, 1),
    'zero': zero_filter,
}


def check_integrability(filter_spec: FilterSpec, rtol: float = 1e-4) -> float:
    """Integral of |psi|**delta over the bounding box; raises if it is not finite."""
    value = integrate_filter(filter_spec, filter_spec.delta, absolute=True, rtol=rtol, min_level=1)
    if not np.isfinite(value):
        raise DomainError(f"Filter '{filter_spec.name}' is not in L_delta for delta={filter_spec.delta}")
    return value


def build_filter(spec: Optional[Dict[str, Any]] = None) -> FilterSpec:
    """Resolve a filter from its configuration entry.

    Accepted forms: ``{"name": "gauss2d"}``, ``{"name": "indicator", "dimension": 1}``
    and ``{"radial_profile": {"radii": [...], "values": [...]}, "dimension": 2}``;
    an optional ``"scale"`` multiplies the filter.
    """
    spec = dict(spec or {'name': 'gauss2d'})
    if 'radial_profile' in spec:
        profile = spec['radial_profile']
        filter_spec = radial_profile_filter(profile.get('radii', []), profile.get('values', []),
                                            int(spec.get('dimension', 2)))
    else:
        name = spec.get('name', 'gauss2d')
        if name not in FILTER_REGISTRY:
            raise DomainError(f"Unknown filter '{name}'. Available: {sorted(FILTER_REGISTRY)}")
        kwargs = {'dimension': int(spec['dimension'])} if 'dimension' in spec and name in ('indicator', 'zero') else {}
        filter_spec = FILTER_REGISTRY[name](**kwargs)
    check_integrability(filter_spec)
    if 'scale' in spec:
        filter_spec = filter_spec.scaled(float(spec['scale']))
    return filter_spec


def integrate_filter(filter_spec: FilterSpec, power: float = 1.0, absolute: bool = False,
                     rtol: float = 1e-9, min_level: int = 3) -> float:
    """Integral of psi**power (or |psi|**power) over R^d.

    Args:
        filter_spec: Filter to integrate.
        power: Exponent applied to psi.
        absolute: Integrate |psi|**power instead of the signed power.
        rtol: Relative tolerance of the cubature.
        min_level: First refinement level of the cubature.

    Returns:
        The integral over the effective-support box.
    """
    if absolute:
        integrand = lambda x: np.abs(filter_spec(x)) ** power
    else:
        integrand = lambda x: filter_spec(x) ** power
    lower, upper = filter_spec.bounding_box()
    result = integrate_box(integrand, lower, upper, rtol=rtol,
                           breakpoints=filter_spec.axis_breakpoints(), min_level=min_level)
    return float(result.value)


def sigma_psi(filter_spec: FilterSpec, alpha: float) -> float:
    """Scale of the marginal law of X(t): (integral of |psi|**alpha)**(1/alpha)."""
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    return integrate_filter(filter_spec, alpha, absolute=True) ** (1.0 / alpha)


def cauchy_density(u: np.ndarray) -> np.ndarray:
    """Product of standard Cauchy densities over the last axis."""
    return np.prod(1.0 / (np.pi * (1.0 + u * u)), axis=-1)


@dataclass(frozen=True)
class ModelSpec:
    """Shifted symmetric stable field Z(t) = X(t) + mu."""
    filter: FilterSpec
    alpha: float
    mu: float = 0.0
    center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"Series simulation needs alpha in (0, 2), got {self.alpha}")
        if self.center is not None:
            center = tuple(float(v) for v in np.atleast_1d(self.center))
            if len(center) != self.filter.dimension:
                raise DomainError(f"Center {center} does not match filter dimension {self.filter.dimension}")
            object.__setattr__(self, 'center', center)

    @property
    def delta(self) -> float:
        return min(self.filter.delta, self.alpha)

    @property
    def center_point(self) -> np.ndarray:
        if self.center is None:
            return np.zeros(self.filter.dimension)
        return np.asarray(self.center)

    @staticmethod
    def q_density(u: np.ndarray) -> np.ndarray:
        return cauchy_density(u)

    def with_center(self, center: Sequence[float]) -> 'ModelSpec':
        return ModelSpec(filter=self.filter, alpha=self.alpha, mu=self.mu, center=tuple(center))


@dataclass(frozen=True)
class SeriesRealization:
    """One draw of the series ingredients (signs, arrivals, locations)."""
    signs: np.ndarray
    arrivals: np.ndarray
    locations: np.ndarray
    alpha: float
    c_alpha_root: float

    def __post_init__(self):
        for name in ('signs', 'arrivals', 'locations'):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if self.locations.ndim != 2:
            raise DomainError("Locations must be an (I, d) array")
        n_terms = len(self.signs)
        if n_terms < 1 or len(self.arrivals) != n_terms or len(self.locations) != n_terms:
            raise DomainError("Signs, arrivals and locations must share a positive length")
        if not np.all(np.abs(self.signs) == 1.0):
            raise DomainError("Signs must be +1 or -1")
        if self.arrivals[0] <= 0.0 or np.any(np.diff(self.arrivals) <= 0.0):
            raise DomainError("Arrival times must be positive and strictly increasing")

    @property
    def terms(self) -> int:
        return len(self.signs)

    @cached_property
    def weights(self) -> np.ndarray:
        """C_alpha**(1/alpha) * eps_i * Gamma_i**(-1/alpha) * q(U_i)**(-1/alpha)."""
        inv_alpha = 1.0 / self.alpha
        return (self.c_alpha_root * self.signs * self.arrivals ** (-inv_alpha)
                * cauchy_density(self.locations) ** (-inv_alpha))

    def truncate(self, n_terms: int) -> 'SeriesRealization':
        """The first ``n_terms`` terms of this realization."""
        if not 1 <= n_terms <= self.terms:
            raise DomainError(f"Cannot truncate {self.terms} terms to {n_terms}")
        return SeriesRealization(signs=self.signs[:n_terms], arrivals=self.arrivals[:n_terms],
                                 locations=self.locations[:n_terms], alpha=self.alpha,
                                 c_alpha_root=self.c_alpha_root)


def draw_realization(model: ModelSpec, n_terms: int, rng: np.random.Generator) -> SeriesRealization:
    """Draw I series terms: signs first, then arrivals, then Cauchy locations."""
    if n_terms < 1:
        raise DomainError(f"Number of series terms must be positive, got {n_terms}")
    signs = 2.0 * rng.integers(0, 2, size=n_terms) - 1.0
    arrivals = np.cumsum(rng.exponential(size=n_terms))
    locations = rng.standard_cauchy(size=(n_terms, model.filter.dimension))
    return SeriesRealization(signs=signs, arrivals=arrivals, locations=locations, alpha=model.alpha,
                             c_alpha_root=c_alpha(model.alpha) ** (1.0 / model.alpha))


def eval_mark(realization: SeriesRealization, model: ModelSpec, t: np.ndarray):
    """Evaluate the mark Z(t) at one point (d,) or at many points (N, d).

    Returns:
        A float for a single point, else an array of shape (N,).
    """
    if realization.alpha != model.alpha:
        raise DomainError(f"Realization drawn for alpha={realization.alpha}, model has alpha={model.alpha}")
    t = np.asarray(t, dtype=float)
    single = t.ndim <= 1
    points = t.reshape(1, -1) if single else t
    dim = model.filter.dimension
    if points.shape[-1] != dim:
        raise DomainError(f"Point dimension {points.shape[-1]} does not match filter dimension {dim}")

    offsets = points - model.center_point
    weights = realization.weights
    values = np.empty(len(points))
    block = max(1, MAX_BLOCK_ELEMENTS // (realization.terms * dim))
    for start in range(0, len(points), block):
        shifted = realization.locations[None, :, :] + offsets[start:start + block, None, :]
        values[start:start + block] = model.filter(shifted) @ weights
    marks = model.mu + values
    return float(marks[0]) if single else marks


def simulate_sample(model: ModelSpec, region: Region, r: float, n_terms: int,
                    rng: np.random.Generator) -> MarkedSample:
    """Simulate locations from the Poisson measure and marks from one series draw.

    The model center defaults to the region midpoint.
    """
    if region.dimension != model.filter.dimension:
        raise DomainError(f"Region dimension {region.dimension} does not match filter dimension "
                          f"{model.filter.dimension}")
    if model.center is None:
        model = model.with_center(region.center)
    pattern = sample_prm(region, r, rng)
    realization = draw_realization(model, n_terms, rng)
    marks = eval_mark(realization, model, pattern.points) if pattern.count else np.empty(0)
    logger.debug(f"[SIMULATE] alpha={model.alpha} points={pattern.count} terms={n_terms}")
    return MarkedSample(pattern=pattern, marks=marks)


def sample_marginal(model: ModelSpec, n_terms: int, n_draws: int, rng: np.random.Generator,
                    t: Optional[Sequence[float]] = None) -> np.ndarray:
    """Marks at one location from ``n_draws`` independent realizations."""
    point = model.center_point if t is None else np.asarray(t, dtype=float)
    return np.array([eval_mark(draw_realization(model, n_terms, rng), model, point) for _ in range(n_draws)])
