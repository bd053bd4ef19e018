"""
Numerical oracles for the limit laws of the normalized sample mean and variance.

Expectations over the Poisson measure are Monte Carlo averages over draws of
the measure restricted to the filter's effective-support box; deterministic
integrals use the tensor-grid cubature.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from stablefield.errors import DegenerateLimitError, DomainError
from stablefield.quadrature import integrate_box, tensor_rule
from stablefield.random_field import FilterSpec, integrate_filter, sigma_psi
from stablefield.stable_core import abs_moment_gaussian, c_alpha
from stablefield.statistics import codifference

logger = logging.getLogger(__name__)

DEFAULT_DRAWS = 100_000
MIN_DRAWS = 100
CHUNK_DRAWS = 5_000
# Entries per (lags x nodes) block in the nested covariance cubature
MAX_BLOCK_ELEMENTS = 2_000_000


class PowerMode(str, Enum):
    MEAN_ABS_ALPHA = 'mean_abs_alpha'
    SQUARE = 'square'
    SQ_SUM_ALPHA_HALF = 'sq_sum_alpha_half'


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    std_error: float
    draws: int
    seed: Optional[int] = None

    def to_record(self, quantity: str) -> Dict[str, Any]:
        return {'quantity': quantity, 'estimate': self.estimate, 'std_error': self.std_error,
                'draws': self.draws, 'seed': self.seed}


@dataclass(frozen=True)
class LimitParams:
    """Limit-law constants for one (filter, r, alpha) configuration.

    ``scale_variance`` is None at alpha=2, where the variance limit is the
    point mass ``variance_point_mass``.
    """
    scale_mean: float
    scale_variance: Optional[float]
    phi: float
    phi2: float
    mc_draws: int
    mc_standard_error: float
    variance_standard_error: Optional[float] = None
    variance_point_mass: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CodifferenceGap:
    gap: float
    lhs: MonteCarloEstimate
    rhs: float

    @property
    def std_error(self) -> float:
        return self.lhs.std_error


def _validate_moment_inputs(filter_spec: FilterSpec, r: float, alpha: float, draws: int) -> None:
    if not np.isfinite(filter_spec.effective_radius):
        raise DomainError(f"Filter '{filter_spec.name}' has unbounded support")
    if not r > 0.0:
        raise DomainError(f"Intensity r must be positive, got {r}")
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if draws < MIN_DRAWS:
        raise DomainError(f"Monte Carlo needs at least {MIN_DRAWS} draws, got {draws}")


def _functional_chunk(filter_spec: FilterSpec, r: float, alpha: float, mode: PowerMode,
                      size: int, rng: np.random.Generator) -> np.ndarray:
    lower, upper = filter_spec.bounding_box()
    volume = float(np.prod(upper - lower))
    counts = rng.poisson(r * volume, size=size)
    points = lower + rng.random((int(counts.sum()), filter_spec.dimension)) * (upper - lower)
    psi = filter_spec(points)
    owner = np.repeat(np.arange(size), counts)

    if mode is PowerMode.SQ_SUM_ALPHA_HALF:
        return np.bincount(owner, weights=psi * psi, minlength=size) ** (0.5 * alpha)
    sums = np.bincount(owner, weights=psi, minlength=size)
    if mode is PowerMode.SQUARE:
        return sums * sums
    return np.abs(sums) ** alpha


def poisson_functional_moment(filter_spec: FilterSpec, r: float, alpha: float, power_mode: PowerMode,
                              draws: int, rng: np.random.Generator, workers: int = 1,
                              chunk_draws: int = CHUNK_DRAWS) -> MonteCarloEstimate:
    """Monte Carlo moment of a Poisson functional of the filter.

    Modes: E|sum psi(s_i)|**alpha, E(sum psi(s_i))**2 and E(sum psi(s_i)**2)**(alpha/2),
    with s_i the points of a Poisson measure of intensity r on the support box.
    Each chunk of draws gets its own spawned stream, so results depend only on
    ``rng`` and ``chunk_draws``, never on ``workers``.
    """
    power_mode = PowerMode(power_mode)
    _validate_moment_inputs(filter_spec, r, alpha, draws)
    sizes = [min(chunk_draws, draws - start) for start in range(0, draws, chunk_draws)]
    streams = rng.spawn(len(sizes))

    def run(args):
        size, stream = args
        return _functional_chunk(filter_spec, r, alpha, power_mode, size, stream)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(run, zip(sizes, streams)))
    else:
        chunks = [run(args) for args in zip(sizes, streams)]

    values = np.concatenate(chunks)
    estimate = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / math.sqrt(draws))
    logger.debug(f"[ORACLE] {power_mode.value} r={r} alpha={alpha} -> {estimate:.6g} +/- {std_error:.2g}")
    return MonteCarloEstimate(estimate=estimate, std_error=std_error, draws=draws)


def limit_scale_mean(filter_spec: FilterSpec, r: float, alpha: float, draws: int,
                     rng: np.random.Generator, workers: int = 1) -> MonteCarloEstimate:
    """Scale (E|int psi dN|**alpha / r)**(1/alpha) of the normalized-mean limit."""
    moment = poisson_functional_moment(filter_spec, r, alpha, PowerMode.MEAN_ABS_ALPHA, draws, rng, workers)
    value = (moment.estimate / r) ** (1.0 / alpha)
    std_error = value * moment.std_error / (alpha * moment.estimate) if moment.estimate > 0.0 else 0.0
    return MonteCarloEstimate(estimate=value, std_error=std_error, draws=draws)


def limit_scale_variance(filter_spec: FilterSpec, r: float, alpha: float, draws: int,
                         rng: np.random.Generator, workers: int = 1) -> MonteCarloEstimate:
    """Scale 2*(cos(pi*alpha/4) * E(int psi^2 dN)**(alpha/2) * E|G|**alpha)**(2/alpha).

    Raises:
        DegenerateLimitError: At alpha=2, carrying the point mass 2*r*int psi^2.
    """
    if alpha == 2.0:
        point_mass = 2.0 * r * integrate_filter(filter_spec, 2.0)
        raise DegenerateLimitError("Variance limit is a point mass at alpha=2", point_mass=point_mass)
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    moment = poisson_functional_moment(filter_spec, r, alpha, PowerMode.SQ_SUM_ALPHA_HALF, draws, rng, workers)
    factor = math.cos(0.25 * math.pi * alpha) * abs_moment_gaussian(alpha)
    exponent = 2.0 / alpha
    value = 2.0 * (factor * moment.estimate) ** exponent
    derivative = 2.0 * exponent * factor ** exponent * moment.estimate ** (exponent - 1.0)
    return MonteCarloEstimate(estimate=value, std_error=derivative * moment.std_error, draws=draws)


def _lag_breakpoints(filter_spec: FilterSpec):
    diffs = sorted({b - a for a in filter_spec.breakpoints for b in filter_spec.breakpoints})
    return tuple(tuple(diffs) for _ in range(filter_spec.dimension))


def gaussian_limit_variance(filter_spec: FilterSpec, r: float = 1.0, rtol: float = 1e-8) -> float:
    """Variance r * int tau(t) dt + tau(0) of the alpha=2 normalized-mean limit.

    tau(t) = 2 * int psi(x) psi(x + t) dx is itself evaluated by cubature on a
    fixed rule whose level is set by converging int psi^2.
    """
    if not r > 0.0:
        raise DomainError(f"Intensity r must be positive, got {r}")
    lower, upper = filter_spec.bounding_box()
    breaks = filter_spec.axis_breakpoints()
    norm_sq = integrate_box(lambda x: filter_spec(x) ** 2, lower, upper, rtol=rtol, breakpoints=breaks)
    nodes, weights = tensor_rule(lower, upper, max(norm_sq.level - 1, 1), breaks)
    weighted_psi = weights * filter_spec(nodes)

    def covariance(lags: np.ndarray) -> np.ndarray:
        shifted = nodes[None, :, :] + lags[:, None, :]
        return 2.0 * (filter_spec(shifted) @ weighted_psi)

    lag_lower, lag_upper = filter_spec.bounding_box(filter_spec.effective_radius)
    chunk = max(1, MAX_BLOCK_ELEMENTS // (len(nodes) * filter_spec.dimension))
    integral = integrate_box(covariance, lag_lower, lag_upper, rtol=rtol, min_level=2,
                             breakpoints=_lag_breakpoints(filter_spec), chunk_size=chunk)
    tau_zero = 2.0 * float(norm_sq.value)
    logger.debug(f"[ORACLE] gaussian limit variance: int tau={integral.value:.10g} tau(0)={tau_zero:.10g}")
    return r * float(integral.value) + tau_zero


def codifference_identity_gap(filter_spec: FilterSpec, alpha: float, draws: int, rng: np.random.Generator,
                              r: float = 1.0, rtol: float = 1e-9) -> CodifferenceGap:
    """Gap between E|int psi dN|**alpha and (int tau_cod + tau_cod(0)) / 2.

    The two sides agree at alpha=2. The lag integral calls one cubature per
    lag node, so low-dimensional filters keep it fast.
    """
    lhs = poisson_functional_moment(filter_spec, r, alpha, PowerMode.MEAN_ABS_ALPHA, draws, rng)
    norm = integrate_filter(filter_spec, alpha, absolute=True, rtol=rtol)

    def tau(lags: np.ndarray) -> np.ndarray:
        return np.array([codifference(filter_spec, alpha, lag, rtol=rtol, norm=norm) for lag in lags])

    lag_lower, lag_upper = filter_spec.bounding_box(filter_spec.effective_radius)
    integral = integrate_box(tau, lag_lower, lag_upper, rtol=1e-7, atol=1e-10, min_level=2,
                             breakpoints=_lag_breakpoints(filter_spec))
    rhs = 0.5 * (float(integral.value) + 2.0 * norm)
    return CodifferenceGap(gap=abs(lhs.estimate - rhs), lhs=lhs, rhs=rhs)


def increment_power_bound_holds(a, b, alpha: float, form: str = 'proof'):
    """Check ||a|^alpha - |b|^alpha| against its increment bound, with 1e-12 slack.

    For alpha <= 1 the bound is |a-b|^alpha. For 1 < alpha <= 2 it adds
    2 * max(|a|,|b|)**(alpha/2) * |a-b|**(alpha/2) (``form='proof'``) or
    2 * max(|a|,|b|) * |a-b|**(alpha/2) (``form='statement'``).
    Works elementwise on arrays.
    """
    if form not in ('proof', 'statement'):
        raise DomainError(f"Unknown bound form '{form}'")
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha <= 0.0) | (alpha > 2.0)):
        raise DomainError("alpha must lie in (0, 2]")
    a_abs = np.abs(np.asarray(a, dtype=float))
    b_abs = np.abs(np.asarray(b, dtype=float))
    step = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    lhs = np.abs(a_abs ** alpha - b_abs ** alpha)
    largest = np.maximum(a_abs, b_abs)
    lead = largest ** (0.5 * alpha) if form == 'proof' else largest
    rhs = np.where(alpha <= 1.0, step ** alpha, step ** alpha + 2.0 * lead * step ** (0.5 * alpha))
    holds = lhs <= rhs + 1e-12
    return bool(holds) if np.ndim(holds) == 0 else holds


def limit_params(filter_spec: FilterSpec, r: float, alpha: float, draws: int,
                 rng: np.random.Generator, workers: int = 1) -> LimitParams:
    """Assemble the limit constants; mean and variance use independent spawned streams."""
    mean_rng, variance_rng = rng.spawn(2)
    mean = limit_scale_mean(filter_spec, r, alpha, draws, mean_rng, workers)
    try:
        variance = limit_scale_variance(filter_spec, r, alpha, draws, variance_rng, workers)
        scale_variance, variance_se, point_mass = variance.estimate, variance.std_error, None
    except DegenerateLimitError as exc:
        scale_variance, variance_se, point_mass = None, None, exc.point_mass
    return LimitParams(
        scale_mean=mean.estimate,
        scale_variance=scale_variance,
        phi=integrate_filter(filter_spec, 1.0),
        phi2=math.sqrt(integrate_filter(filter_spec, 2.0)),
        mc_draws=draws,
        mc_standard_error=mean.std_error,
        variance_standard_error=variance_se,
        variance_point_mass=point_mass,
    )


ORACLE_QUANTITIES = ('c_alpha', 'sigma_psi', 'square_moment', 'scale_mean', 'scale_variance',
                     'gaussian_limit_variance', 'codifference_gap')


def evaluate_oracles(quantities: Sequence[str], filter_spec: FilterSpec, alpha: float, r: float = 1.0,
                     draws: int = DEFAULT_DRAWS, seed: int = 0, workers: int = 1) -> List[Dict[str, Any]]:
    """Evaluate named oracle quantities as JSON-ready records.

    Each Monte Carlo quantity uses a fresh generator seeded with ``seed`` so it
    can be reproduced on its own.
    """
    unknown = [q for q in quantities if q not in ORACLE_QUANTITIES]
    if unknown:
        raise DomainError(f"Unknown oracle quantities {unknown}. Available: {list(ORACLE_QUANTITIES)}")

    records = []
    for quantity in quantities:
        rng = np.random.default_rng(seed)
        logger.info(f"[ORACLE] Evaluating {quantity} (alpha={alpha}, r={r}, draws={draws})")
        if quantity == 'c_alpha':
            records.append({'quantity': quantity, 'estimate': c_alpha(alpha), 'std_error': 0.0,
                            'draws': 0, 'seed': None})
        elif quantity == 'sigma_psi':
            records.append({'quantity': quantity, 'estimate': sigma_psi(filter_spec, alpha), 'std_error': 0.0,
                            'draws': 0, 'seed': None})
        elif quantity == 'square_moment':
            estimate = poisson_functional_moment(filter_spec, r, alpha, PowerMode.SQUARE, draws, rng, workers)
            records.append(MonteCarloEstimate(estimate.estimate, estimate.std_error, draws, seed).to_record(quantity))
        elif quantity == 'scale_mean':
            estimate = limit_scale_mean(filter_spec, r, alpha, draws, rng, workers)
            records.append(MonteCarloEstimate(estimate.estimate, estimate.std_error, draws, seed).to_record(quantity))
        elif quantity == 'scale_variance':
            try:
                estimate = limit_scale_variance(filter_spec, r, alpha, draws, rng, workers)
                records.append(MonteCarloEstimate(estimate.estimate, estimate.std_error, draws,
                                                  seed).to_record(quantity))
            except DegenerateLimitError as exc:
                records.append({'quantity': quantity, 'estimate': exc.point_mass, 'std_error': 0.0,
                                'draws': 0, 'seed': None, 'degenerate': True})
        elif quantity == 'gaussian_limit_variance':
            records.append({'quantity': quantity, 'estimate': gaussian_limit_variance(filter_spec, r),
                            'std_error': 0.0, 'draws': 0, 'seed': None})
        else:
            gap = codifference_identity_gap(filter_spec, alpha, draws, rng, r=r)
            record = MonteCarloEstimate(gap.gap, gap.std_error, draws, seed).to_record(quantity)
            record.update({'lhs': gap.lhs.estimate, 'rhs': gap.rhs})
            records.append(record)
    return records
