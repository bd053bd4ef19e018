"""
Univariate stable-law primitives.

Scale follows the convention in which alpha=2 gives a normal law with
variance 2*scale**2.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import integrate, special

from stablefield.errors import DomainError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StableParams:
    """Parameters (alpha, beta, scale, location) of a stable law."""
    alpha: float
    beta: float = 0.0
    scale: float = 1.0
    location: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not -1.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.scale >= 0.0:
            raise DomainError(f"scale must be nonnegative, got {self.scale}")
        if not np.isfinite(self.location):
            raise DomainError(f"location must be finite, got {self.location}")

    @property
    def is_gaussian(self) -> bool:
        return self.alpha == 2.0

    @property
    def effective_beta(self) -> float:
        # skewness has no effect in the Gaussian case
        return 0.0 if self.is_gaussian else self.beta


def sample_stable(params: StableParams, rng: np.random.Generator,
                  size: Optional[Union[int, Tuple[int, ...]]] = None) -> Union[float, np.ndarray]:
    """Draw from a stable law by the Chambers-Mallows-Stuck transform.

    Consumes one uniform angle and then one unit exponential per draw, in that
    order, for every parameter combination.

    Args:
        params: Validated stable-law parameters.
        rng: Source of randomness.
        size: Output shape; ``None`` returns a single float.

    Returns:
        One draw or an array of draws.
    """
    alpha = params.alpha
    beta = params.effective_beta
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=size)
    w = rng.exponential(size=size)

    if alpha == 1.0:
        half_pi_shift = 0.5 * np.pi + beta * v
        x = (2.0 / np.pi) * (half_pi_shift * np.tan(v)
                             - beta * np.log((0.5 * np.pi * w * np.cos(v)) / half_pi_shift))
        draws = params.scale * x
        if beta != 0.0 and params.scale > 0.0:
            draws = draws + (2.0 / np.pi) * beta * params.scale * math.log(params.scale)
        draws = params.location + draws
    else:
        zeta = beta * math.tan(0.5 * np.pi * alpha)
        shift = math.atan(zeta) / alpha
        stretch = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
        x = (stretch * np.sin(alpha * (v + shift)) / np.cos(v) ** (1.0 / alpha)
             * (np.cos(v - alpha * (v + shift)) / w) ** ((1.0 - alpha) / alpha))
        draws = params.location + params.scale * x

    if size is None:
        return float(draws)
    return draws


def _check_open_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")


def sine_integral(alpha: float) -> float:
    """Integral of x**(-alpha) * sin(x) over (0, inf) by adaptive quadrature.

    The unit interval uses an algebraic-singularity weight; the tail is a
    Fourier integral.
    """
    _check_open_alpha(alpha)
    head, head_err = integrate.quad(_sin_over_x, 0.0, 1.0, weight='alg', wvar=(1.0 - alpha, 0.0),
                                    epsabs=1e-13, epsrel=1e-12)
    tail, tail_err = integrate.quad(lambda x: x ** (-alpha), 1.0, np.inf, weight='sin', wvar=1.0,
                                    epsabs=1e-12, limlst=200)
    if not (np.isfinite(head) and np.isfinite(tail)):
        raise NumericError("Sine integral quadrature failed",
                           diagnostics={'alpha': alpha, 'head_error': head_err, 'tail_error': tail_err})
    return head + tail


def _sin_over_x(x: float) -> float:
    return math.sin(x) / x if x != 0.0 else 1.0


def c_alpha(alpha: float) -> float:
    """Constant C_alpha of the series representation; the reciprocal of the sine integral."""
    _check_open_alpha(alpha)
    if alpha == 1.0:
        return 2.0 / np.pi
    return (1.0 - alpha) / (special.gamma(2.0 - alpha) * math.cos(0.5 * np.pi * alpha))


def abs_moment_gaussian(alpha: float) -> float:
    """E|G|**alpha for a standard normal G."""
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    return 2.0 ** (0.5 * alpha) * special.gamma(0.5 * (alpha + 1.0)) / math.sqrt(np.pi)
