"""Exception hierarchy shared by the simulation, inference and reporting layers."""

from typing import Any, Dict, Optional


class StableFieldError(Exception):
    """Base class for every error raised by stablefield."""


class DomainError(StableFieldError, ValueError):
    """A parameter lies outside the domain an operation accepts."""


class EmptySampleError(DomainError):
    """A statistic was requested on a sample with no observations."""


class DegenerateSampleError(DomainError):
    """A ratio statistic was requested on a sample with zero spread."""


class ConfigError(StableFieldError, ValueError):
    """An experiment configuration failed validation."""


class NumericError(StableFieldError, RuntimeError):
    """A numerical routine (quadrature) failed to reach its tolerance."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{base} ({details})"


class DegenerateLimitError(StableFieldError):
    """The requested limit law collapses to a point mass."""

    def __init__(self, message: str, point_mass: float):
        super().__init__(message)
        self.point_mass = point_mass


class ReportIOError(StableFieldError, OSError):
    """A result artefact could not be written or read."""
