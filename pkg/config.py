"""
Configuration for stablefield: environment defaults, logging setup,
experiment presets and JSON config loading with flag overrides.
"""

import json
import logging
import os
import sys
from typing import Any, Dict, Optional, Sequence

from stablefield.errors import ConfigError, DomainError
from stablefield.harness import ExperimentConfig
from stablefield.point_process import Region

# Environment defaults
DEFAULT_WORKERS = int(os.environ.get('STABLEFIELD_WORKERS', os.cpu_count() or 1))
LOG_LEVEL = os.environ.get('STABLEFIELD_LOG_LEVEL', 'INFO')
LOG_FILE = os.environ.get('STABLEFIELD_LOG_FILE')
DEFAULT_SEED = int(os.environ.get('STABLEFIELD_SEED', 20240601))
PORT = int(os.environ.get('PORT', 8000))
REPORT_TTL_SECONDS = int(os.environ.get('REPORT_TTL_SECONDS', 3600))

LOG_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'

_GRID = {
    'alphas': [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9],
    'c_values': [0.1, 0.2, 0.3, 0.4],
    'methods': ['known_alpha', 'self_normalized'],
    'nominal_levels': [0.90, 0.95, 0.99],
    'series_terms': 100,
    'intensity': 1.0,
}

PRESETS: Dict[str, Dict[str, Any]] = {
    'square': {**_GRID, 'region': {'sides': [10, 10], 'scale': 1}, 'replications': 1000, 'mc_draws': 10000},
    'rectangle': {**_GRID, 'region': {'sides': [5, 20], 'scale': 1}, 'replications': 1000, 'mc_draws': 10000},
    'desk-square': {**_GRID, 'region': {'sides': [10, 10], 'scale': 1}, 'replications': 500, 'mc_draws': 2000},
    'desk-rectangle': {**_GRID, 'region': {'sides': [5, 20], 'scale': 1}, 'replications': 500, 'mc_draws': 2000},
}

CONFIG_KEYS = {'region', 'alphas', 'c_values', 'methods', 'nominal_levels', 'replications', 'mc_draws',
               'series_terms', 'intensity', 'master_seed', 'true_mu', 'workers', 'filter', 'tiny_sigma',
               'anchor_mode'}


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """Configure root logging once; data output on stdout stays clean."""
    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = log_file or LOG_FILE
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode='a'))
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def experiment_config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a JSON-style mapping."""
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {unknown}")
    values = dict(data)
    try:
        if 'region' in values:
            values['region'] = Region.from_dict(values['region'])
        for key in ('alphas', 'c_values', 'methods', 'nominal_levels'):
            if key in values:
                values[key] = tuple(values[key])
        values.setdefault('master_seed', DEFAULT_SEED)
        values.setdefault('workers', DEFAULT_WORKERS)
        return ExperimentConfig(**values)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"Invalid configuration: {exc}") from exc


def load_experiment_config(path: str) -> ExperimentConfig:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return experiment_config_from_dict(data)


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}'. Available: {sorted(PRESETS)}")
    return experiment_config_from_dict(PRESETS[name])


def parse_float_list(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    try:
        return tuple(float(item) for item in text.split(',') if item.strip())
    except ValueError as exc:
        raise ConfigError(f"Expected comma-separated numbers, got '{text}'") from exc


def parse_region(text: Optional[str]) -> Optional[Region]:
    """Parse 'a,b,n' (prototype sides then scale); a lone 'a,b' uses n=1."""
    if text is None:
        return None
    values = parse_float_list(text)
    if len(values) not in (2, 3):
        raise ConfigError(f"Region must be given as a,b,n; got '{text}'")
    try:
        return Region(sides=values[:2], scale=values[2] if len(values) == 3 else 1.0)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def parse_methods(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    return tuple(item.strip() for item in text.split(',') if item.strip())


def apply_overrides(config: ExperimentConfig, alphas: Optional[Sequence[float]] = None,
                    c_values: Optional[Sequence[float]] = None, methods: Optional[Sequence[str]] = None,
                    nominal_levels: Optional[Sequence[float]] = None, replications: Optional[int] = None,
                    mc_draws: Optional[int] = None, series_terms: Optional[int] = None,
                    region: Optional[Region] = None, master_seed: Optional[int] = None,
                    workers: Optional[int] = None, true_mu: Optional[float] = None) -> ExperimentConfig:
    """Apply command-line overrides and re-validate."""
    try:
        return config.with_overrides(alphas=alphas, c_values=c_values, methods=methods,
                                     nominal_levels=nominal_levels, replications=replications,
                                     mc_draws=mc_draws, series_terms=series_terms, region=region,
                                     master_seed=master_seed, workers=workers, true_mu=true_mu)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
