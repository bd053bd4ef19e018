"""
Seeded coverage studies of the subsampling confidence intervals.

Every replication derives its own random stream from
(master_seed, alpha, c, rep_index), so tables do not depend on the number of
worker processes.
"""

import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from stablefield.errors import ConfigError, DomainError, ReportIOError
from stablefield.point_process import Region
from stablefield.random_field import FilterSpec, ModelSpec, build_filter, simulate_sample
from stablefield.statistics import MarkedSample, sample_mean, sample_std
from stablefield.subsampling import (AnchorMode, Method, SubsampleConfig, build_distribution,
                                     confidence_interval)

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ['alpha', 'c', 'method', 'level', 'coverage', 'se', 'reps', 'mean_width', 'mean_count']
REFERENCE_PATH = os.path.join(os.path.dirname(__file__), 'data', 'reference_coverage.csv')
# One child stream per method, always in this order
METHOD_STREAM_ORDER = (Method.KNOWN_ALPHA, Method.SELF_NORMALIZED)


@lru_cache(maxsize=16)
def _cached_filter(key: str) -> FilterSpec:
    return build_filter(json.loads(key))


def resolve_filter(spec: Dict[str, Any]) -> FilterSpec:
    """Build a filter from its config entry, reusing earlier builds within a process."""
    return _cached_filter(json.dumps(spec, sort_keys=True))


@dataclass(frozen=True)
class ExperimentConfig:
    """One coverage study: a grid of (alpha, c) cells, each replicated R times."""
    region: Region = field(default_factory=lambda: Region(sides=(10.0, 10.0)))
    alphas: Tuple[float, ...] = (1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9)
    c_values: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    methods: Tuple[Method, ...] = (Method.KNOWN_ALPHA, Method.SELF_NORMALIZED)
    nominal_levels: Tuple[float, ...] = (0.90, 0.95, 0.99)
    replications: int = 1000
    mc_draws: int = 10_000
    series_terms: int = 100
    intensity: float = 1.0
    master_seed: int = 20240601
    true_mu: float = 0.0
    workers: int = 1
    filter: Dict[str, Any] = field(default_factory=lambda: {'name': 'gauss2d'})
    tiny_sigma: float = 1e-10
    anchor_mode: AnchorMode = AnchorMode.MONTE_CARLO

    def __post_init__(self):
        try:
            object.__setattr__(self, 'alphas', tuple(float(a) for a in self.alphas))
            object.__setattr__(self, 'c_values', tuple(float(c) for c in self.c_values))
            object.__setattr__(self, 'methods', tuple(Method(m) for m in self.methods))
            object.__setattr__(self, 'nominal_levels', tuple(float(level) for level in self.nominal_levels))
            object.__setattr__(self, 'anchor_mode', AnchorMode(self.anchor_mode))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid experiment configuration: {exc}") from exc
        self.validate()

    def validate(self) -> None:
        problems = []
        if not self.alphas:
            problems.append("alphas must not be empty")
        if any(not 0.0 < a < 2.0 for a in self.alphas):
            problems.append(f"alphas must lie in (0, 2): {self.alphas}")
        if Method.KNOWN_ALPHA in self.methods and any(a <= 1.0 for a in self.alphas):
            problems.append("known_alpha intervals need every alpha > 1")
        if not self.c_values or any(not 0.0 < c < 1.0 for c in self.c_values):
            problems.append(f"c_values must be nonempty and lie in (0, 1): {self.c_values}")
        if not self.methods:
            problems.append("methods must not be empty")
        if not self.nominal_levels or any(not 0.0 < level < 1.0 for level in self.nominal_levels):
            problems.append(f"nominal_levels must be nonempty and lie in (0, 1): {self.nominal_levels}")
        for name in ('replications', 'mc_draws', 'series_terms', 'workers'):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be at least 1")
        if not self.intensity > 0.0:
            problems.append(f"intensity must be positive: {self.intensity}")
        if not self.tiny_sigma > 0.0:
            problems.append(f"tiny_sigma must be positive: {self.tiny_sigma}")
        if not 0 <= self.master_seed < 2 ** 64:
            problems.append(f"master_seed must be a 64-bit unsigned integer: {self.master_seed}")
        if not problems:
            try:
                filter_spec = resolve_filter(self.filter)
            except DomainError as exc:
                problems.append(str(exc))
            else:
                if filter_spec.dimension != self.region.dimension:
                    problems.append(f"filter dimension {filter_spec.dimension} does not match "
                                    f"region dimension {self.region.dimension}")
        if problems:
            raise ConfigError("; ".join(problems))

    def with_overrides(self, **changes) -> 'ExperimentConfig':
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'region': self.region.to_dict(), 'alphas': list(self.alphas), 'c_values': list(self.c_values),
            'methods': [m.value for m in self.methods], 'nominal_levels': list(self.nominal_levels),
            'replications': self.replications, 'mc_draws': self.mc_draws, 'series_terms': self.series_terms,
            'intensity': self.intensity, 'master_seed': self.master_seed, 'true_mu': self.true_mu,
            'workers': self.workers, 'filter': dict(self.filter), 'tiny_sigma': self.tiny_sigma,
            'anchor_mode': self.anchor_mode.value,
        }


@dataclass(frozen=True)
class IntervalOutcome:
    method: Method
    level: float
    lower: float
    upper: float
    covered: bool

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ReplicationRecord:
    alpha: float
    c: float
    rep_index: int
    count: int
    mean: Optional[float]
    std: Optional[float]
    degenerate: bool
    outcomes: Tuple[IntervalOutcome, ...] = ()
    zero_count_fractions: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CoverageTable:
    """Per-cell coverage summary; ``degenerate`` counts excluded replications."""
    frame: pd.DataFrame
    degenerate: int = 0

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def empty(self) -> bool:
        return self.frame.empty


def child_seed(master_seed: int, alpha: float, c: float, rep_index: int) -> np.random.SeedSequence:
    """Seed sequence keyed on the study cell and replication index."""
    return np.random.SeedSequence(entropy=master_seed,
                                  spawn_key=(round(alpha * 1e6), round(c * 1e6), rep_index))


def _streams(seed: np.random.SeedSequence) -> Dict[str, np.random.Generator]:
    children = seed.spawn(1 + len(METHOD_STREAM_ORDER))
    streams = {'sample': np.random.Generator(np.random.Philox(children[0]))}
    for method, child in zip(METHOD_STREAM_ORDER, children[1:]):
        streams[method.value] = np.random.Generator(np.random.Philox(child))
    return streams


def interval_outcomes(sample: MarkedSample, config: ExperimentConfig, alpha: float, c: float,
                      streams: Dict[str, np.random.Generator]) -> Tuple[List[IntervalOutcome], Dict[str, float]]:
    outcomes, zero_fractions = [], {}
    for method in config.methods:
        sub_config = SubsampleConfig(c=c, num_draws=config.mc_draws, method=method,
                                     alpha=alpha if method is Method.KNOWN_ALPHA else None,
                                     tiny_sigma=config.tiny_sigma, anchor_mode=config.anchor_mode)
        dist = build_distribution(sample, sub_config, streams[method.value])
        zero_fractions[method.value] = dist.zero_count_fraction
        for level in config.nominal_levels:
            ci = confidence_interval(sample, dist, level)
            outcomes.append(IntervalOutcome(method=method, level=level, lower=ci.lower, upper=ci.upper,
                                            covered=ci.contains(config.true_mu)))
    return outcomes, zero_fractions


def run_replication(config: ExperimentConfig, alpha: float, c: float, rep_index: int) -> ReplicationRecord:
    """Simulate one marked sample and record interval hits for every method and level."""
    streams = _streams(child_seed(config.master_seed, alpha, c, rep_index))
    model = ModelSpec(filter=resolve_filter(config.filter), alpha=alpha, mu=config.true_mu)
    sample = simulate_sample(model, config.region, config.intensity, config.series_terms, streams['sample'])

    if sample.count == 0:
        logger.warning(f"[REPLICATION] Empty region for alpha={alpha} c={c} rep={rep_index}; excluded")
        return ReplicationRecord(alpha=alpha, c=c, rep_index=rep_index, count=0, mean=None, std=None,
                                 degenerate=True)

    outcomes, zero_fractions = interval_outcomes(sample, config, alpha, c, streams)
    logger.debug(f"[REPLICATION] alpha={alpha} c={c} rep={rep_index} N={sample.count}")
    return ReplicationRecord(alpha=alpha, c=c, rep_index=rep_index, count=sample.count,
                             mean=sample_mean(sample), std=sample_std(sample), degenerate=False,
                             outcomes=tuple(outcomes), zero_count_fractions=zero_fractions)


def _run_task(task: Tuple[ExperimentConfig, float, float, int]) -> ReplicationRecord:
    return run_replication(*task)


def summarize_cell(records: Sequence[ReplicationRecord], config: ExperimentConfig) -> List[Dict[str, Any]]:
    valid = [rec for rec in records if not rec.degenerate]
    rows = []
    if not valid:
        return rows
    mean_count = float(np.mean([rec.count for rec in valid]))
    for method in config.methods:
        for level in config.nominal_levels:
            hits = [o for rec in valid for o in rec.outcomes if o.method is method and o.level == level]
            coverage = float(np.mean([o.covered for o in hits]))
            rows.append({
                'alpha': valid[0].alpha, 'c': valid[0].c, 'method': method.value, 'level': level,
                'coverage': coverage,
                'se': math.sqrt(coverage * (1.0 - coverage) / len(hits)),
                'reps': len(hits),
                'mean_width': float(np.mean([o.width for o in hits])),
                'mean_count': mean_count,
            })
    return rows


def run_study(config: ExperimentConfig) -> CoverageTable:
    """Run every (alpha, c) cell and aggregate coverage, standard errors and widths.

    Results come back in task order whatever the worker count.
    """
    config.validate()
    tasks = [(config, alpha, c, rep) for alpha in config.alphas for c in config.c_values
             for rep in range(config.replications)]
    logger.info(f"[STUDY] {len(config.alphas)} alphas x {len(config.c_values)} c values x "
                f"{config.replications} reps on {config.workers} worker(s)")

    if config.workers > 1:
        chunksize = max(1, len(tasks) // (8 * config.workers))
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            records = list(executor.map(_run_task, tasks, chunksize=chunksize))
    else:
        records = [_run_task(task) for task in tasks]

    rows, degenerate = [], 0
    per_cell = config.replications
    for start in range(0, len(records), per_cell):
        cell = records[start:start + per_cell]
        degenerate += sum(rec.degenerate for rec in cell)
        cell_rows = summarize_cell(cell, config)
        for row in cell_rows:
            logger.info(f"[CELL] alpha={row['alpha']} c={row['c']} {row['method']} level={row['level']}: "
                        f"coverage={row['coverage']:.3f} (se {row['se']:.4f})")
        rows.extend(cell_rows)

    if degenerate:
        logger.warning(f"[STUDY] {degenerate} degenerate replication(s) excluded")
    return CoverageTable(frame=pd.DataFrame(rows, columns=TABLE_COLUMNS), degenerate=degenerate)


def emit(table: CoverageTable, path: Optional[str] = None) -> Optional[str]:
    """Write the table as CSV with six-decimal floats to ``path``, or to stdout when it is None."""
    if table.empty:
        raise DomainError("Refusing to emit an empty coverage table")
    target = path if path else sys.stdout
    try:
        table.frame.to_csv(target, index=False, columns=TABLE_COLUMNS, float_format='%.6f', lineterminator='\n')
    except OSError as exc:
        raise ReportIOError(f"Cannot write coverage table to {path}: {exc}") from exc
    if path:
        logger.info(f"[STUDY] Coverage table written to {path}")
    return path


def read_table(path: str) -> CoverageTable:
    try:
        frame = pd.read_csv(path)
    except OSError as exc:
        raise ReportIOError(f"Cannot read coverage table {path}: {exc}") from exc
    missing = [c for c in TABLE_COLUMNS if c not in frame.columns]
    if missing:
        raise DomainError(f"Coverage table {path} is missing columns {missing}")
    return CoverageTable(frame=frame[TABLE_COLUMNS])


def region_label(region: Region) -> Optional[str]:
    """Name of the published grid matching the region, if any."""
    if region.scale != 1.0:
        return None
    sides = tuple(round(s, 9) for s in region.sides)
    return {(10.0, 10.0): 'square', (5.0, 20.0): 'rectangle'}.get(sides)


def load_reference(region_name: Optional[str] = None) -> pd.DataFrame:
    reference = pd.read_csv(REFERENCE_PATH)
    if region_name is not None:
        reference = reference[reference['region'] == region_name]
    return reference.reset_index(drop=True)


def compare_to_reference(table: CoverageTable, region_name: str) -> pd.DataFrame:
    """Join coverage cells with published values; adds ``reference`` and ``delta`` columns."""
    reference = load_reference(region_name)
    if reference.empty:
        raise DomainError(f"No reference coverage for region '{region_name}'")
    keys = ['alpha', 'c', 'method', 'level']
    left = table.frame.copy()
    right = reference.rename(columns={'coverage': 'reference'})[keys + ['reference']].copy()
    for frame in (left, right):
        for key in ('alpha', 'c', 'level'):
            frame[key] = frame[key].astype(float).round(6)
    merged = left.merge(right, on=keys, how='left')
    merged['delta'] = merged['coverage'] - merged['reference']
    return merged


def analyze_sample(sample: MarkedSample, alphas: Sequence[float], c_values: Sequence[float],
                   methods: Sequence[Method], levels: Sequence[float], mc_draws: int, seed: int,
                   anchor_mode: AnchorMode = AnchorMode.MONTE_CARLO,
                   tiny_sigma: float = 1e-10) -> List[Dict[str, Any]]:
    """Interval records for one observed dataset, one per (alpha, c, method)."""
    if sample.count == 0:
        raise DomainError("Cannot build intervals from an empty sample")
    records = []
    for alpha in alphas:
        for c in c_values:
            streams = _streams(child_seed(seed, alpha, c, 0))
            for method in methods:
                method = Method(method)
                config = SubsampleConfig(c=c, num_draws=mc_draws, method=method,
                                         alpha=alpha if method is Method.KNOWN_ALPHA else None,
                                         tiny_sigma=tiny_sigma, anchor_mode=anchor_mode)
                dist = build_distribution(sample, config, streams[method.value])
                intervals = [confidence_interval(sample, dist, level) for level in levels]
                record = dist.to_record(intervals)
                if method is Method.KNOWN_ALPHA:
                    record['alpha'] = alpha
                record['mean'] = sample_mean(sample)
                record['std'] = sample_std(sample)
                record['N'] = sample.count
                records.append(record)
        if all(Method(m) is Method.SELF_NORMALIZED for m in methods):
            # self-normalized records do not depend on alpha
            break
    return records
