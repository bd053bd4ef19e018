#!/usr/bin/env python3
"""
stablefield command-line harness.

Subcommands:
  simulate  - one marked sample as CSV (x, y, mark)
  ci        - subsampling intervals for one dataset as JSON
  coverage  - full coverage study as CSV (optionally an Excel workbook)
  oracle    - limit-theory quantities as JSON

Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 numerical failure (an oracle or interval that did not converge).
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

import numpy as np

import config as settings
from stablefield.errors import ConfigError, DomainError, NumericError
from stablefield.harness import (analyze_sample, compare_to_reference, emit, region_label,
                                 resolve_filter, run_study)
from stablefield.limit_theory import DEFAULT_DRAWS, ORACLE_QUANTITIES, evaluate_oracles
from stablefield.random_field import ModelSpec, build_filter, simulate_sample
from stablefield.statistics import read_marked_sample_csv
from stablefield.subsampling import AnchorMode

logger = logging.getLogger('stablefield.cli')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _add_experiment_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='JSON experiment configuration file')
    parser.add_argument('--preset', choices=sorted(settings.PRESETS), help='Named experiment preset')
    parser.add_argument('--alpha', help='Stability index, or comma-separated list')
    parser.add_argument('--c', help='Block ratio, or comma-separated list')
    parser.add_argument('--method', help='known_alpha, self_normalized, or both comma-separated')
    parser.add_argument('--level', help='Nominal coverage level(s), comma-separated')
    parser.add_argument('--reps', type=int, help='Replications per cell')
    parser.add_argument('--mc-draws', type=int, help='Subsampling anchor draws M')
    parser.add_argument('--terms', type=int, help='Series terms I')
    parser.add_argument('--region', help='Region as a,b,n (prototype sides and scale)')
    parser.add_argument('--seed', type=int, help='Master seed')
    parser.add_argument('--workers', type=int, help='Worker processes')
    parser.add_argument('--out', help='Output path (stdout when omitted)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='stablefield',
                                     description='Stable marked point process simulation and subsampling inference')
    parser.add_argument('--log-level', default=None, choices=['debug', 'info', 'warning', 'error'],
                        help='Logging level (default from STABLEFIELD_LOG_LEVEL)')
    subparsers = parser.add_subparsers(dest='command', required=True)

    simulate = subparsers.add_parser('simulate', help='Simulate one marked sample')
    _add_experiment_options(simulate)
    simulate.add_argument('--mu', type=float, help='True mean of the marks')

    ci = subparsers.add_parser('ci', help='Confidence intervals for one dataset')
    _add_experiment_options(ci)
    ci.add_argument('--input', required=True, help='CSV with coordinate columns and a mark column')
    ci.add_argument('--anchor-mode', choices=[m.value for m in AnchorMode], default=AnchorMode.MONTE_CARLO.value)

    coverage = subparsers.add_parser('coverage', help='Run a coverage study')
    _add_experiment_options(coverage)
    coverage.add_argument('--workbook', help='Also write a styled Excel workbook to this path')
    coverage.add_argument('--compare', action='store_true',
                          help='Log deltas against published coverage for matching regions')

    oracle = subparsers.add_parser('oracle', help='Evaluate limit-theory oracle quantities')
    oracle.add_argument('--quantity', default='scale_mean',
                        help=f'Comma-separated subset of {",".join(ORACLE_QUANTITIES)}')
    oracle.add_argument('--alpha', type=float, default=1.5)
    oracle.add_argument('--filter', default='gauss2d', help='Built-in filter name')
    oracle.add_argument('--dimension', type=int, help='Dimension for dimension-generic filters')
    oracle.add_argument('--r', type=float, default=1.0, help='Intensity r')
    oracle.add_argument('--draws', type=int, default=DEFAULT_DRAWS)
    oracle.add_argument('--seed', type=int, default=settings.DEFAULT_SEED)
    oracle.add_argument('--workers', type=int, default=1)
    oracle.add_argument('--out', help='Output path (stdout when omitted)')
    return parser


def resolve_config(args: argparse.Namespace):
    """Config file or preset first, then flag overrides, validated once."""
    if args.config and args.preset:
        raise ConfigError("Use either --config or --preset, not both")
    if args.config:
        base = settings.load_experiment_config(args.config)
    elif args.preset:
        base = settings.preset_config(args.preset)
    else:
        base = settings.experiment_config_from_dict({})
    return settings.apply_overrides(
        base,
        alphas=settings.parse_float_list(args.alpha),
        c_values=settings.parse_float_list(args.c),
        methods=settings.parse_methods(args.method),
        nominal_levels=settings.parse_float_list(args.level),
        replications=args.reps,
        mc_draws=args.mc_draws,
        series_terms=args.terms,
        region=settings.parse_region(args.region),
        master_seed=args.seed,
        workers=args.workers,
        true_mu=getattr(args, 'mu', None),
    )


def _write_text(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, 'w') as f:
            f.write(text)
        logger.info(f"[OUTPUT] Wrote {path}")
    else:
        sys.stdout.write(text)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    alpha = config.alphas[0]
    model = ModelSpec(filter=resolve_filter(config.filter), alpha=alpha, mu=config.true_mu)
    rng = np.random.Generator(np.random.Philox(config.master_seed))
    sample = simulate_sample(model, config.region, config.intensity, config.series_terms, rng)
    logger.info(f"[SIMULATE] alpha={alpha} region={config.region.to_dict()} points={sample.count}")
    _write_text(sample.to_frame().to_csv(index=False), args.out)
    return EXIT_OK


def cmd_ci(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    sample = read_marked_sample_csv(args.input, config.region, config.intensity)
    logger.info(f"[CI] Loaded {sample.count} marked points from {args.input}")
    records = analyze_sample(sample, config.alphas, config.c_values, config.methods, config.nominal_levels,
                             config.mc_draws, config.master_seed, anchor_mode=AnchorMode(args.anchor_mode),
                             tiny_sigma=config.tiny_sigma)
    _write_text(json.dumps(records, indent=2) + '\n', args.out)
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    table = run_study(config)
    emit(table, args.out)

    label = region_label(config.region)
    comparison = compare_to_reference(table, label) if label else None
    if args.compare:
        if comparison is None:
            logger.warning("[STUDY] No published coverage for this region; skipping comparison")
        else:
            for row in comparison.dropna(subset=['reference']).itertuples():
                logger.info(f"[COMPARE] alpha={row.alpha} c={row.c} {row.method} level={row.level}: "
                            f"coverage={row.coverage:.3f} reference={row.reference:.3f} delta={row.delta:+.3f}")
    if args.workbook:
        from processors.coverage_report_processor import write_coverage_workbook
        write_coverage_workbook(table.frame, args.workbook, reference=comparison)
        logger.info(f"[OUTPUT] Workbook written to {args.workbook}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    quantities = [q.strip() for q in args.quantity.split(',') if q.strip()]
    spec = {'name': args.filter}
    if args.dimension is not None:
        spec['dimension'] = args.dimension
    filter_spec = build_filter(spec)
    records = evaluate_oracles(quantities, filter_spec, args.alpha, r=args.r, draws=args.draws,
                               seed=args.seed, workers=args.workers)
    _write_text(json.dumps(records, indent=2) + '\n', args.out)
    return EXIT_OK


COMMANDS = {
    'simulate': cmd_simulate,
    'ci': cmd_ci,
    'coverage': cmd_coverage,
    'oracle': cmd_oracle,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings.configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as e:
        logger.error(f"[ERROR] Configuration error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"[ERROR] I/O error: {e}")
        return EXIT_IO
    except NumericError as e:
        logger.error(f"[ERROR] Numerical failure: {e}")
        return EXIT_NUMERIC


if __name__ == '__main__':
    sys.exit(main())
