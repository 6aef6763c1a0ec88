import argparse
import json
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

import numpy as np

from controllers.evaluation import WeightSet, quantization_error, walk_forward, weighted_mean
from controllers.forecast_engine import forecast
from models.config import FILE_KEYS, ForecastConfig, load_config
from models.series import normalize
from utils.errors import ConfigurationError, ForecastError, InputNotFoundError
from utils.helpers import format_float, setup_logging, write_csv, write_json
from utils.ingest import ingest_csv

logger = logging.getLogger(__name__)

COMMANDS = ['forecast', 'qerror', 'ensemble', 'aggregate']


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Multiscale complex Markov chain forecasting of sampled time series')
    parser.add_argument('command', choices=COMMANDS, help='Command to run')
    parser.add_argument('--input', help='Input CSV (aggregate: comma-separated list)')
    parser.add_argument('--column', help='Value column name or 0-based index (default: last)')
    parser.add_argument('--delimiter', help='CSV delimiter (default: detected)')
    parser.add_argument('--config', help='Flat key = value configuration file')
    parser.add_argument('--out', help='Output file')
    parser.add_argument('--diagnostics', help='Diagnostics JSON (default: output path with .json)')
    parser.add_argument('--plot', help='Also render a PNG plot to this path')
    parser.add_argument('--learning-lengths', help='Comma-separated learning-set lengths (ensemble)')
    parser.add_argument('--weights', help='Two-column label,weight CSV (aggregate)')
    parser.add_argument('--workers', type=int, default=1, help='Parallel ensemble members')
    parser.add_argument('--log-file', help='Also write the log to this file')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    # ForecastConfig values; unset flags leave config-file values in place
    group = parser.add_argument_group('forecast configuration')
    group.add_argument('--states', help='Number of states s (default 4)')
    group.add_argument('--order', help='Markov chain order r (default 2)')
    group.add_argument('--delta', help='Candidate probability threshold (default 0.0)')
    group.add_argument('--nmin', help='Minimal transitions before back-off (default 1)')
    group.add_argument('--horizon', help='Prediction horizon in base steps (default 16)')
    group.add_argument('--hierarchy', choices=['pow2', 'smooth'], help='Time increment hierarchy')
    group.add_argument('--returns', choices=['abs', 'rel'], help='Returns mode')
    group.add_argument('--quantizer', choices=['count', 'width', 'combined'], help='State division method')
    group.add_argument('--combined-k', help='Sigma multiplier of the combined method (default 3)')
    group.add_argument('--scenario', choices=['lower', 'upper', 'both'], help='Scenarios to compute')
    group.add_argument('--center', choices=['median', 'middle'], help='Centre-of-distribution rule')
    group.add_argument('--level-states', help='Per-level states, e.g. 8:6,16:3')
    group.add_argument('--level-orders', help='Per-level orders, e.g. 8:1')
    return parser


def _config_overrides(args: argparse.Namespace) -> Dict[str, Optional[str]]:
    return {key: getattr(args, key) for key in FILE_KEYS}


def _require_input(args: argparse.Namespace) -> str:
    if not args.input:
        raise InputNotFoundError("No input file given (--input)")
    return args.input


def _diagnostics_path(args: argparse.Namespace, out: str) -> str:
    return args.diagnostics or os.path.splitext(out)[0] + '.json'


def _parse_lengths(text: Optional[str]) -> List[int]:
    if not text:
        raise ConfigurationError("Ensemble needs --learning-lengths")
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ConfigurationError(f"Learning lengths must be integers: {text}")


def run_forecast(args: argparse.Namespace, config: ForecastConfig) -> None:
    series = ingest_csv(_require_input(args), args.column, args.delimiter)
    result = forecast(series, config)
    out = args.out or 'forecast.csv'
    write_csv(out, result.to_columns())
    write_json(_diagnostics_path(args, out), result.diagnostics())
    print(f"Effective horizon: {result.horizon}")
    for level in result.levels:
        for warning in level.warnings:
            print(f"Warning: {warning}")
    print(f"Bifurcations: {result.bifurcation_count}")
    if args.plot:
        from visualization.forecast_plot import plot_forecast
        plot_forecast(series, result, args.plot)
    logger.info(f"Forecast written to {out}")


def run_qerror(args: argparse.Namespace, config: ForecastConfig) -> None:
    series = ingest_csv(_require_input(args), args.column, args.delimiter)
    report = quantization_error(series, config)
    out = args.out or 'qerror.json'
    write_json(out, report.to_dict())
    for step, s, stats in report.levels:
        print(f"Level {step} (s={s}): rms={format_float(stats.rms)} max={format_float(stats.max_abs)}")
    print(f"Spliced: rms={format_float(report.spliced.rms)} max={format_float(report.spliced.max_abs)}")


def run_ensemble(args: argparse.Namespace, config: ForecastConfig) -> None:
    series = ingest_csv(_require_input(args), args.column, args.delimiter)
    lengths = _parse_lengths(args.learning_lengths)
    result = walk_forward(series, lengths, config, workers=args.workers)
    out = args.out or 'ensemble.csv'
    write_csv(out, result.to_columns())
    write_json(_diagnostics_path(args, out), {
        'members': [length for length, _ in result.members],
        'skipped': result.skipped,
        'effective_horizon': len(result.mean) - 1,
    })
    print(f"Effective horizon: {len(result.mean) - 1}")
    for record in result.skipped:
        print(f"Warning: learning length {record['learning_length']} skipped: {record['message']}")
    if args.plot:
        from visualization.forecast_plot import plot_ensemble
        plot_ensemble(result, args.plot)


def run_aggregate(args: argparse.Namespace, config: ForecastConfig) -> None:
    paths = [path.strip() for path in _require_input(args).split(',') if path.strip()]
    labels = [os.path.splitext(os.path.basename(path))[0] for path in paths]
    normalized = [normalize(ingest_csv(path, args.column, args.delimiter).values) for path in paths]
    weights = WeightSet.from_csv(args.weights) if args.weights else WeightSet.uniform(labels)
    mean = weighted_mean(normalized, weights.aligned(labels))
    columns = {'index': np.arange(len(mean))}
    columns.update(zip(labels, normalized))
    columns['weighted_mean'] = mean
    out = args.out or 'aggregate.csv'
    write_csv(out, columns)
    print(f"Aggregated {len(paths)} series")


HANDLERS: Dict[str, Callable[[argparse.Namespace, ForecastConfig], None]] = {
    'forecast': run_forecast,
    'qerror': run_qerror,
    'ensemble': run_ensemble,
    'aggregate': run_aggregate,
}


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_file, logging.DEBUG if args.verbose else logging.INFO)
    try:
        config = load_config(args.config, _config_overrides(args))
        logger.info(f"Running {args.command}")
        HANDLERS[args.command](args, config)
    except ForecastError as exc:
        logger.error(f"{args.command} failed: {exc.message}")
        print(json.dumps(exc.to_dict(), sort_keys=True))
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"{args.command} failed unexpectedly")
        print(json.dumps({'code': 'internal_error', 'message': str(exc), 'context': {}},
                         sort_keys=True))
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
