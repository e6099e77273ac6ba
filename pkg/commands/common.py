"""
Options and plumbing shared by every subcommand.
"""

import logging

import click

from config import OUTPUT_FORMATS, RunConfig, load_config
from engine import FIT_MODES, Dataset
from errors import ValidationError
from ingest import ingest
from records import RecordSet, record_set_to_dataset
from report import AnalysisReport, emit
from validators import parse_labels, parse_scales

logger = logging.getLogger('tvor.cli')

# Quality checks look at every non-empty list, not just rankable ones
QUALITY_MIN_SIZE = 1


def run_options(dataset: bool = False, formats=OUTPUT_FORMATS):
    """
    Attach --config, --seed, --out and --format; dataset commands also
    get --fit-mode and --min-size.
    """
    def decorator(f):
        options = [
            click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                         help='JSON file of run settings.'),
            click.option('--seed', type=int, default=None,
                         help='RNG seed; falls back to TVOR_SEED, then 12345.'),
            click.option('--out', type=click.Path(dir_okay=False), default=None,
                         help='Write the report here instead of stdout.'),
            click.option('--format', 'fmt', type=click.Choice(formats), default=None,
                         help='Report format.'),
        ]
        if dataset:
            options += [
                click.option('--fit-mode', type=click.Choice(FIT_MODES), default=None,
                             help='Least-squares variant for the expected-DTV model.'),
                click.option('--min-size', type=int, default=None,
                             help='Drop histograms with fewer elements (default 100).'),
            ]
        for option in reversed(options):
            f = option(f)
        return f
    return decorator


def make_config(config_path=None, seed=None, fmt=None, fit_mode=None, min_size=None, **extra) -> RunConfig:
    return load_config(config_path, {
        'rng_seed': seed,
        'output_format': fmt,
        'fit_mode': fit_mode,
        'min_size_filter': min_size,
        **extra,
    })


def load_dataset(path: str, min_size_filter: int) -> tuple[Dataset, dict]:
    """Histogram dataset from either input format, with an ingestion summary."""
    data = ingest(path, 'auto', min_size_filter)
    if isinstance(data, RecordSet):
        dataset, ingestion = record_set_to_dataset(data, min_size_filter)
        return dataset, {'path': path, 'format': 'records', **ingestion.to_dict()}
    return data, {
        'path': path,
        'format': 'histograms',
        'lists_kept': len(data),
        'lists_below_min_size': data.dropped_below_min_size,
    }


def load_records(path: str) -> RecordSet:
    data = ingest(path, 'records')
    logger.debug(f"Loaded {len(data)} records from {path}")
    return data


def labels_option(value: str | None) -> list[str]:
    return parse_labels(value or '')


def scales_option(value: str) -> list[int]:
    scales, error = parse_scales(value)
    if error:
        raise ValidationError(error)
    return scales


def finish(report: AnalysisReport, out: str | None):
    emit(report.render(report.config.output_format), out)
