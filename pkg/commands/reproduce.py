"""
Dataset-tier checks against an externally supplied copy of the
victim-list data.

The directory must hold a reproduce.json manifest:

    {
      "histograms": "lists.csv",
      "records": "records.csv",
      "target_label": "...",
      "excluded_labels": ["...", "..."],
      "split": {"list_id": "...", "key": "death_year", "value": "1942"}
    }

"records" and "split" are optional. Every check whose inputs are missing
is reported as SKIPPED, never as FAIL.
"""

import json
import logging
import math
import os
from dataclasses import dataclass

import click

from commands.common import finish, load_dataset, load_records, make_config, run_options
from diagnostics import bias_report, largest_subset_slope, threshold_sweep
from engine import fit_and_rank
from errors import ValidationError
from records import exclude_lists, split_and_augment
from report import AnalysisReport

logger = logging.getLogger('tvor.cli')

MANIFEST = 'reproduce.json'
DATASET_ENV = 'TVOR_DATASET_DIR'

EXCLUSION_SCORES = {1: 44.19, 100: 44.20}
EXCLUSION_ABS_TOL = 0.005
SIGNED_LINE = (-5.67649e-6, 0.858288)
ABSOLUTE_LINE = (4.017e-5, 2.128)
LINE_REL_TOL = 0.01
SIGNED_CORRELATION = -0.0175
CORRELATION_ABS_TOL = 1e-3
LARGEST_SUBSET = 7
LARGEST_SLOPE = -3.6471e-5
SPLIT_RANKS = (1, 30)
SWEEP_TOP = (736, 742)


@dataclass(frozen=True)
class Check:
    name: str
    status: str
    expected: str
    observed: str = ''
    note: str = ''

    def to_dict(self) -> dict:
        return {
            'check': self.name,
            'status': self.status,
            'expected': self.expected,
            'observed': self.observed,
            'note': self.note,
        }


def _within_rel(observed: float, expected: float, tol: float = LINE_REL_TOL) -> bool:
    return abs(observed - expected) <= tol * abs(expected)


def _verdict(ok: bool) -> str:
    return 'PASS' if ok else 'FAIL'


def read_manifest(dataset_dir: str | None) -> dict | None:
    if not dataset_dir:
        return None
    path = os.path.join(dataset_dir, MANIFEST)
    if not os.path.isfile(path):
        logger.warning(f"No {MANIFEST} in {dataset_dir}; dataset checks skipped")
        return None
    try:
        with open(path, encoding='utf-8') as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"Cannot read {path}: {e}")
    if not isinstance(manifest, dict) or 'histograms' not in manifest or 'target_label' not in manifest:
        raise ValidationError(f"{path} needs at least 'histograms' and 'target_label'")
    return manifest


def exclusion_checks(path: str, manifest: dict, fit_mode: str) -> list[Check]:
    checks = []
    target = manifest['target_label']
    for min_size, expected in EXCLUSION_SCORES.items():
        name = f"exclusion_d_abs_min{min_size}"
        ds, _ = load_dataset(path, min_size)
        remaining = exclude_lists(ds, manifest.get('excluded_labels', []))
        _, scores = fit_and_rank(remaining, fit_mode)
        observed = next((s.d_abs for s in scores if s.label == target), math.nan)
        checks.append(Check(name, _verdict(abs(observed - expected) <= EXCLUSION_ABS_TOL),
                            f"{expected}", f"{observed:.4f}"))
    return checks


def regression_checks(scores) -> list[Check]:
    signed = bias_report(scores, use_signed=True)
    absolute = bias_report(scores, use_signed=False)
    largest = largest_subset_slope(scores, LARGEST_SUBSET)
    return [
        Check('signed_line', _verdict(_within_rel(signed.line.slope, SIGNED_LINE[0])
                                      and _within_rel(signed.line.intercept, SIGNED_LINE[1])),
              f"{SIGNED_LINE[0]} / {SIGNED_LINE[1]}", f"{signed.line.slope:.6g} / {signed.line.intercept:.6g}"),
        Check('absolute_line', _verdict(_within_rel(absolute.line.slope, ABSOLUTE_LINE[0])
                                        and _within_rel(absolute.line.intercept, ABSOLUTE_LINE[1])),
              f"{ABSOLUTE_LINE[0]} / {ABSOLUTE_LINE[1]}",
              f"{absolute.line.slope:.6g} / {absolute.line.intercept:.6g}"),
        Check('signed_correlation',
              _verdict(abs(signed.correlation - SIGNED_CORRELATION) <= CORRELATION_ABS_TOL),
              f"{SIGNED_CORRELATION}", f"{signed.correlation:.6g}"),
        Check('largest_subset_slope', _verdict(_within_rel(largest.slope, LARGEST_SLOPE)),
              f"{LARGEST_SLOPE}", f"{largest.slope:.6g}"),
    ]


def split_check(manifest: dict, dataset_dir: str, ds, fit_mode: str) -> Check:
    expected = f"{SPLIT_RANKS[0]} / {SPLIT_RANKS[1]}"
    split = manifest.get('split')
    if not manifest.get('records') or not split:
        return Check('split_ranks', 'SKIPPED', expected, note='no records file or split settings')

    rs = load_records(os.path.join(dataset_dir, manifest['records']))
    if split.get('list_id'):
        rs = rs.for_list(split['list_id'])
    result, _, scores = split_and_augment(rs, split['key'], str(split['value']), ds, fit_mode)
    ranks = {s.label: s.rank for s in scores}
    observed = (ranks[result.match.label], ranks[result.rest.label])
    return Check('split_ranks', _verdict(observed == SPLIT_RANKS), expected, f"{observed[0]} / {observed[1]}")


def run_checks(dataset_dir: str | None, fit_mode: str, min_size: int) -> list[Check]:
    manifest = read_manifest(dataset_dir)
    if manifest is None:
        names = ['full_dataset_top_label', 'exclusion_d_abs_min1', 'exclusion_d_abs_min100', 'signed_line',
                 'absolute_line', 'signed_correlation', 'largest_subset_slope', 'split_ranks', 'sweep_top_label']
        return [Check(name, 'SKIPPED', '', note='no dataset directory') for name in names]

    path = os.path.join(dataset_dir, manifest['histograms'])
    target = manifest['target_label']
    checks = []

    ds, _ = load_dataset(path, min_size)
    _, scores = fit_and_rank(ds, fit_mode)
    checks.append(Check('full_dataset_top_label', _verdict(scores[0].label == target), target, scores[0].label))
    checks.extend(exclusion_checks(path, manifest, fit_mode))
    checks.extend(regression_checks(scores))
    checks.append(split_check(manifest, dataset_dir, ds, fit_mode))

    sweep = threshold_sweep(ds, fit_mode)
    observed = (sweep.top_label_counts().get(target, 0), len(sweep.rows))
    checks.append(Check('sweep_top_label', _verdict(observed == SWEEP_TOP),
                        f"{SWEEP_TOP[0]} / {SWEEP_TOP[1]}", f"{observed[0]} / {observed[1]}"))
    return checks


@click.command('reproduce')
@click.option('--dataset-dir', type=click.Path(file_okay=False), envvar=DATASET_ENV, default=None,
              help=f'Directory with {MANIFEST} and the data it names (falls back to {DATASET_ENV}).')
@run_options(dataset=True)
def reproduce_command(dataset_dir, config_path, seed, out, fmt, fit_mode, min_size):
    """Run the dataset-tier checks; missing data is SKIPPED, not failed."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    if dataset_dir and not os.path.isdir(dataset_dir):
        raise ValidationError(f"Dataset directory {dataset_dir} does not exist")

    checks = run_checks(dataset_dir, config.fit_mode, config.min_size_filter)
    for check in checks:
        if check.status == 'SKIPPED':
            logger.info(f"SKIPPED {check.name}: {check.note}")

    report = AnalysisReport('reproduce', config)
    report.add('summary', {status: sum(1 for c in checks if c.status == status)
                           for status in ('PASS', 'FAIL', 'SKIPPED')})
    report.add('checks', checks, table=True)
    finish(report, out)


COMMANDS = [reproduce_command]
