"""
TVOR analysis commands: fit, score, rank, bias, sweep, iqr, exclude.
"""

import click

from commands.common import finish, labels_option, load_dataset, make_config, run_options
from diagnostics import (
    DEFAULT_LARGEST_SUBSET,
    bias_report,
    iqr_outliers,
    largest_subset_slope,
    renormalize_demo,
    threshold_sweep,
)
from engine import debias_iterative, fit_and_rank, fit_model, score
from errors import NotFoundError, ValidationError
from records import exclude_lists
from report import AnalysisReport

INPUT = click.argument('input_path', metavar='INPUT', type=click.Path(exists=True, dir_okay=False))


def _unranked(record) -> dict:
    row = record.to_dict()
    row.pop('rank')
    return row


@click.command('fit')
@INPUT
@run_options(dataset=True)
def fit_command(input_path, config_path, seed, out, fmt, fit_mode, min_size):
    """Fit m = a*N + b*sqrt(N) over a dataset."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)
    model = fit_model(ds, config.fit_mode)

    report = AnalysisReport('fit', config)
    report.add('input', ingestion)
    report.add('model', model)
    finish(report, out)


@click.command('score')
@INPUT
@click.option('--labels', default=None, help='Comma-separated labels to score (default: all).')
@run_options(dataset=True)
def score_command(input_path, labels, config_path, seed, out, fmt, fit_mode, min_size):
    """Score histograms against the dataset's fitted model, in input order."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)
    model = fit_model(ds, config.fit_mode)

    wanted = labels_option(labels)
    unknown = sorted(set(wanted) - set(ds.labels))
    if unknown:
        raise NotFoundError(f"Unknown labels: {', '.join(unknown)}")
    histograms = [ds.get(label) for label in wanted] if wanted else list(ds)

    report = AnalysisReport('score', config)
    report.add('input', ingestion)
    report.add('model', model)
    report.add('scores', [_unranked(score(model, h)) for h in histograms], table=True)
    finish(report, out)


@click.command('rank')
@INPUT
@click.option('--top', type=int, default=None, help='Keep only the first K ranks in the output.')
@run_options(dataset=True)
def rank_command(input_path, top, config_path, seed, out, fmt, fit_mode, min_size):
    """Rank histograms by descending |d'|."""
    if top is not None and top < 1:
        raise ValidationError("--top must be >= 1")
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)
    model, scores = fit_and_rank(ds, config.fit_mode)

    report = AnalysisReport('rank', config)
    report.add('input', ingestion)
    report.add('model', model)
    report.add('scores', scores[:top] if top else scores, table=True)
    finish(report, out)


@click.command('bias')
@INPUT
@click.option('--absolute', is_flag=True, help="Regress |d'| instead of signed d' on N.")
@click.option('--renormalize-demo', 'renormalize', is_flag=True,
              help="Also show |d'| divided by the absolute-score trend line (demonstration only).")
@click.option('--largest', type=int, default=None,
              help=f"Also regress |d'| on N over the K largest histograms (e.g. {DEFAULT_LARGEST_SUBSET}).")
@click.option('--debias', is_flag=True, help='Also run the iterative additive debias.')
@run_options(dataset=True)
def bias_command(input_path, absolute, renormalize, largest, debias,
                 config_path, seed, out, fmt, fit_mode, min_size):
    """Size-bias diagnostics of the d' scores."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)
    model, scores = fit_and_rank(ds, config.fit_mode)

    report = AnalysisReport('bias', config)
    report.add('input', ingestion)
    report.add('model', model)
    report.add('bias', bias_report(scores, use_signed=not absolute))

    if largest is not None:
        report.add('largest_subset', {'k': largest, 'line': largest_subset_slope(scores, largest)})

    if renormalize:
        trend = bias_report(scores, use_signed=False).line
        report.add('renormalization_demo', renormalize_demo(scores, trend))

    if debias:
        result = debias_iterative(scores, config.debias_max_iter, config.debias_tol)
        report.add('debias', {
            'a1': result.a1,
            'b1': result.b1,
            'iterations': result.iterations,
            'passes': [{'a1': a1, 'b1': b1} for a1, b1 in result.passes],
            'top_label_before': scores[0].label,
            'top_label_after': result.adjusted_scores[0].label,
            'adjusted_scores': list(result.adjusted_scores),
        })
    finish(report, out)


@click.command('sweep')
@INPUT
@run_options(dataset=True)
def sweep_command(input_path, config_path, seed, out, fmt, fit_mode, min_size):
    """Re-rank once per unique histogram size and record the top label."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)

    report = AnalysisReport('sweep', config)
    report.add('input', ingestion)
    report.add('sweep', threshold_sweep(ds, config.fit_mode), table=True)
    finish(report, out)


@click.command('iqr')
@INPUT
@click.option('--largest', type=int, default=20, show_default=True,
              help='Use the K largest histograms; 0 means all.')
@click.option('--k', 'multiplier', type=float, default=None, help='IQR multiplier (default 1.5).')
@run_options(dataset=True)
def iqr_command(input_path, largest, multiplier, config_path, seed, out, fmt, fit_mode, min_size):
    """Flag |d'| values above q3 + k*IQR."""
    if largest < 0:
        raise ValidationError("--largest must be >= 0")
    config = make_config(config_path, seed, fmt, fit_mode, min_size, iqr_multiplier=multiplier)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)
    model, scores = fit_and_rank(ds, config.fit_mode)

    subset = sorted(scores, key=lambda s: (-s.N, s.label))[:largest] if largest else scores
    verdict = iqr_outliers([(s.label, s.d_abs) for s in subset], config.iqr_multiplier)

    report = AnalysisReport('iqr', config)
    report.add('input', ingestion)
    report.add('model', model)
    report.add('iqr', verdict)
    report.add('values', [
        {'label': s.label, 'N': s.N, 'd_abs': s.d_abs, 'outlier': s.label in verdict.outlier_labels}
        for s in sorted(subset, key=lambda s: (-s.d_abs, -s.N, s.label))
    ], table=True)
    finish(report, out)


@click.command('exclude')
@INPUT
@click.option('--labels', required=True, help='Comma-separated labels to drop before ranking.')
@run_options(dataset=True)
def exclude_command(input_path, labels, config_path, seed, out, fmt, fit_mode, min_size):
    """Drop named lists, then refit and rank the rest."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    ds, ingestion = load_dataset(input_path, config.min_size_filter)
    excluded = labels_option(labels)
    remaining = exclude_lists(ds, excluded)
    model, scores = fit_and_rank(remaining, config.fit_mode)

    report = AnalysisReport('exclude', config)
    report.add('input', ingestion)
    report.add('exclusion', {'excluded': sorted(excluded), 'before': len(ds), 'remaining': len(remaining)})
    report.add('model', model)
    report.add('scores', scores, table=True)
    finish(report, out)


COMMANDS = [fit_command, score_command, rank_command, bias_command, sweep_command, iqr_command, exclude_command]
