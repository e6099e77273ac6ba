"""
Record-level experiment commands: substitute, split.
"""

import click

from commands.common import finish, load_dataset, load_records, make_config, run_options
from ingest import export_records
from records import record_set_to_dataset, split_and_augment, split_by_attribute, substitute_closest
from report import AnalysisReport

RECORDS = click.argument('records_path', metavar='RECORDS', type=click.Path(exists=True, dir_okay=False))


@click.command('substitute')
@RECORDS
@click.option('--export', 'export_path', type=click.Path(dir_okay=False), default=None,
              help='Also write the substituted records as CSV.')
@run_options()
def substitute_command(records_path, export_path, config_path, seed, out, fmt):
    """Replace stated birth years by their closest alternative years."""
    config = make_config(config_path, seed, fmt)
    rs = load_records(records_path)
    substituted, summary = substitute_closest(rs)
    if export_path:
        export_records(substituted, export_path)

    diffs = summary.abs_diff_histogram
    report = AnalysisReport('substitute', config)
    report.add('substitution', summary)
    report.add('abs_diff', [
        {'difference': k, 'count': c} for k, c in zip(diffs.keys.tolist(), diffs.counts.tolist())
    ], table=True)
    finish(report, out)


@click.command('split')
@RECORDS
@click.option('--key', required=True, help='Attribute to split on, e.g. death_year.')
@click.option('--value', required=True, help='Attribute value of the matching side, e.g. 1942.')
@click.option('--augment', is_flag=True, help='Add both sides to a dataset and rank them.')
@click.option('--dataset', 'dataset_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Dataset to augment (default: one histogram per list of RECORDS).')
@run_options(dataset=True)
def split_command(records_path, key, value, augment, dataset_path,
                  config_path, seed, out, fmt, fit_mode, min_size):
    """Split records by an attribute and compare the two sides."""
    config = make_config(config_path, seed, fmt, fit_mode, min_size)
    rs = load_records(records_path)

    report = AnalysisReport('split', config)
    if not augment:
        report.add('split', split_by_attribute(rs, key, value))
        finish(report, out)
        return

    if dataset_path:
        ds, ingestion = load_dataset(dataset_path, config.min_size_filter)
    else:
        ds, summary = record_set_to_dataset(rs, config.min_size_filter)
        ingestion = {'path': records_path, 'format': 'records', **summary.to_dict()}

    split, model, scores = split_and_augment(rs, key, value, ds, config.fit_mode)
    ranks = {s.label: s.rank for s in scores}
    report.add('input', ingestion)
    report.add('split', split)
    report.add('model', model)
    report.add('split_ranks', {
        'match': {'label': split.match.label, 'rank': ranks[split.match.label]},
        'rest': {'label': split.rest.label, 'rank': ranks[split.rest.label]},
        'ranked': len(scores),
    })
    report.add('scores', scores, table=True)
    finish(report, out)


COMMANDS = [substitute_command, split_command]
