"""
Data-quality commands: whipple, digits, chisq.
"""

import click

from commands.common import QUALITY_MIN_SIZE, finish, make_config, run_options, scales_option
from diagnostics import chi_square_scaling
from errors import NoDataError, NotFoundError, ValidationError
from histogram import DigitProfile, histogram_last_digit_profile, last_digit_profile, whipple_from_years
from ingest import ingest
from records import RecordSet, whipple_by_list
from report import AnalysisReport
from validators import parse_window

INPUT = click.argument('input_path', metavar='INPUT', type=click.Path(exists=True, dir_okay=False))


def _window_option(value):
    if value is None:
        return None
    window, error = parse_window(value)
    if error:
        raise ValidationError(error)
    return window


def _years_by_list(ds) -> dict[str, list[int]]:
    return {h.label: h.expand() for h in ds}


def _select(data, label: str | None):
    """The whole input, or one list of it."""
    if label is None:
        return data
    if isinstance(data, RecordSet):
        return data.for_list(label)
    h = data.get(label)
    if h is None:
        raise NotFoundError(f"Unknown label '{label}'")
    return [h]


@click.command('whipple')
@INPUT
@click.option('--window', default=None, help='Inclusive age window LOW-HIGH (default 23-62).')
@click.option('--reference-year', type=int, default=None,
              help='Year at which birth years are read as ages (default 1942).')
@run_options()
def whipple_command(input_path, window, reference_year, config_path, seed, out, fmt):
    """Whipple's index per list and overall, from birth years."""
    config = make_config(config_path, seed, fmt, whipple_window=_window_option(window),
                         reference_year=reference_year)
    data = ingest(input_path, 'auto', QUALITY_MIN_SIZE)

    if isinstance(data, RecordSet):
        per_list = whipple_by_list(data, config.whipple_window, config.reference_year)
        all_years = data.birth_years()
    else:
        per_list, all_years = {}, []
        for label, years in _years_by_list(data).items():
            all_years.extend(years)
            try:
                per_list[label] = whipple_from_years(years, config.whipple_window, config.reference_year)
            except NoDataError:
                per_list[label] = None

    overall = whipple_from_years(all_years, config.whipple_window, config.reference_year)
    rows = []
    for label, result in per_list.items():
        row = {'label': label, 'index': None, 'classification': None, 'ages_in_window': 0}
        if result is not None:
            row.update(result.to_dict())
        rows.append(row)

    report = AnalysisReport('whipple', config)
    report.add('whipple', overall)
    report.add('lists', rows, table=True)
    finish(report, out)


@click.command('digits')
@INPUT
@click.option('--label', default=None, help='Restrict to one list.')
@run_options()
def digits_command(input_path, label, config_path, seed, out, fmt):
    """Counts of birth years by last digit, with surplus over an even split."""
    config = make_config(config_path, seed, fmt)
    data = _select(ingest(input_path, 'auto', QUALITY_MIN_SIZE), label)

    if isinstance(data, RecordSet):
        profile = last_digit_profile(data.birth_years())
    else:
        totals = [0] * 10
        for h in data:
            for digit, count in enumerate(histogram_last_digit_profile(h).counts_by_last_digit):
                totals[digit] += count
        profile = DigitProfile(tuple(totals))

    even_share = profile.total / 10
    report = AnalysisReport('digits', config)
    report.add('digit_profile', profile)
    report.add('digits', [
        {'digit': d, 'count': profile[d], 'surplus': profile[d] - even_share}
        for d in range(10)
    ], table=True)
    finish(report, out)


@click.command('chisq')
@INPUT
@click.option('--label', default=None, help='Histogram to test (required when the input has several).')
@click.option('--scale', 'scales', default='1', show_default=True,
              help='Comma-separated integer factors applied to the counts, e.g. 1,2,4,8.')
@run_options()
def chisq_command(input_path, label, scales, config_path, seed, out, fmt):
    """Pearson chi-square against uniform for scaled copies of one histogram."""
    config = make_config(config_path, seed, fmt)
    data = ingest(input_path, 'histograms', QUALITY_MIN_SIZE)
    factors = scales_option(scales)

    if label is None:
        if len(data) != 1:
            raise ValidationError(f"Input has {len(data)} histograms; choose one with --label")
        h = next(iter(data))
    else:
        h = data.get(label)
        if h is None:
            raise NotFoundError(f"Unknown label '{label}'")

    report = AnalysisReport('chisq', config)
    report.add('histogram', {'label': h.label, 'N': h.N, 'bins': h.n})
    report.add('chisq', [{'scale': c, **result.to_dict()} for c, result in chi_square_scaling(h, factors)],
               table=True)
    finish(report, out)


COMMANDS = [whipple_command, digits_command, chisq_command]
