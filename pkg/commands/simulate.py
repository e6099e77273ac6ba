"""
Synthetic data and Monte Carlo experiments.
"""

import click

from commands.common import finish, make_config, run_options
from diagnostics import near_uniform_shape
from errors import ValidationError
from histogram import dtv, last_digit_profile
from ingest import export_histograms, export_records
from report import AnalysisReport
from simulation import (
    BETA_SHAPE,
    DEFAULT_BINS,
    discretize_beta,
    estimate_curve,
    fit_randomness_term,
    glivenko_cantelli_curve,
    make_synthetic_dataset,
    make_synthetic_records,
    planted_outlier_spec,
    same_smoothness_spec,
    theoretical_dtv,
)
from validators import parse_int_list

SIMULATION_KINDS = ('planted', 'same-smoothness', 'near-uniform', 'records', 'gc-curve', 'expected-dtv')
DATA_KINDS = ('planted', 'same-smoothness', 'near-uniform', 'records')

DEFAULT_CURVE_BINS = 50
DEFAULT_GC_SIZES = '100,1000,10000,100000,1000000'
DEFAULT_ESTIMATE_SIZES = '100,300,1000,3000,10000,30000'


def _sizes_option(value: str) -> list[int]:
    sizes, error = parse_int_list(value, separators=',')
    if error:
        raise ValidationError(error)
    if not sizes or any(s < 1 for s in sizes):
        raise ValidationError("Sizes must be positive integers")
    return sizes


def _given(value, default):
    return default if value is None else value


def _histogram_rows(histograms) -> list[dict]:
    return [{'label': h.label, 'origin': h.origin, 'bins': h.n, 'N': h.N, 'dtv': dtv(h)} for h in histograms]


@click.command('simulate')
@click.argument('kind', type=click.Choice(SIMULATION_KINDS))
@click.option('--data', 'data_path', type=click.Path(dir_okay=False), default=None,
              help='Write the generated histograms or records here as CSV.')
@click.option('--count', type=int, default=None, help='Number of histograms or records to generate.')
@click.option('--size', type=int, default=None, help='Planted histogram size, or near-uniform total.')
@click.option('--heaping', type=float, default=0.3, show_default=True,
              help='Share of each bin moved onto years ending in 0, 2 or 5.')
@click.option('--bins', type=int, default=None, help='Bins of the discretized beta distribution.')
@click.option('--alpha', type=float, default=BETA_SHAPE[0], show_default=True, help='Beta shape alpha.')
@click.option('--beta', type=float, default=BETA_SHAPE[1], show_default=True, help='Beta shape beta.')
@click.option('--sizes', default=None, help='Comma-separated sample sizes for curve experiments.')
@click.option('--trials', type=int, default=50, show_default=True, help='Samples per size.')
@run_options()
def simulate_command(kind, data_path, count, size, heaping, bins, alpha, beta, sizes, trials,
                     config_path, seed, out, fmt):
    """Generate synthetic fixtures or run a Monte Carlo experiment."""
    config = make_config(config_path, seed, fmt)
    if kind in DATA_KINDS and not data_path:
        raise ValidationError(f"simulate {kind} needs --data PATH")
    minimum_count = 0 if kind == 'records' else 1
    if count is not None and count < minimum_count:
        raise ValidationError(f"--count must be >= {minimum_count}")
    if size is not None and size < 1:
        raise ValidationError("--size must be >= 1")
    if bins is not None and bins < 2:
        raise ValidationError("--bins must be >= 2")

    report = AnalysisReport('simulate', config)
    summary = {'kind': kind, 'seed': config.rng_seed}

    if kind == 'planted':
        spec = planted_outlier_spec(smooth_count=_given(count, 60), planted_size=_given(size, 5000),
                                    heaping=heaping, bins=_given(bins, DEFAULT_BINS))
        ds = make_synthetic_dataset(spec, config.rng_seed)
        export_histograms(ds, data_path)
        report.add('simulation', {**summary, 'histograms': len(ds), 'planted_label': spec[-1].label})
        report.add('histograms', _histogram_rows(ds), table=True)

    elif kind == 'same-smoothness':
        spec = same_smoothness_spec(config.rng_seed, count=_given(count, 200), bins=_given(bins, 50))
        ds = make_synthetic_dataset(spec, config.rng_seed)
        export_histograms(ds, data_path)
        report.add('simulation', {**summary, 'histograms': len(ds)})
        report.add('histograms', _histogram_rows(ds), table=True)

    elif kind == 'near-uniform':
        h = near_uniform_shape(total=_given(size, 5000), bins=_given(bins, 10))
        export_histograms([h], data_path)
        report.add('simulation', summary)
        report.add('histograms', _histogram_rows([h]), table=True)

    elif kind == 'records':
        rs = make_synthetic_records(_given(count, 10000), config.rng_seed, heaping=heaping)
        export_records(rs, data_path)
        report.add('simulation', {
            **summary,
            'records': len(rs),
            'with_birth_year': len(rs.birth_years()),
            'with_alternatives': sum(1 for r in rs if r.alternative_years),
        })
        report.add('digit_profile', last_digit_profile(rs.birth_years()))

    else:
        distribution = discretize_beta(alpha, beta, _given(bins, DEFAULT_CURVE_BINS))
        tv = theoretical_dtv(distribution)
        summary.update({'alpha': alpha, 'beta': beta, 'bins': distribution.n, 'trials': trials,
                        'theoretical_dtv': tv})

        if kind == 'gc-curve':
            curve = glivenko_cantelli_curve(distribution, _sizes_option(sizes or DEFAULT_GC_SIZES),
                                            trials, config.rng_seed)
            report.add('simulation', summary)
            report.add('gc_curve', curve, table=True)
        else:
            estimates = estimate_curve(distribution, _sizes_option(sizes or DEFAULT_ESTIMATE_SIZES),
                                       trials, config.rng_seed)
            report.add('simulation', {**summary, 'randomness_term': fit_randomness_term(estimates, tv)})
            report.add('estimates', estimates, table=True)

    finish(report, out)


COMMANDS = [simulate_command]
