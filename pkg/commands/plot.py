"""
Plot data from a saved JSON report.
"""

import click

from plots import PLOT_FORMATS, PLOT_KINDS, emit_plot_data
from report import emit, load_report


@click.command('plot')
@click.argument('report_path', metavar='REPORT', type=click.Path(exists=True, dir_okay=False))
@click.option('--kind', type=click.Choice(PLOT_KINDS), required=True, help='Which plot to emit.')
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Write here instead of stdout.')
@click.option('--format', 'fmt', type=click.Choice(PLOT_FORMATS), default='svg', show_default=True)
def plot_command(report_path, kind, out, fmt):
    """Emit CSV or SVG plot data from a JSON report."""
    emit(emit_plot_data(load_report(report_path), kind, fmt), out)


COMMANDS = [plot_command]
