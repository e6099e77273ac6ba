"""
TVOR command-line interface.

Ranks histograms by how far their discrete total variation departs from
the size-expected value, with the bias diagnostics, data-quality metrics,
record experiments and simulations around it.

- Every report-producing subcommand accepts --config, --seed, --out and --format;
  plot reads a saved report and takes only --out and --format
- Toolkit errors become one stderr line and a per-error exit status
- Reports are written atomically, so exit status 0 means a complete report
"""

import click

from commands import ALL_COMMANDS
from errors import handle_errors


def create_cli():
    """
    CLI factory.

    Returns:
        Click group with every subcommand registered
    """
    @click.group(context_settings={'help_option_names': ['-h', '--help']})
    @click.version_option('1.0.0', prog_name='tvor')
    def cli():
        """Total-variation outlier ranking for histograms."""

    # Register subcommands with centralized error handling
    for command in ALL_COMMANDS:
        if not hasattr(command.callback, '__wrapped__'):
            command.callback = handle_errors(command.callback)
        cli.add_command(command)

    return cli


cli = create_cli()


if __name__ == '__main__':
    cli()
