"""
Centralized error handling for the TVOR toolkit.

Library-wide conventions:
- One exception hierarchy rooted at TvorError
- Every error carries the process exit status the CLI should use
- Library code raises, never prints
- Logging for debugging (tracebacks stay in the log, not on stdout)
"""

import logging
import os
from functools import wraps

import click

# Configure logging
logging.basicConfig(
    level=os.environ.get('TVOR_LOG_LEVEL', 'WARNING').upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger('tvor')


class TvorError(Exception):
    """
    Base exception for toolkit errors.
    Allows raising custom errors with specific exit statuses.
    """
    def __init__(self, message: str, exit_code: int = 1):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)


class ValidationError(TvorError):
    """Invalid input value or parameter (exit 2)."""
    def __init__(self, message: str):
        super().__init__(message, 2)


class NoDataError(TvorError):
    """Nothing to compute on, e.g. an empty age window (exit 3)."""
    def __init__(self, message: str = "No data"):
        super().__init__(message, 3)


class SingularFitError(TvorError):
    """Degenerate least-squares design (exit 4)."""
    def __init__(self, message: str):
        super().__init__(message, 4)


class NotFoundError(TvorError):
    """Unknown label or missing report block (exit 5)."""
    def __init__(self, message: str = "Not found"):
        super().__init__(message, 5)


class ConflictError(TvorError):
    """Duplicate label or key (exit 6)."""
    def __init__(self, message: str):
        super().__init__(message, 6)


class IngestError(TvorError):
    """Malformed input file; carries the 1-based line number (exit 7)."""
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, 7)


class RenormalizationError(TvorError):
    """Non-positive divisor in the renormalization demo (exit 8)."""
    def __init__(self, message: str, label: str):
        self.label = label
        super().__init__(message, 8)


def error_response(message: str, exit_code: int = 1):
    """
    Emit a standardized one-line error on stderr and exit.

    Args:
        message: User-friendly error message
        exit_code: Process exit status
    """
    click.echo(f"error: {message}", err=True)
    raise click.exceptions.Exit(exit_code)


def handle_errors(f):
    """
    Decorator converting toolkit errors into CLI exits.
    Applied to every subcommand callback by the CLI factory.
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except TvorError as e:
            logger.warning(f"{type(e).__name__}: {e.message}")
            error_response(e.message, e.exit_code)
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except Exception as e:
            # Generic error - log it but keep the traceback off stdout
            logger.exception(f"Unhandled exception: {e}")
            error_response("An unexpected error occurred", 1)

    return decorated_function
