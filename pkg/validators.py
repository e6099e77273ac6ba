"""
Centralized validation helpers for the TVOR toolkit.

Conventions:
- Validators return (value, None) on success and (None, error_message) on failure
- Regexes are precompiled
- Numbers are formatted with 15 significant digits for byte-stable reports
"""

import math
import re


# Precompiled regex for performance
YEAR_REGEX = re.compile(r'^\s*(-?\d{1,4})\s*(\*?)\s*$')
WINDOW_REGEX = re.compile(r'^\s*(\d+)\s*[-:]\s*(\d+)\s*$')
INT_LIST_PATTERN = r'^\s*-?\d+(\s*[{sep}]\s*-?\d+)*\s*$'

SIGNIFICANT_DIGITS = 15


def parse_year(value: str) -> tuple[tuple[int | None, bool], str | None]:
    """
    Parse a birth-year cell.

    An empty cell is an unknown year. A trailing asterisk marks a year
    with conflicting reports from different sources.

    Returns:
        ((year_or_None, disputed), None) if valid, (None, error_message) if invalid
    """
    if value is None or not value.strip():
        return (None, False), None

    match = YEAR_REGEX.match(value)
    if not match:
        return None, f"Invalid year '{value}'"

    return (int(match.group(1)), match.group(2) == '*'), None


def parse_int_list(value: str, separators: str = ';,') -> tuple[list[int] | None, str | None]:
    """
    Parse a separator-joined integer list such as "1900;1912".

    Args:
        value: Raw cell text; empty means an empty list
        separators: Accepted separator characters

    Returns:
        (list_of_ints, None) if valid, (None, error_message) if invalid
    """
    if value is None or not value.strip():
        return [], None

    if not re.match(INT_LIST_PATTERN.format(sep=re.escape(separators)), value):
        return None, f"Invalid integer list '{value}'"

    parts = re.split(f"[{re.escape(separators)}]", value)
    return [int(p) for p in parts if p.strip()], None


def parse_window(value: str) -> tuple[tuple[int, int] | None, str | None]:
    """
    Validate an inclusive age window such as "23-62".

    Rules:
        - Lower bound must not exceed the upper bound
        - Window length must be a multiple of 5 (Whipple calibration)
    """
    if not value or not isinstance(value, str):
        return None, "Window is required (format: LOW-HIGH)"

    match = WINDOW_REGEX.match(value)
    if not match:
        return None, "Invalid window format. Use LOW-HIGH, e.g. 23-62"

    low, high = int(match.group(1)), int(match.group(2))
    return validate_window((low, high))


def validate_window(window) -> tuple[tuple[int, int] | None, str | None]:
    """Check an already-split (low, high) window."""
    try:
        low, high = (int(v) for v in window)
    except (TypeError, ValueError):
        return None, "Window must be a pair of integers"

    if low > high:
        return None, "Window lower bound exceeds upper bound"

    if (high - low + 1) % 5 != 0:
        return None, "Window length must be a multiple of 5"

    return (low, high), None


def parse_scales(value: str) -> tuple[list[int] | None, str | None]:
    """Validate a comma-separated list of positive integer scale factors."""
    scales, error = parse_int_list(value, separators=',')
    if error:
        return None, error
    if not scales:
        return None, "At least one scale factor is required"
    if any(s < 1 for s in scales):
        return None, "Scale factors must be positive integers"
    return scales, None


def parse_labels(value: str) -> list[str]:
    """Split a comma-separated label list, dropping blanks."""
    if not value:
        return []
    return [part.strip() for part in value.split(',') if part.strip()]


def validate_counts(counts) -> tuple[bool, str | None]:
    """
    Validate histogram bin counts.

    Returns:
        (True, None) if valid, (False, error_message) if invalid
    """
    if len(counts) == 0:
        return False, "Histogram needs at least one bin"

    for value in counts:
        if int(value) != value:
            return False, "Bin counts must be integers"
        if value < 0:
            return False, "Bin counts must be non-negative"

    return True, None


def format_number(value):
    """
    Round a float to 15 significant digits.

    Integers, booleans, strings and None pass through unchanged.
    Non-finite floats become None (JSON has no NaN).
    """
    if value is None or isinstance(value, (bool, int, str)):
        return value

    value = float(value)
    if not math.isfinite(value):
        return None

    return float(format(value, f'.{SIGNIFICANT_DIGITS}g'))


def format_cell(value) -> str:
    """Format a value for a CSV cell."""
    if value is None:
        return ''
    if isinstance(value, float):
        return format(value, f'.{SIGNIFICANT_DIGITS}g')
    return str(value)
