"""
Run configuration for the TVOR toolkit.

Resolution order for every setting:
- explicit CLI flag
- --config JSON file
- environment (TVOR_SEED, TVOR_FIT_MODE, TVOR_MIN_SIZE; .env is honoured)
- built-in default
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields

from dotenv import load_dotenv

from engine import DEFAULT_DEBIAS_MAX_ITER, DEFAULT_DEBIAS_TOL, DEFAULT_FIT_MODE, DEFAULT_MIN_SIZE, FIT_MODES
from diagnostics import DEFAULT_IQR_MULTIPLIER
from errors import ValidationError
from histogram import DEFAULT_WHIPPLE_WINDOW
from validators import parse_window, validate_window

# Load environment variables from .env file (for local runs)
load_dotenv()

logger = logging.getLogger('tvor.config')

SCHEMA_VERSION = 1
DEFAULT_SEED = 12345
DEFAULT_REFERENCE_YEAR = 1942
OUTPUT_FORMATS = ('json', 'csv')

# Environment variable -> RunConfig field
ENV_KEYS = {
    'TVOR_SEED': 'rng_seed',
    'TVOR_FIT_MODE': 'fit_mode',
    'TVOR_MIN_SIZE': 'min_size_filter',
}


@dataclass(frozen=True)
class RunConfig:
    fit_mode: str = DEFAULT_FIT_MODE
    min_size_filter: int = DEFAULT_MIN_SIZE
    iqr_multiplier: float = DEFAULT_IQR_MULTIPLIER
    whipple_window: tuple[int, int] = DEFAULT_WHIPPLE_WINDOW
    reference_year: int = DEFAULT_REFERENCE_YEAR
    rng_seed: int = DEFAULT_SEED
    output_format: str = 'json'
    debias_tol: float = DEFAULT_DEBIAS_TOL
    debias_max_iter: int = DEFAULT_DEBIAS_MAX_ITER
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.fit_mode not in FIT_MODES:
            raise ValidationError(f"Unknown fit mode '{self.fit_mode}'. Use one of: {', '.join(FIT_MODES)}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValidationError(f"Unknown output format '{self.output_format}'. Use json or csv")
        if self.min_size_filter < 1:
            raise ValidationError("min_size_filter must be >= 1")
        if self.iqr_multiplier < 0:
            raise ValidationError("iqr_multiplier must be non-negative")
        if self.rng_seed < 0:
            raise ValidationError("Seed must be a non-negative integer")
        if self.debias_max_iter < 1 or not self.debias_tol > 0:
            raise ValidationError("debias_max_iter must be >= 1 and debias_tol positive")

        window, error = validate_window(self.whipple_window)
        if error:
            raise ValidationError(error)
        object.__setattr__(self, 'whipple_window', window)

    def to_dict(self) -> dict:
        echo = asdict(self)
        echo['whipple_window'] = list(self.whipple_window)
        return echo


def _coerce(name: str, value):
    """Convert a raw env/file value to the type of the RunConfig field."""
    try:
        if name == 'whipple_window':
            if isinstance(value, str):
                window, error = parse_window(value)
                if error:
                    raise ValidationError(error)
                return window
            return tuple(int(v) for v in value)
        if name in ('fit_mode', 'output_format'):
            return str(value)
        if name in ('iqr_multiplier', 'debias_tol'):
            return float(value)
        return int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"Invalid value for {name}: {value!r}")


def read_config_file(path: str) -> dict:
    """
    Read a JSON object of RunConfig fields.

    Raises:
        ValidationError: unreadable file, not an object, or unknown keys
    """
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"Cannot read config file {path}: {e}")

    if not isinstance(data, dict):
        raise ValidationError("Config file must contain a JSON object")

    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"Unknown config keys: {', '.join(unknown)}")
    if data.get('schema_version', SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValidationError(f"Unsupported schema_version {data['schema_version']!r}")
    return data


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """
    Build the effective configuration.

    Args:
        path: Optional JSON config file
        overrides: Explicit CLI values; None entries are ignored
    """
    values = {}
    for env_key, name in ENV_KEYS.items():
        raw = os.environ.get(env_key)
        if raw:
            values[name] = _coerce(name, raw)

    if path:
        values.update({k: _coerce(k, v) for k, v in read_config_file(path).items()})

    for name, value in (overrides or {}).items():
        if value is not None:
            values[name] = _coerce(name, value)

    config = RunConfig(**values)
    logger.debug(f"Effective config: {config.to_dict()}")
    return config

