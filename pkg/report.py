"""
Analysis reports: JSON (canonical) and CSV (tabular) rendering.

Reports are byte-deterministic: blocks keep insertion order, floats are
rounded to 15 significant digits and files are written atomically.
"""

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import click
import numpy as np

from config import SCHEMA_VERSION, RunConfig
from errors import NotFoundError, ValidationError
from validators import format_cell, format_number


def normalize(value):
    """Convert a report value to plain JSON types with fixed float precision."""
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return [normalize(v) for v in sorted(value)]
    if isinstance(value, np.ndarray):
        return [normalize(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if hasattr(value, 'to_dict'):
        return normalize(value.to_dict())
    return format_number(value)


def flatten(value, prefix: str = '') -> list[tuple[str, object]]:
    """Dotted key/value pairs of a nested block."""
    if isinstance(value, dict):
        pairs = []
        for k, v in value.items():
            pairs.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return pairs
    if isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        pairs = []
        for i, v in enumerate(value):
            pairs.extend(flatten(v, f"{prefix}.{i}"))
        return pairs
    if isinstance(value, list):
        return [(prefix, ';'.join(format_cell(v) for v in value))]
    return [(prefix, value)]


@dataclass
class AnalysisReport:
    """
    One command's output. table names the block rendered by CSV output;
    without it CSV falls back to dotted key/value pairs.
    """
    command: str
    config: RunConfig
    blocks: dict = field(default_factory=dict)
    table: str | None = None

    def add(self, name: str, value, table: bool = False) -> 'AnalysisReport':
        self.blocks[name] = normalize(value)
        if table:
            self.table = name
        return self

    def block(self, name: str):
        if name not in self.blocks:
            raise NotFoundError(f"Report has no '{name}' block")
        return self.blocks[name]

    def to_dict(self) -> dict:
        return {
            'schema_version': SCHEMA_VERSION,
            'command': self.command,
            'config': normalize(self.config.to_dict()),
            **self.blocks,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=False) + '\n'

    def to_csv(self) -> str:
        if self.table is not None:
            table = self.blocks[self.table]
            return rows_to_csv(table['rows'] if isinstance(table, dict) else table)
        output = io.StringIO()
        writer = csv.writer(output, lineterminator='\n')
        writer.writerow(['key', 'value'])
        for key, value in flatten(self.to_dict()):
            writer.writerow([key, format_cell(value)])
        return output.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == 'csv' else self.to_json()


def rows_to_csv(rows) -> str:
    """CSV of a list of flat dicts; the header follows the first row's keys."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    if rows:
        header = list(rows[0])
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(row.get(k)) for k in header])
    return output.getvalue()


def load_report(path: str) -> dict:
    """
    Read a JSON report written by this toolkit.

    Raises:
        ValidationError: unreadable file or unsupported schema version
    """
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"Cannot read report {path}: {e}")

    if not isinstance(data, dict) or data.get('schema_version') != SCHEMA_VERSION:
        raise ValidationError(f"{path} is not a schema_version {SCHEMA_VERSION} report")
    return data


def write_atomic(path: str, text: str):
    """Write text to path via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tvor-', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def emit(text: str, out: str | None):
    """Write to out, or to stdout when out is None or '-'."""
    if out and out != '-':
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)
