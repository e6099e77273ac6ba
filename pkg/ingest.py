"""
CSV ingestion and export.

Two UTF-8 formats, both with a mandatory header row:
- histograms: list_id,year,count
- records:    id,list_id,birth_year,alt_years,attr:<key>...

birth_year may carry a trailing '*' (disputed value); alt_years is a
';'-joined integer list. Exports write every bin, zeros included, so a
file round-trips through ingest and export unchanged.
"""

import csv
import io
import logging
from collections import defaultdict

import numpy as np

from engine import DEFAULT_MIN_SIZE, Dataset
from errors import IngestError, ValidationError
from histogram import Histogram
from records import PersonRecord, RecordSet
from report import write_atomic
from validators import parse_int_list, parse_year

logger = logging.getLogger('tvor.ingest')

HISTOGRAM_HEADER = ['list_id', 'year', 'count']
RECORD_HEADER = ['id', 'list_id', 'birth_year', 'alt_years']
ATTR_PREFIX = 'attr:'
FORMATS = ('auto', 'histograms', 'records')


def detect_format(header: list[str]) -> str:
    header = [h.strip() for h in header]
    if header == HISTOGRAM_HEADER:
        return 'histograms'
    if header[:4] == RECORD_HEADER and all(h.startswith(ATTR_PREFIX) for h in header[4:]):
        return 'records'
    raise IngestError(
        f"Unrecognized header '{','.join(header)}'. Expected "
        f"'{','.join(HISTOGRAM_HEADER)}' or '{','.join(RECORD_HEADER)}[,attr:*]'", 1)


def _parse_int(value: str, name: str, line: int) -> int:
    try:
        return int(value.strip())
    except (AttributeError, ValueError):
        raise IngestError(f"Invalid {name} '{value}'", line)


def read_histograms(reader, min_size_filter: int = DEFAULT_MIN_SIZE) -> Dataset:
    """Build one histogram per list_id, in order of first appearance."""
    bins = defaultdict(dict)
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise IngestError(f"Expected 3 columns, got {len(row)}", line)

        list_id = row[0].strip()
        if not list_id:
            raise IngestError("Empty list_id", line)
        year = _parse_int(row[1], 'year', line)
        count = _parse_int(row[2], 'count', line)
        if count < 0:
            raise IngestError(f"Negative count {count} for {list_id}/{year}", line)
        if year in bins[list_id]:
            raise IngestError(f"Duplicate year {year} for list '{list_id}'", line)
        bins[list_id][year] = count

    histograms = []
    for list_id, by_year in bins.items():
        origin = min(by_year)
        counts = np.zeros(max(by_year) - origin + 1, dtype=np.int64)
        for year, count in by_year.items():
            counts[year - origin] = count
        histograms.append(Histogram(list_id, origin, counts))

    return Dataset.from_histograms(histograms, min_size_filter)


def read_records(reader, header: list[str]) -> RecordSet:
    attr_keys = [h.strip()[len(ATTR_PREFIX):] for h in header[4:]]
    if len(set(attr_keys)) != len(attr_keys) or any(not k for k in attr_keys):
        raise IngestError("Attribute columns must have unique, non-empty names", 1)

    records, seen = [], set()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise IngestError(f"Expected {len(header)} columns, got {len(row)}", line)

        record_id, list_id = row[0].strip(), row[1].strip()
        if not record_id or not list_id:
            raise IngestError("id and list_id are required", line)
        if record_id in seen:
            raise IngestError(f"Duplicate record id '{record_id}'", line)
        seen.add(record_id)

        parsed, error = parse_year(row[2])
        if error:
            raise IngestError(error, line)
        birth_year, disputed = parsed

        alternatives, error = parse_int_list(row[3], separators=';')
        if error:
            raise IngestError(error, line)

        attributes = {key: cell for key, cell in zip(attr_keys, row[4:]) if cell != ''}
        if disputed:
            attributes['disputed'] = 'true'

        records.append(PersonRecord(record_id, list_id, birth_year, frozenset(alternatives), attributes))

    return RecordSet(tuple(records))


def ingest_text(text: str, fmt: str = 'auto', min_size_filter: int = DEFAULT_MIN_SIZE):
    """Parse CSV text into a Dataset (histograms) or a RecordSet (records)."""
    if fmt not in FORMATS:
        raise ValidationError(f"Unknown input format '{fmt}'. Use one of: {', '.join(FORMATS)}")

    reader = csv.reader(io.StringIO(text, newline=''))
    header = next(reader, None)
    if not header:
        raise IngestError("Missing header row", 1)

    detected = detect_format(header)
    if fmt != 'auto' and fmt != detected:
        raise IngestError(f"Header is a {detected} header, expected {fmt}", 1)

    if detected == 'histograms':
        result = read_histograms(reader, min_size_filter)
        logger.info(f"Ingested {len(result)} histograms")
    else:
        result = read_records(reader, [h.strip() for h in header])
        logger.info(f"Ingested {len(result)} records")
    return result


def ingest(path: str, fmt: str = 'auto', min_size_filter: int = DEFAULT_MIN_SIZE):
    """
    Read a histogram or record CSV file.

    Raises:
        IngestError: unreadable file, bad header or malformed row (with line number)
    """
    try:
        with open(path, encoding='utf-8', newline='') as fh:
            text = fh.read()
    except UnicodeDecodeError as e:
        raise IngestError(f"{path} is not valid UTF-8: {e.reason}")
    except OSError as e:
        raise IngestError(f"Cannot read {path}: {e.strerror}")
    return ingest_text(text, fmt, min_size_filter)


def histograms_to_csv(histograms) -> str:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(HISTOGRAM_HEADER)
    for h in histograms:
        for year, count in zip(h.keys.tolist(), h.counts.tolist()):
            writer.writerow([h.label, year, count])
    return output.getvalue()


def records_to_csv(rs: RecordSet) -> str:
    attr_keys = sorted(rs.attribute_keys)
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(RECORD_HEADER + [ATTR_PREFIX + k for k in attr_keys])
    for r in rs:
        writer.writerow([
            r.id,
            r.list_id,
            '' if r.birth_year is None else r.birth_year,
            ';'.join(str(y) for y in sorted(r.alternative_years)),
            *(r.attributes.get(k, '') for k in attr_keys),
        ])
    return output.getvalue()


def export_histograms(histograms, path: str):
    write_atomic(path, histograms_to_csv(histograms))


def export_records(rs: RecordSet, path: str):
    write_atomic(path, records_to_csv(rs))
