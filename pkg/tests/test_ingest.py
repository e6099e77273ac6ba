import numpy as np
import pytest

from engine import Dataset
from errors import IngestError, ValidationError
from histogram import Histogram
from ingest import (
    detect_format,
    export_histograms,
    export_records,
    histograms_to_csv,
    ingest,
    ingest_text,
    records_to_csv,
)
from records import RecordSet
from simulation import make_synthetic_records
from tests.conftest import fixture_path


def record_summary(rs):
    return [(r.id, r.list_id, r.birth_year, r.alternative_years, dict(r.attributes)) for r in rs]


class TestHistogramFormat:
    def test_zero_fill_and_order(self):
        text = "list_id,year,count\nB,1902,1\nA,1900,3\nB,1900,3\nA,1901,2\n"
        ds = ingest_text(text, min_size_filter=1)
        assert ds.labels == ['B', 'A']
        assert ds.get('B').origin == 1900
        assert ds.get('B').counts.tolist() == [3, 0, 1]
        assert ds.get('A').counts.tolist() == [3, 2]

    def test_size_filter(self):
        text = "list_id,year,count\nsmall,1900,5\nbig,1900,150\n"
        ds = ingest_text(text)
        assert ds.labels == ['big']
        assert ds.dropped_below_min_size == 1

    def test_blank_lines_are_ignored(self):
        ds = ingest_text("list_id,year,count\n\nA,1900,3\n\n", min_size_filter=1)
        assert ds.get('A').N == 3

    def test_bundled_fixture(self):
        ds = ingest(fixture_path('near_uniform.csv'), min_size_filter=1)
        assert ds.labels == ['near_uniform']
        assert ds.get('near_uniform').counts.tolist() == [511, 489] * 5

    @pytest.mark.parametrize('text, line, fragment', [
        ("list_id,year,count\nA,1900\n", 2, 'Expected 3 columns'),
        ("list_id,year,count\nA,1900,3\n,1901,2\n", 3, 'Empty list_id'),
        ("list_id,year,count\nA,19x0,3\n", 2, "Invalid year"),
        ("list_id,year,count\nA,1900,2.5\n", 2, "Invalid count"),
        ("list_id,year,count\nA,1900,3\nA,1901,-1\n", 3, 'Negative count'),
        ("list_id,year,count\nA,1900,3\nA,1900,4\n", 3, 'Duplicate year'),
    ])
    def test_malformed_rows(self, text, line, fragment):
        with pytest.raises(IngestError) as exc:
            ingest_text(text, min_size_filter=1)
        assert exc.value.line == line
        assert fragment in exc.value.message
        assert exc.value.exit_code == 7

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        histograms = [Histogram(f"list_{i:03d}", int(rng.integers(1800, 1950)), rng.integers(0, 500, size=1000))
                      for i in range(100)]
        text = histograms_to_csv(histograms)
        assert text.count('\n') == 100 * 1000 + 1
        ds = ingest_text(text, min_size_filter=0)
        assert list(ds.histograms) == histograms
        assert histograms_to_csv(ds) == text


class TestRecordFormat:
    HEADER = "id,list_id,birth_year,alt_years,attr:death_year,attr:sex\n"

    def test_rows(self):
        text = self.HEADER + "p1,L1,1920*,1925;1930,1942,f\np2,L1,,,1943,\np3,L2,1911,,,m\n"
        rs = ingest_text(text)
        p1, p2, p3 = rs.records
        assert p1.birth_year == 1920
        assert p1.alternative_years == frozenset({1925, 1930})
        assert dict(p1.attributes) == {'death_year': '1942', 'sex': 'f', 'disputed': 'true'}
        assert p2.birth_year is None
        assert dict(p2.attributes) == {'death_year': '1943'}
        assert 'death_year' not in p3.attributes
        assert rs.list_ids == ['L1', 'L2']

    def test_format_mismatch(self):
        with pytest.raises(IngestError):
            ingest_text(self.HEADER + "p1,L1,1920,,1942,f\n", fmt='histograms')

    @pytest.mark.parametrize('rows, line, fragment', [
        ("p1,L1,1920,,1942\n", 2, 'Expected 6 columns'),
        ("p1,L1,19z0,,1942,f\n", 2, 'Invalid year'),
        ("p1,L1,1920,1925;x,1942,f\n", 2, 'Invalid integer list'),
        ("p1,L1,1920,,1942,f\np1,L1,1921,,1942,f\n", 3, 'Duplicate record id'),
        ("p1,,1920,,1942,f\n", 2, 'required'),
    ])
    def test_malformed_rows(self, rows, line, fragment):
        with pytest.raises(IngestError) as exc:
            ingest_text(self.HEADER + rows)
        assert exc.value.line == line
        assert fragment in exc.value.message

    def test_duplicate_attribute_columns(self):
        with pytest.raises(IngestError):
            ingest_text("id,list_id,birth_year,alt_years,attr:k,attr:k\n")

    def test_round_trip(self):
        rs = make_synthetic_records(2000, 8)
        text = records_to_csv(rs)
        again = ingest_text(text)
        assert record_summary(again) == record_summary(rs)
        assert records_to_csv(again) == text

    def test_empty_record_set(self):
        assert len(ingest_text("id,list_id,birth_year,alt_years\n")) == 0
        assert records_to_csv(RecordSet(())) == "id,list_id,birth_year,alt_years\n"


class TestHeaderAndFiles:
    @pytest.mark.parametrize('header', [['list_id', 'year'], ['id', 'list_id', 'birth_year', 'alt_years', 'k']])
    def test_unknown_header(self, header):
        with pytest.raises(IngestError) as exc:
            detect_format(header)
        assert exc.value.line == 1

    def test_header_whitespace(self):
        assert detect_format([' list_id', 'year ', 'count']) == 'histograms'

    def test_empty_text(self):
        with pytest.raises(IngestError):
            ingest_text('')

    def test_unknown_format_name(self):
        with pytest.raises(ValidationError):
            ingest_text("list_id,year,count\n", fmt='xml')

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError) as exc:
            ingest(str(tmp_path / 'nope.csv'))
        assert exc.value.exit_code == 7

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_bytes(b"list_id,year,count\n\xff\xfe,1900,3\n")
        with pytest.raises(IngestError, match='UTF-8'):
            ingest(str(path))

    def test_exports(self, tmp_path):
        histograms = [Histogram('A', 1900, [1, 0, 2]), Histogram('B', 1890, [4])]
        path = tmp_path / 'lists.csv'
        export_histograms(histograms, str(path))
        assert list(ingest(str(path), min_size_filter=1).histograms) == histograms

        rs = make_synthetic_records(50, 1)
        record_path = tmp_path / 'records.csv'
        export_records(rs, str(record_path))
        assert record_summary(ingest(str(record_path))) == record_summary(rs)

    def test_dataset_exports_like_its_histograms(self):
        histograms = (Histogram('A', 1900, [1, 0, 2]),)
        assert histograms_to_csv(Dataset(histograms, 1)) == histograms_to_csv(histograms)
