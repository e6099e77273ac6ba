import json
import math
import os

import numpy as np
import pytest

from config import RunConfig, SCHEMA_VERSION
from errors import NotFoundError, ValidationError
from report import AnalysisReport, emit, flatten, load_report, normalize, rows_to_csv, write_atomic
from validators import format_cell, format_number


class TestNumberFormatting:
    @pytest.mark.parametrize('value, expected', [
        (0.1 + 0.2, 0.3),
        (1 / 3, 0.333333333333333),
        (3, 3),
        (True, True),
        ('x', 'x'),
        (None, None),
        (math.nan, None),
        (math.inf, None),
        (np.float64(2.5), 2.5),
    ])
    def test_format_number(self, value, expected):
        assert format_number(value) == expected

    def test_format_cell(self):
        assert format_cell(None) == ''
        assert format_cell(0.1 + 0.2) == '0.3'
        assert format_cell(12) == '12'


class TestNormalize:
    def test_plain_types(self):
        value = {
            'int': np.int64(3),
            'set': {3, 1, 2},
            'float': 0.1 + 0.2,
            'nan': math.nan,
            'array': np.array([1, 2]),
            'flag': np.bool_(True),
            1: 'key',
        }
        assert normalize(value) == {
            'int': 3,
            'set': [1, 2, 3],
            'float': 0.3,
            'nan': None,
            'array': [1, 2],
            'flag': True,
            '1': 'key',
        }

    def test_objects_with_to_dict(self):
        assert normalize([RunConfig()])[0]['fit_mode'] == 'raw_ols'

    def test_flatten(self):
        assert flatten({'a': {'b': 1, 'c': [1, 2]}, 'd': [{'e': 3}]}) == [
            ('a.b', 1), ('a.c', '1;2'), ('d.0.e', 3)]


class TestAnalysisReport:
    def make_report(self, fmt='json'):
        report = AnalysisReport('rank', RunConfig(output_format=fmt))
        report.add('model', {'a': 0.1, 'b': 2.0})
        report.add('scores', [{'rank': 1, 'label': 'x', 'd_abs': 1 / 3}, {'rank': 2, 'label': 'y', 'd_abs': 0.25}],
                   table=True)
        return report

    def test_json_layout(self):
        data = json.loads(self.make_report().to_json())
        assert list(data) == ['schema_version', 'command', 'config', 'model', 'scores']
        assert data['schema_version'] == SCHEMA_VERSION
        assert data['config']['whipple_window'] == [23, 62]
        assert data['scores'][0]['d_abs'] == 0.333333333333333

    def test_json_is_deterministic(self):
        assert self.make_report().to_json() == self.make_report().to_json()
        assert self.make_report().to_json().endswith('}\n')

    def test_csv_table(self):
        assert self.make_report('csv').render('csv') == "rank,label,d_abs\n1,x,0.333333333333333\n2,y,0.25\n"

    def test_csv_table_from_rows_block(self):
        report = AnalysisReport('sweep', RunConfig())
        report.add('sweep', {'fit_mode': 'raw_ols', 'rows': [{'threshold': 100, 'top_label': None}]}, table=True)
        assert report.to_csv() == "threshold,top_label\n100,\n"

    def test_csv_key_value_fallback(self):
        report = AnalysisReport('fit', RunConfig())
        report.add('model', {'a': 0.5})
        lines = report.to_csv().splitlines()
        assert lines[0] == 'key,value'
        assert 'command,fit' in lines
        assert 'model.a,0.5' in lines
        assert 'config.whipple_window,23;62' in lines

    def test_missing_block(self):
        with pytest.raises(NotFoundError):
            self.make_report().block('sweep')

    def test_rows_to_csv_empty(self):
        assert rows_to_csv([]) == ''


class TestFiles:
    def test_write_and_load(self, tmp_path):
        path = tmp_path / 'report.json'
        text = TestAnalysisReport().make_report().to_json()
        write_atomic(str(path), text)
        assert path.read_text(encoding='utf-8') == text
        assert load_report(str(path))['command'] == 'rank'
        assert [p.name for p in tmp_path.iterdir()] == ['report.json']

    def test_write_replaces_existing(self, tmp_path):
        path = tmp_path / 'out.txt'
        path.write_text('old')
        write_atomic(str(path), 'new')
        assert path.read_text() == 'new'

    def test_write_into_missing_directory(self, tmp_path):
        with pytest.raises(OSError):
            write_atomic(str(tmp_path / 'missing' / 'out.txt'), 'text')
        assert not os.path.exists(tmp_path / 'missing')

    @pytest.mark.parametrize('content', ['not json', '{"schema_version": 2}', '[1, 2]'])
    def test_load_rejects_foreign_files(self, tmp_path, content):
        path = tmp_path / 'other.json'
        path.write_text(content)
        with pytest.raises(ValidationError):
            load_report(str(path))

    def test_emit_to_stdout(self, capsys):
        emit('hello\n', None)
        emit('again\n', '-')
        assert capsys.readouterr().out == 'hello\nagain\n'

    def test_emit_to_file(self, tmp_path, capsys):
        emit('hello\n', str(tmp_path / 'out.txt'))
        assert (tmp_path / 'out.txt').read_text() == 'hello\n'
        assert capsys.readouterr().out == ''
