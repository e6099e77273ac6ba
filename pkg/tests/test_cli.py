import json

import click
import pytest

from commands.reproduce import run_checks
from engine import fit_and_rank
from errors import handle_errors
from histogram import Histogram
from ingest import histograms_to_csv


@pytest.fixture
def planted_csv(tmp_path, cli, runner):
    path = tmp_path / 'planted.csv'
    result = runner.invoke(cli, ['simulate', 'planted', '--data', str(path), '--seed', '7'])
    assert result.exit_code == 0, result.stderr
    return str(path)


@pytest.fixture
def records_csv(tmp_path, cli, runner):
    path = tmp_path / 'records.csv'
    result = runner.invoke(cli, ['simulate', 'records', '--data', str(path), '--count', '3000', '--seed', '11'])
    assert result.exit_code == 0, result.stderr
    return str(path)


def run_json(runner, cli, args, **kwargs) -> dict:
    result = runner.invoke(cli, args, **kwargs)
    assert result.exit_code == 0, result.stderr
    return json.loads(result.stdout)


class TestRanking:
    def test_planted_histogram_ranks_first(self, cli, runner, planted_csv):
        report = run_json(runner, cli, ['rank', planted_csv])
        assert report['command'] == 'rank'
        assert report['scores'][0]['label'] == 'planted'
        assert report['scores'][0]['rank'] == 1
        assert report['input']['lists_kept'] == 61

    def test_top(self, cli, runner, planted_csv):
        report = run_json(runner, cli, ['rank', planted_csv, '--top', '3', '--fit-mode', 'normalized_ols'])
        assert [s['rank'] for s in report['scores']] == [1, 2, 3]
        assert report['model']['fit_mode'] == 'normalized_ols'

    def test_csv_format(self, cli, runner, planted_csv):
        result = runner.invoke(cli, ['rank', planted_csv, '--format', 'csv'])
        lines = result.stdout.splitlines()
        assert lines[0] == 'rank,label,N,dtv,expected,d_signed,d_abs'
        assert lines[1].startswith('1,planted,')
        assert len(lines) == 62

    def test_score_keeps_requested_order(self, cli, runner, planted_csv):
        report = run_json(runner, cli, ['score', planted_csv, '--labels', 'smooth_010,planted'])
        assert [s['label'] for s in report['scores']] == ['smooth_010', 'planted']
        assert 'rank' not in report['scores'][0]

    def test_sweep_and_exclude(self, cli, runner, planted_csv):
        sweep = run_json(runner, cli, ['sweep', planted_csv])
        assert 'planted' in sweep['sweep']['top_label_counts']
        excluded = run_json(runner, cli, ['exclude', planted_csv, '--labels', 'planted'])
        assert excluded['exclusion'] == {'excluded': ['planted'], 'before': 61, 'remaining': 60}
        assert 'planted' not in {s['label'] for s in excluded['scores']}

    def test_bias_blocks(self, cli, runner, planted_csv):
        report = run_json(runner, cli, ['bias', planted_csv, '--largest', '7', '--debias'])
        assert report['bias']['convention'] == 'signed'
        assert report['largest_subset']['line']['n'] == 7
        assert report['debias']['top_label_after'] == 'planted'

    def test_iqr_flags_planted(self, cli, runner, planted_csv):
        report = run_json(runner, cli, ['iqr', planted_csv, '--largest', '0'])
        assert 'planted' in report['iqr']['outlier_labels']
        assert len(report['values']) == 61


class TestQuality:
    def test_chisq_scaling_on_fixture(self, cli, runner, near_uniform_csv):
        report = run_json(runner, cli, ['chisq', near_uniform_csv, '--scale', '1,2,4,8'])
        rows = report['chisq']
        assert [r['scale'] for r in rows] == [1, 2, 4, 8]
        assert [r['N'] for r in rows] == [5000, 10000, 20000, 40000]
        assert rows[0]['statistic'] == pytest.approx(2.42)
        assert [r['statistic'] for r in rows] == pytest.approx([2.42, 4.84, 9.68, 19.36])
        p_values = [r['p_value'] for r in rows]
        assert p_values == sorted(p_values, reverse=True)
        assert 0.95 <= p_values[0] <= 1.0

    def test_whipple_and_digits_on_records(self, cli, runner, records_csv):
        whipple = run_json(runner, cli, ['whipple', records_csv, '--window', '23-62'])
        assert whipple['lists'][0]['label'] == 'synthetic'
        assert whipple['whipple']['ages_in_window'] > 0
        digits = run_json(runner, cli, ['digits', records_csv])
        assert sum(d['count'] for d in digits['digits']) == sum(digits['digit_profile'].values())

    def test_bad_window(self, cli, runner, records_csv):
        result = runner.invoke(cli, ['whipple', records_csv, '--window', '23-61'])
        assert result.exit_code == 2
        assert result.stderr.startswith('error: ')


class TestExperiments:
    def test_substitute(self, cli, runner, records_csv, tmp_path):
        exported = tmp_path / 'substituted.csv'
        report = run_json(runner, cli, ['substitute', records_csv, '--export', str(exported)])
        block = report['substitution']
        assert sum(int(c) for c in block['abs_diff_counts'].values()) == block['substituted_count']
        assert exported.read_text(encoding='utf-8').startswith('id,list_id,birth_year,alt_years')

    def test_split_with_augment(self, cli, runner, records_csv, planted_csv):
        report = run_json(runner, cli, ['split', records_csv, '--key', 'death_year', '--value', '1942',
                                        '--augment', '--dataset', planted_csv])
        assert report['split_ranks']['match']['label'] == 'death_year=1942'
        assert report['split_ranks']['ranked'] == 63

    def test_split_unknown_key(self, cli, runner, records_csv):
        result = runner.invoke(cli, ['split', records_csv, '--key', 'colour', '--value', 'red'])
        assert result.exit_code == 2


class TestSimulateAndPlot:
    def test_seed_from_environment(self, cli, runner):
        args = ['simulate', 'gc-curve', '--sizes', '100,1000', '--trials', '5']
        report = run_json(runner, cli, args, env={'TVOR_SEED': '99'})
        assert report['config']['rng_seed'] == 99
        assert report['simulation']['seed'] == 99
        flag = run_json(runner, cli, args + ['--seed', '5'], env={'TVOR_SEED': '99'})
        assert flag['config']['rng_seed'] == 5

    def test_data_kinds_need_a_path(self, cli, runner):
        result = runner.invoke(cli, ['simulate', 'planted'])
        assert result.exit_code == 2

    @pytest.mark.parametrize('kind', ['planted', 'same-smoothness'])
    def test_zero_count_is_rejected(self, cli, runner, tmp_path, kind):
        result = runner.invoke(cli, ['simulate', kind, '--data', str(tmp_path / 'out.csv'), '--count', '0'])
        assert result.exit_code == 2
        assert '--count' in result.stderr
        assert not (tmp_path / 'out.csv').exists()

    def test_zero_records_is_allowed(self, cli, runner, tmp_path):
        path = tmp_path / 'records.csv'
        report = run_json(runner, cli, ['simulate', 'records', '--data', str(path), '--count', '0'])
        assert report['simulation']['records'] == 0
        assert path.read_text(encoding='utf-8') == 'id,list_id,birth_year,alt_years\n'

    def test_plot_from_saved_report(self, cli, runner, planted_csv, tmp_path):
        report_path = tmp_path / 'rank.json'
        result = runner.invoke(cli, ['rank', planted_csv, '--out', str(report_path)])
        assert result.exit_code == 0
        assert result.stdout == ''
        plot = runner.invoke(cli, ['plot', str(report_path), '--kind', 'dtv-vs-n'])
        assert plot.exit_code == 0
        assert plot.stdout.startswith('<svg')
        missing = runner.invoke(cli, ['plot', str(report_path), '--kind', 'sweep'])
        assert missing.exit_code == 5


class TestExitCodes:
    def test_unknown_exclude_label(self, cli, runner, planted_csv):
        result = runner.invoke(cli, ['exclude', planted_csv, '--labels', 'nowhere'])
        assert result.exit_code == 5
        assert 'nowhere' in result.stderr

    def test_missing_input(self, cli, runner, tmp_path):
        result = runner.invoke(cli, ['rank', str(tmp_path / 'absent.csv')])
        assert result.exit_code == 2

    def test_malformed_file(self, cli, runner, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text("list_id,year,count\nA,1900,x\n")
        result = runner.invoke(cli, ['rank', str(path)])
        assert result.exit_code == 7
        assert 'line 2' in result.stderr
        assert result.stdout == ''

    def test_singular_fit(self, cli, runner, tmp_path):
        path = tmp_path / 'one.csv'
        path.write_text("list_id,year,count\nA,1900,150\n")
        assert runner.invoke(cli, ['fit', str(path)]).exit_code == 4

    def test_callbacks_are_wrapped_once(self, cli):
        for command in cli.commands.values():
            assert hasattr(command.callback, '__wrapped__')
            assert not hasattr(command.callback.__wrapped__, '__wrapped__')

    def test_help_and_version(self, cli, runner):
        assert runner.invoke(cli, ['-h']).exit_code == 0
        assert '1.0.0' in runner.invoke(cli, ['--version']).stdout


class TestReproduce:
    def test_without_dataset_everything_is_skipped(self, cli, runner):
        report = run_json(runner, cli, ['reproduce'], env={'TVOR_DATASET_DIR': None})
        assert report['summary'] == {'PASS': 0, 'FAIL': 0, 'SKIPPED': 9}
        assert {c['status'] for c in report['checks']} == {'SKIPPED'}

    def test_directory_without_manifest(self, cli, runner, tmp_path):
        report = run_json(runner, cli, ['reproduce', '--dataset-dir', str(tmp_path)])
        assert report['summary']['SKIPPED'] == 9

    def test_excluded_list_below_min_size(self, cli, runner, planted_dataset, tmp_path):
        path = tmp_path / 'lists.csv'
        small = Histogram('small_sublist', 1900, [20, 15])
        path.write_text(histograms_to_csv(list(planted_dataset) + [small]), encoding='utf-8')
        (tmp_path / 'reproduce.json').write_text(json.dumps({
            'histograms': 'lists.csv',
            'target_label': 'planted',
            'excluded_labels': ['small_sublist'],
        }))

        report = run_json(runner, cli, ['exclude', str(path), '--min-size', '100', '--labels', 'small_sublist'])
        assert report['exclusion'] == {'excluded': ['small_sublist'], 'before': 61, 'remaining': 61}

        checks = {c.name: c for c in run_checks(str(tmp_path), 'raw_ols', 100)}
        assert len(checks) == 9
        assert checks['full_dataset_top_label'].status == 'PASS'
        _, scores = fit_and_rank(planted_dataset)
        for name in ('exclusion_d_abs_min1', 'exclusion_d_abs_min100'):
            assert checks[name].status in ('PASS', 'FAIL')
            assert float(checks[name].observed) == pytest.approx(scores[0].d_abs, abs=1e-4)
        assert checks['split_ranks'].status == 'SKIPPED'


class TestDeterminism:
    def test_every_subcommand_is_byte_identical(self, cli, runner, planted_csv, records_csv,
                                                near_uniform_csv, tmp_path):
        report_path = tmp_path / 'sweep.json'
        assert runner.invoke(cli, ['sweep', planted_csv, '--out', str(report_path)]).exit_code == 0
        invocations = [
            ['fit', planted_csv],
            ['score', planted_csv],
            ['rank', planted_csv, '--format', 'csv'],
            ['bias', planted_csv, '--absolute', '--largest', '7', '--debias'],
            ['sweep', planted_csv],
            ['iqr', planted_csv],
            ['exclude', planted_csv, '--labels', 'planted,smooth_000'],
            ['whipple', records_csv],
            ['digits', records_csv],
            ['chisq', near_uniform_csv, '--scale', '1,2,4,8'],
            ['substitute', records_csv],
            ['split', records_csv, '--key', 'death_year', '--value', '1942', '--augment'],
            ['simulate', 'expected-dtv', '--sizes', '100,1000', '--trials', '10'],
            ['simulate', 'same-smoothness', '--data', str(tmp_path / 'same.csv'), '--count', '20'],
            ['plot', str(report_path), '--kind', 'sweep'],
            ['reproduce'],
        ]
        for args in invocations:
            first = runner.invoke(cli, args, env={'TVOR_DATASET_DIR': None})
            second = runner.invoke(cli, args, env={'TVOR_DATASET_DIR': None})
            assert first.exit_code == 0, (args, first.stderr)
            assert first.stdout_bytes == second.stdout_bytes, args

    def test_generated_files_are_identical(self, cli, runner, tmp_path):
        first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
        for path in (first, second):
            runner.invoke(cli, ['simulate', 'records', '--data', str(path), '--count', '500', '--seed', '3'])
        assert first.read_bytes() == second.read_bytes()


def test_unexpected_errors_become_exit_one(capsys):
    @handle_errors
    def broken():
        raise RuntimeError('boom')

    with pytest.raises(click.exceptions.Exit) as exc:
        broken()
    assert exc.value.exit_code == 1
    assert 'unexpected' in capsys.readouterr().err
