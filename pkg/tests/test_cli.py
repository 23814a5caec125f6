import json

import numpy as np
import pytest

from lsw_encounters.cli import EXIT_MAX_ITER, EXIT_OK, EXIT_USAGE, build_parser, run_cli
from lsw_encounters.kernels import phi_lsw
from lsw_encounters.storage import read_profile, read_sweep_csv


@pytest.fixture
def run(tmp_path):
    log_file = str(tmp_path / 'logs' / 'lsw.log')

    def invoke(*argv):
        return run_cli([*argv, '--log-file', log_file])

    return invoke


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ('lsw', 'psi', 'solve', 'sweep', 'residual'):
        assert parser.parse_args([command]).command == command


def test_lsw_profile(run, tmp_path, capsys):
    out = str(tmp_path / 'lsw.csv')
    assert run('lsw', '--out', out, '--format', 'csv') == EXIT_OK
    assert capsys.readouterr().out.strip().endswith('lsw.csv')
    z, values = read_profile(out)
    assert np.array_equal(values, phi_lsw(z))


def test_psi_profile(run, tmp_path):
    out = tmp_path / 'psi.json'
    assert run('psi', '--out', str(out), '--format', 'json', '--nbase', '256') == EXIT_OK
    data = json.loads(out.read_text())
    assert len(data['z']) == len(data['value'])
    assert data['value'][0] > data['value'][-1] >= 0.0


def test_usage_errors(run, tmp_path):
    assert run('solve', '--config', str(tmp_path / 'missing.json')) == EXIT_USAGE
    assert run('solve', '--delta', '2.0') == EXIT_USAGE
    assert run('solve', '--format', 'xml') == EXIT_USAGE
    assert run('fly') == EXIT_USAGE
    assert run('residual') == EXIT_USAGE
    assert run('sweep', '--deltas', ',') == EXIT_USAGE


def test_configuration_error_is_printed_once(run, capsys):
    assert run('solve', '--delta', '2.0') == EXIT_USAGE
    captured = capsys.readouterr()
    assert captured.out.count('Invalid configuration') == 1
    assert 'Invalid configuration' not in captured.err


def test_residual_needs_a_complete_result(run, tmp_path):
    result = tmp_path / 'result.json'
    result.write_text(json.dumps({'delta': 0.04}))
    profile = tmp_path / 'profile.csv'
    profile.write_text('z,value\n0.0,1.0\n')
    assert run('residual', '--profile', str(profile), '--result', str(result)) == EXIT_USAGE


def test_failed_solve_writes_no_profile(run, tmp_path):
    out = tmp_path / 'result.json'
    assert run('solve', '--max-iter', '1', '--out', str(out)) == EXIT_MAX_ITER
    assert not out.exists()
    assert not (tmp_path / 'result_profile.json').exists()


def test_sweep_records_failures(run, tmp_path):
    out = str(tmp_path / 'sweep.csv')
    assert run('sweep', '--deltas', '0.04', '--max-iter', '1', '--format', 'csv', '--out', out) == EXIT_OK
    row, = read_sweep_csv(out)
    assert row['delta'] == '0.04'
    assert row['error'].startswith('MaxIterExceeded')


@pytest.mark.slow
def test_solve_and_recheck(run, tmp_path):
    result_path = tmp_path / 'result.json'
    assert run('solve', '--out', str(result_path), '--format', 'csv') == EXIT_OK
    result = json.loads(result_path.read_text())
    assert result['residual'] <= 1e-8
    assert result['grid_meta']['n_base'] == 400
    profile_path = tmp_path / 'result_profile.csv'
    assert profile_path.exists()

    report_path = tmp_path / 'residual.json'
    assert run('residual', '--profile', str(profile_path), '--result', str(result_path),
               '--out', str(report_path)) == EXIT_OK
    report = json.loads(report_path.read_text())
    assert report['integral_residual'] <= 1e-5
    assert report['first_moment'] == pytest.approx(1.0, abs=1e-6)
    assert report['mass'] == pytest.approx(report['m0'], rel=1e-6)
