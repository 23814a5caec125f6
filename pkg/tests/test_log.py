import logging

import pytest

from lsw_encounters.log import error, log, set_debug, setup_logging, warn


@pytest.fixture(autouse=True)
def quiet():
    set_debug(False)
    yield
    set_debug(False)


def test_setup_creates_the_log_directory(tmp_path):
    log_file = tmp_path / 'nested' / 'logs' / 'lsw.log'
    setup_logging(str(log_file), debug=False)
    assert log_file.parent.is_dir()


def test_log_joins_arguments(caplog, capsys):
    caplog.set_level(logging.INFO)
    log('solve', 0.04, 'done')
    assert caplog.records[-1].getMessage() == 'solve 0.04 done'
    assert capsys.readouterr().out == ''


def test_debug_echoes_to_console(caplog, capsys):
    caplog.set_level(logging.INFO)
    set_debug(True)
    log('iteration', 3)
    assert capsys.readouterr().out == 'iteration 3\n'


def test_warnings_and_errors_reach_console_and_log(caplog, capsys):
    caplog.set_level(logging.INFO)
    warn('sweep rows failed')
    error('solve failed')
    out = capsys.readouterr().out
    assert 'sweep rows failed' in out and 'solve failed' in out
    levels = [record.levelno for record in caplog.records[-2:]]
    assert levels == [logging.WARNING, logging.ERROR]


def test_unrecorded_error_only_prints(caplog, capsys):
    caplog.set_level(logging.INFO)
    before = len(caplog.records)
    error('bad delta', record=False)
    captured = capsys.readouterr()
    assert captured.out.count('bad delta') == 1
    assert captured.err == ''
    assert len(caplog.records) == before
