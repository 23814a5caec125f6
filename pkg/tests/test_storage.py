import json
import math

import numpy as np
import pytest

from lsw_encounters.diagnostics import SweepRow
from lsw_encounters.exceptions import ProfileMismatch
from lsw_encounters.kernels import phi_lsw
from lsw_encounters.profiles import Profile
from lsw_encounters.quadrature import build_grid
from lsw_encounters.storage import (SWEEP_FIELDS, load_profile, read_profile, read_result, read_sweep_csv,
                                    save_profile, write_json, write_profile, write_sweep)

ROWS = [
    SweepRow(0.04, eps=3.1e-4, teps=1.2e-3, lead_eps=2.5e-4, iterations=12, residual=4e-9),
    SweepRow(0.1, error='BracketFailure: no sign change'),
]


@pytest.mark.parametrize('fmt', ['csv', 'json'])
def test_profile_reads_back_exactly(grid, tmp_path, fmt):
    phi = Profile.from_function(grid, phi_lsw)
    path = str(tmp_path / 'nested' / f'phi.{fmt}')
    save_profile(path, phi, fmt)
    loaded = load_profile(path, grid)
    assert np.array_equal(loaded.values, phi.values)
    assert loaded.grid is grid


def test_profile_output_is_deterministic(grid, tmp_path):
    phi = Profile.from_function(grid, phi_lsw)
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    save_profile(str(first), phi)
    save_profile(str(second), phi)
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0] == 'z,value'


def test_profile_on_another_grid(grid, tmp_path):
    path = str(tmp_path / 'coarse.csv')
    coarse = build_grid(0.04, n_base=128)
    write_profile(path, coarse.nodes, np.zeros(coarse.size))
    with pytest.raises(ProfileMismatch):
        load_profile(path, grid)


def test_foreign_table_is_rejected(tmp_path):
    path = tmp_path / 'other.csv'
    path.write_text('x,y\n1,2\n')
    with pytest.raises(ProfileMismatch):
        read_profile(str(path))


def test_incomplete_result_is_rejected(tmp_path):
    path = str(tmp_path / 'result.json')
    write_json(path, {'delta': 0.04, 'eps': 3e-4, 'teps': 1e-3, 'grid_meta': {'z_max': 10.0}})
    with pytest.raises(ProfileMismatch, match='n_base'):
        read_result(path)


def test_invalid_format(grid, tmp_path):
    with pytest.raises(ValueError):
        write_profile(str(tmp_path / 'p.xml'), grid.nodes, np.zeros(grid.size), 'xml')


def test_sweep_csv(tmp_path):
    path = str(tmp_path / 'sweep.csv')
    write_sweep(path, ROWS, 'csv')
    rows = read_sweep_csv(path)
    assert tuple(rows[0]) == SWEEP_FIELDS
    assert float(rows[0]['eps']) == 3.1e-4
    assert float(rows[0]['law_value']) == ROWS[0].law_value
    assert rows[0]['error'] == ''
    assert rows[1]['eps'] == '' and rows[1]['error'].startswith('BracketFailure')


def test_sweep_json(tmp_path):
    path = tmp_path / 'sweep.json'
    write_sweep(str(path), ROWS, 'json', extrapolate=4.0)
    data = json.loads(path.read_text())
    assert data['kappa_extrapolate'] == 4.0 and data['law_extrapolate'] == 16.0
    assert data['rows'][1]['eps'] is None
    assert data['rows'][0]['log_eps'] == pytest.approx(math.log(3.1e-4))
    write_sweep(str(path), ROWS[1:], 'json', extrapolate=math.nan)
    assert json.loads(path.read_text())['kappa_extrapolate'] is None
