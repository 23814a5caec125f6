"""Reading and writing profiles, solve results and sweep tables.

Numbers are written with ``repr`` so they read back bit for bit. Nothing
time-dependent goes into a file, so equal runs give equal files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import typing as tp

import numpy as np

from .exceptions import ProfileMismatch
from .literals import OUTPUT_FORMATS
from .profiles import NormSpec, Profile
from .quadrature import Grid

if tp.TYPE_CHECKING:
    from .diagnostics import SweepRow
    from .solver import FixedPointResult

PROFILE_FIELDS = ('z', 'value')
SWEEP_FIELDS = ('delta', 'eps', 'teps', 'log_eps', 'law_value', 'lead_eps', 'iterations', 'residual', 'error')
RESULT_FIELDS = ('delta', 'eps', 'teps', 'grid_meta')
GRID_FIELDS = ('z_max', 'n_base', 'layer_resolution')


def _prepare(path: str):
    if base_dir := os.path.dirname(path):
        os.makedirs(base_dir, exist_ok=True)


def _number(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ''
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def check_format(fmt: str):
    if fmt not in OUTPUT_FORMATS.__args__:
        raise ValueError(f"Invalid output format: {fmt}")


## Profiles


def write_profile(path: str, z: np.ndarray, values: np.ndarray, fmt: str = 'csv'):
    check_format(fmt)
    _prepare(path)
    if fmt == 'csv':
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(PROFILE_FIELDS)
            for node, value in zip(z, values):
                writer.writerow((repr(float(node)), repr(float(value))))
    else:
        with open(path, 'w') as f:
            json.dump({'z': [float(x) for x in z], 'value': [float(v) for v in values]}, f, indent=4)


def save_profile(path: str, profile: Profile, fmt: str = 'csv'):
    write_profile(path, profile.grid.nodes, profile.values, fmt)


def read_profile(path: str) -> tuple[np.ndarray, np.ndarray]:
    """``(z, values)`` from a CSV or JSON profile, picked by the file extension."""
    if path.endswith('.json'):
        with open(path) as f:
            data = json.load(f)
        return np.array(data['z'], dtype=float), np.array(data['value'], dtype=float)
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != PROFILE_FIELDS:
            raise ProfileMismatch(f"{path} is not a profile table (columns {reader.fieldnames})")
        rows = [(float(row['z']), float(row['value'])) for row in reader]
    z, values = zip(*rows) if rows else ((), ())
    return np.array(z, dtype=float), np.array(values, dtype=float)


def load_profile(path: str, grid: Grid, norm_spec: tp.Optional[NormSpec] = None) -> Profile:
    z, values = read_profile(path)
    if z.shape != grid.nodes.shape or not np.array_equal(z, grid.nodes):
        raise ProfileMismatch(f"{path} was not written on {grid!r}")
    return Profile(grid, values, norm_spec)


## Results


def write_json(path: str, data: dict):
    _prepare(path)
    with open(path, 'w') as f:
        json.dump(data, f, indent=4)


def write_result(path: str, result: FixedPointResult):
    write_json(path, result.to_dict())


def read_result(path: str) -> dict:
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ProfileMismatch(f"{path} does not hold a solve result")
    missing = [key for key in RESULT_FIELDS if key not in data]
    missing += [key for key in GRID_FIELDS if key not in (data.get('grid_meta') or {})]
    if missing:
        raise ProfileMismatch(f"{path} is missing {', '.join(missing)}")
    return data


## Sweeps


def write_sweep_csv(path: str, rows: tp.Sequence[SweepRow]):
    _prepare(path)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_FIELDS)
        for row in rows:
            data = row.to_dict()
            cells = [_number(data[key]) for key in SWEEP_FIELDS[:-1]]
            writer.writerow(cells + [data['error'] or ''])


def write_sweep_json(path: str, rows: tp.Sequence[SweepRow], extrapolate: tp.Optional[float] = None):
    _prepare(path)
    payload = {
        'rows': [row.to_dict() for row in rows],
        'kappa_extrapolate': None if extrapolate is None or math.isnan(extrapolate) else extrapolate,
        'law_extrapolate': None if extrapolate is None or math.isnan(extrapolate) else extrapolate ** 2,
    }
    with open(path, 'w') as f:
        json.dump(payload, f, indent=4)


def write_sweep(path: str, rows: tp.Sequence[SweepRow], fmt: str = 'csv', extrapolate: tp.Optional[float] = None):
    check_format(fmt)
    if fmt == 'csv':
        write_sweep_csv(path, rows)
    else:
        write_sweep_json(path, rows, extrapolate)


def read_sweep_csv(path: str) -> tp.List[dict]:
    with open(path, newline='') as f:
        return list(csv.DictReader(f))
