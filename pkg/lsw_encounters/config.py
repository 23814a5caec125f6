import json
import os
from numbers import Number
from typing import List, Mapping, Optional, TypedDict, Union

import appdirs
from box import Box

from .exceptions import ConfigError
from .literals import OUTPUT_FORMATS, START_PROFILES
from .profiles import NormSpec
from .solver import SolverConfig

AUTHOR = "lsw-encounters"
APP_NAME = "LSWEncounters"
USER_CONFIG_DIR = appdirs.user_config_dir(APP_NAME, AUTHOR)
USER_LOG_DIR = appdirs.user_log_dir(APP_NAME, AUTHOR)
CONFIG_FILE = os.path.join(USER_CONFIG_DIR, 'config.json')
ENV_PREFIX = 'LSW_'


class ConfigDict(TypedDict):
    delta: Number
    deltas: List[Number]
    beta1: Number
    beta2: Number
    z_max: Number
    n_base: int
    layer_resolution: int
    tol_profile: Number
    tol_params: Number
    tail_tolerance: Number
    max_iter: int
    start: START_PROFILES
    workers: int
    format: OUTPUT_FORMATS
    out: Union[None, str]
    log_file: str
    debug: bool


DEFAULT_CONFIG: ConfigDict = {
    'delta': 0.04,
    'deltas': [0.1, 0.05, 0.02, 0.01],
    'beta1': 1.0,
    'beta2': 2.0,
    'z_max': 10.0,
    'n_base': 400,
    'layer_resolution': 40,
    'tol_profile': 1e-8,
    'tol_params': 1e-10,
    'tail_tolerance': 1e-2,
    'max_iter': 100,
    'start': 'hat',
    'workers': 1,
    'format': 'json',
    'out': None,
    'log_file': os.path.join(USER_LOG_DIR, 'lsw.log'),
    'debug': False,
}

ConfigType = Box[ConfigDict]

_FLOAT_KEYS = ('delta', 'beta1', 'beta2', 'z_max', 'tol_profile', 'tol_params', 'tail_tolerance')
_INT_KEYS = ('n_base', 'layer_resolution', 'max_iter', 'workers')


def parse_deltas(text: Union[str, List[Number]]) -> List[float]:
    """``'0.1,0.05'`` or a list into floats."""
    if isinstance(text, str):
        parts = [part for part in text.replace(' ', '').split(',') if part]
    else:
        parts = list(text)
    try:
        return [float(part) for part in parts]
    except ValueError as e:
        raise ConfigError(f"Invalid delta list: {text!r}") from e


def _coerce(key: str, value):
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
        if key == 'debug' and isinstance(value, str):
            return value.strip().lower() in ('1', 'true', 'yes', 'on')
        if key == 'deltas':
            return parse_deltas(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {key}: {value!r}") from e
    return value


def _from_environ(environ: Mapping[str, str]) -> dict:
    changes = {}
    for key in DEFAULT_CONFIG:
        if (value := environ.get(ENV_PREFIX + key.upper())) is not None:
            changes[key] = value
    return changes


def _validate(config: dict):
    if config['format'] not in OUTPUT_FORMATS.__args__:
        raise ConfigError(f"Invalid format: {config['format']}")
    if config['start'] not in START_PROFILES.__args__:
        raise ConfigError(f"Invalid start profile: {config['start']}")
    if config['workers'] < 1:
        raise ConfigError(f"workers must be at least 1, got {config['workers']}")


def load_config(file: Optional[str] = None, environ: Optional[Mapping[str, str]] = None) -> ConfigType:
    """Defaults, then the JSON config file, then ``LSW_*`` environment variables.

    Without an explicit file the user config file is read when it exists. The
    file is never written.
    """
    config = dict(DEFAULT_CONFIG)
    environ = os.environ if environ is None else environ

    if file is None and os.path.exists(CONFIG_FILE):
        file = CONFIG_FILE
    if file is not None:
        try:
            with open(file) as f:
                current_json = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file {file} does not exist") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {file} is not valid JSON: {e}") from e
        if not isinstance(current_json, dict):
            raise ConfigError(f"Config file {file} must hold a JSON object")
        config = {**config, **current_json}

    config = {**config, **_from_environ(environ)}
    config = {key: _coerce(key, value) for key, value in config.items()}
    _validate(config)
    return Box(config)


def apply_overrides(config: ConfigType, overrides: Mapping[str, object]) -> ConfigType:
    """Command line values win over everything; ``None`` means not given."""
    merged = {**config.to_dict(), **{key: _coerce(key, value) for key, value in overrides.items()
                                     if value is not None}}
    _validate(merged)
    return Box(merged)


def solver_config(config: ConfigType, delta: Optional[float] = None) -> SolverConfig:
    try:
        norm_spec = NormSpec(config.beta1, config.beta2)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return SolverConfig(
        delta=float(config.delta if delta is None else delta),
        norm_spec=norm_spec,
        z_max=config.z_max,
        n_base=config.n_base,
        layer_resolution=config.layer_resolution,
        tol_profile=config.tol_profile,
        tol_params=config.tol_params,
        max_iter=config.max_iter,
        tail_tolerance=config.tail_tolerance,
        start=config.start,
    )
