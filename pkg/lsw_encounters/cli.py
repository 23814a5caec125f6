"""The ``lsw`` command line: profiles, solves, sweeps and residual checks."""

import argparse
import os
import sys
import typing as tp

from .config import apply_overrides, load_config, parse_deltas, solver_config
from .diagnostics import (differential_residual, extrapolate_law, integral_equation_residual, mean_field_check,
                          moments, sweep_scaling)
from .exceptions import (BracketFailure, ConfigError, MaxIterExceeded, NonContraction, NumericalFailure)
from .homogeneous import hat_psi
from .kernels import ParamState, phi_lsw
from .literals import COMMANDS, OUTPUT_FORMATS
from .log import error, log, setup_logging, warn
from .notifications import IterationProgress, Notifier, SweepProgress
from .solver import solve_profile
from .storage import load_profile, read_result, save_profile, write_json, write_profile, write_result, write_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BRACKET = 3
EXIT_NON_CONTRACTION = 4
EXIT_MAX_ITER = 5
EXIT_IO = 6
EXIT_NUMERICAL = 7


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='lsw', description="Self-similar solutions of the LSW model with encounters")
    parser.add_argument('command', choices=COMMANDS.__args__)
    parser.add_argument('--delta', type=float, help="distance of the mean field below the LSW value")
    parser.add_argument('--deltas', type=str, help="comma separated deltas for sweep")
    parser.add_argument('--beta1', type=float)
    parser.add_argument('--beta2', type=float)
    parser.add_argument('--zmax', dest='z_max', type=float)
    parser.add_argument('--nbase', dest='n_base', type=int)
    parser.add_argument('--layer-resolution', dest='layer_resolution', type=int)
    parser.add_argument('--tol', dest='tol_profile', type=float)
    parser.add_argument('--tol-params', dest='tol_params', type=float)
    parser.add_argument('--max-iter', dest='max_iter', type=int)
    parser.add_argument('--start', choices=('hat', 'lsw'))
    parser.add_argument('--workers', type=int)
    parser.add_argument('--out', type=str)
    parser.add_argument('--format', choices=OUTPUT_FORMATS.__args__)
    parser.add_argument('--profile', type=str, help="stored profile for the residual command")
    parser.add_argument('--result', type=str, help="stored solve result for the residual command")
    parser.add_argument('--config', type=str, help="JSON config file")
    parser.add_argument('--log-file', dest='log_file', type=str)
    parser.add_argument('--debug', action='store_true', default=None)
    return parser


def _output_path(config, default_stem: str) -> str:
    return config.out or f"{default_stem}.{config.format}"


def _log_event(event):
    if isinstance(event, IterationProgress):
        log(f"delta={event.delta!r} iteration {event.iteration}: residual {event.residual:.3e}")
    elif isinstance(event, SweepProgress):
        log(f"sweep {event.done}/{event.total} done, {event.failed} failed")


## Commands


def command_lsw(config) -> str:
    grid = solver_config(config).build_grid()
    path = _output_path(config, 'lsw_profile')
    write_profile(path, grid.nodes, phi_lsw(grid.nodes), config.format)
    return path


def command_psi(config) -> str:
    grid = solver_config(config).build_grid()
    path = _output_path(config, 'psi_profile')
    write_profile(path, grid.nodes, hat_psi(grid).values, config.format)
    return path


def command_solve(config, notifier: Notifier) -> str:
    result = solve_profile(solver_config(config), notifier=notifier)
    path = config.out or 'solve_result.json'
    stem, _ = os.path.splitext(path)
    write_result(path, result)
    save_profile(f"{stem}_profile.{config.format}", result.profile, config.format)
    return path


def command_sweep(config, notifier: Notifier) -> str:
    deltas = parse_deltas(config.deltas)
    if not deltas:
        raise ConfigError("sweep needs at least one delta")
    rows = sweep_scaling(deltas, solver_config(config, deltas[0]), config.workers, notifier)
    path = _output_path(config, 'sweep')
    write_sweep(path, rows, config.format, extrapolate_law(rows))
    failed = [row.delta for row in rows if not row.ok]
    if failed:
        warn(f"Sweep rows failed for delta in {failed}")
    return path


def command_residual(config) -> str:
    if not config.get('profile') or not config.get('result'):
        raise ConfigError("residual needs --profile and --result")
    stored = read_result(config.result)
    config = apply_overrides(config, {'delta': stored['delta'], 'z_max': stored['grid_meta']['z_max'],
                                      'n_base': stored['grid_meta']['n_base'],
                                      'layer_resolution': stored['grid_meta']['layer_resolution']})
    solver = solver_config(config)
    phi = load_profile(config.profile, solver.build_grid(), solver.norm_spec)
    params = ParamState(stored['delta'], stored['eps'], stored['teps'])
    report = {
        'delta': params.delta,
        'integral_residual': integral_equation_residual(phi, params),
        'differential_residual': differential_residual(phi, params),
        'first_moment': moments(phi, 1),
        'mass': moments(phi, 0),
        'm0': params.m0,
        'mean_field_gap': mean_field_check(phi, params).gap,
    }
    path = config.out or 'residual.json'
    write_json(path, report)
    return path


## Entry point


def _exit_code(e: BaseException) -> int:
    if isinstance(e, BracketFailure):
        return EXIT_BRACKET
    if isinstance(e, NonContraction):
        return EXIT_NON_CONTRACTION
    if isinstance(e, MaxIterExceeded):
        return EXIT_MAX_ITER
    if isinstance(e, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(e, OSError):
        return EXIT_IO
    return EXIT_USAGE


def run_cli(argv: tp.Optional[tp.Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = load_config(args.config)
        overrides = {key: value for key, value in vars(args).items() if key not in ('command', 'config')}
        config = apply_overrides(config, overrides)
        solver_config(config)
    except (ConfigError, ValueError) as e:
        error(f"Invalid configuration: {e}", record=False)
        return EXIT_USAGE
    except OSError as e:
        error(f"Could not read configuration: {e}", record=False)
        return EXIT_IO

    setup_logging(config.log_file, config.debug)
    notifier = Notifier()
    notifier.add_hook('log', _log_event)
    log(f"lsw {args.command} {solver_config(config).to_dict()}")

    try:
        if args.command == 'lsw':
            path = command_lsw(config)
        elif args.command == 'psi':
            path = command_psi(config)
        elif args.command == 'solve':
            path = command_solve(config, notifier)
        elif args.command == 'sweep':
            path = command_sweep(config, notifier)
        else:
            path = command_residual(config)
    except (NumericalFailure, OSError, ValueError) as e:
        error(f"{args.command} failed: {type(e).__name__}: {e}")
        return _exit_code(e)
    log(f"lsw {args.command} wrote {path}")
    print(path)
    return EXIT_OK


def run():
    sys.exit(run_cli())
