from .kernels import KAPPA, LAMBDA_LSW, SCALING_LAW_CONSTANT, ParamState, phi_lsw
from .quadrature import Grid, build_grid
from .profiles import NormSpec, Profile, convolve, z_norm
from .homogeneous import compute_psi, hat_psi
from .params import solve_params
from .solver import FixedPointResult, SolverConfig, apply_Ibar, apply_J, solve_profile, split_J
from .diagnostics import SweepRow, sweep_scaling, tail_fit
from .cli import run, run_cli

__all__ = ['KAPPA', 'LAMBDA_LSW', 'SCALING_LAW_CONSTANT', 'ParamState', 'phi_lsw', 'Grid', 'build_grid',
           'NormSpec', 'Profile', 'convolve', 'z_norm', 'compute_psi', 'hat_psi', 'solve_params',
           'FixedPointResult', 'SolverConfig', 'apply_Ibar', 'apply_J', 'solve_profile', 'split_J',
           'SweepRow', 'sweep_scaling', 'tail_fit', 'run_cli', 'run']
