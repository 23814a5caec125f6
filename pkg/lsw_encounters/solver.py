"""The profile fixed point.

One application of the map takes a profile ``phi``, forms the source
``h = phi * phi``, solves the compatibility conditions for (eps, teps) and
returns ``eps J[h; eps, teps]``. ``solve_profile`` iterates the map from the
ball centre until successive iterates agree in the Z-norm.
"""

from __future__ import annotations

import math
import typing as tp
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .exceptions import ConfigError, InvalidParameters, MaxIterExceeded, NonContraction
from .homogeneous import PsiProfile, compute_psi, hat_psi, tail_factor, transfer
from .kernels import ParamState, eval_a
from .literals import MU_POLICIES, START_PROFILES
from .log import log
from .notifications import IterationProgress, SolveFinished, SolveStarted, spread
from .params import ParamSolveResult, lsw_profile, solve_params, transfer_source
from .profiles import NormSpec, Profile, convolve, distance, edge_tail_norm, envelope_tail_integral
from .quadrature import LAYER_RESOLUTION, MIN_BASE_CELLS, MIN_LAYER_RESOLUTION, MIN_Z_MAX, Grid, build_grid


@lru_cache(maxsize=8)
def cached_grid(delta: float, z_max: float, n_base: int, layer_resolution: int) -> Grid:
    """Profiles can only be combined on the same grid object; equal settings share one."""
    return build_grid(delta, z_max, n_base, layer_resolution)


@dataclass(frozen=True)
class SolverConfig:
    delta: float
    norm_spec: NormSpec = field(default_factory=NormSpec)
    z_max: float = 10.0
    n_base: int = 400
    layer_resolution: int = LAYER_RESOLUTION
    tol_profile: float = 1e-8
    tol_params: float = 1e-10
    max_iter: int = 100
    mu_policy: str = 'max'
    tail_tolerance: float = 1e-2
    start: str = 'hat'

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta!r}")
        if not (self.z_max >= MIN_Z_MAX) or not math.isfinite(self.z_max):
            raise ConfigError(f"z_max must be at least {MIN_Z_MAX}, got {self.z_max!r}")
        if self.n_base < MIN_BASE_CELLS or self.layer_resolution < MIN_LAYER_RESOLUTION:
            raise ConfigError(f"Grid too coarse: n_base={self.n_base!r}, layer_resolution={self.layer_resolution!r}")
        for name in ('tol_profile', 'tol_params', 'tail_tolerance'):
            value = getattr(self, name)
            if not (value > 0) or not math.isfinite(value):
                raise ConfigError(f"{name} must be positive, got {value!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if self.mu_policy not in MU_POLICIES.__args__:
            raise ConfigError(f"Unknown mu policy {self.mu_policy!r}")
        if self.start not in START_PROFILES.__args__:
            raise ConfigError(f"Unknown start profile {self.start!r}, expected one of {START_PROFILES.__args__}")

    def build_grid(self) -> Grid:
        return cached_grid(self.delta, float(self.z_max), int(self.n_base), int(self.layer_resolution))

    def refined(self, factor: int = 2) -> SolverConfig:
        return replace(self, n_base=self.n_base * factor, layer_resolution=self.layer_resolution * factor)

    def to_dict(self) -> dict:
        return {
            'delta': self.delta,
            'beta1': self.norm_spec.beta1,
            'beta2': self.norm_spec.beta2,
            'z_max': self.z_max,
            'n_base': self.n_base,
            'layer_resolution': self.layer_resolution,
            'tol_profile': self.tol_profile,
            'tol_params': self.tol_params,
            'max_iter': self.max_iter,
            'tail_tolerance': self.tail_tolerance,
            'start': self.start,
        }


@dataclass(frozen=True)
class FixedPointResult:
    profile: Profile
    params: ParamState
    iterations: int
    contraction_ratios: tp.List[float]
    final_residual: float
    in_ball: bool
    mu: float
    ball_distance: float
    tail_bound: float
    param_result: ParamSolveResult
    residual_history: tp.List[float] = field(default_factory=list)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    def to_dict(self) -> dict:
        params = self.params.to_dict()
        return {
            'delta': params['delta'],
            'lambda': params['lambda'],
            'eps': params['eps'],
            'teps': params['teps'],
            'm0': params['m0'],
            'iterations': self.iterations,
            'ratios': [float(r) for r in self.contraction_ratios],
            'residual': self.final_residual,
            'in_ball': self.in_ball,
            'mu': self.mu,
            'ball_distance': self.ball_distance,
            'tail_bound': self.tail_bound,
            'band_alpha': self.param_result.band_alpha,
            'grid_meta': self.grid.describe(),
        }


## The transfer operator J


def _check_operands(h: Profile, params: ParamState, psi: PsiProfile, grid: Grid):
    if h.grid is not grid or psi.grid is not grid:
        raise InvalidParameters("Source and psi must live on the given grid")
    if psi.params != params:
        raise InvalidParameters("psi was computed for different parameters")


def apply_J(h: Profile, params: ParamState, psi: PsiProfile, grid: Grid) -> Profile:
    """``J[h](z) = int_z^{z_max} xi a(xi) h(xi) psi(z) / psi(xi) dxi`` at every node."""
    _check_operands(h, params, psi, grid)
    values = transfer(transfer_source(h, params.delta), psi.log_weight)
    return Profile(grid, values, h.norm_spec)


def j_tail_bound(h: Profile, params: ParamState, psi: PsiProfile) -> np.ndarray:
    """Node-wise bound on the part of J coming from beyond z_max.

    Beyond z_max, ``xi a(xi) <= A = z_max a(z_max)`` and the weight grows at most
    like ``(xi / z_max) ** (2 A)``; ``h`` keeps the weighted decay it has over the
    last unit before z_max.
    """
    grid = h.grid
    spec = h.norm_spec
    edge = grid.z_max * float(eval_a(grid.z_max, params.delta))
    tail_norm = edge_tail_norm(h)
    envelope = envelope_tail_integral(2 * edge - spec.beta2, spec.beta1, grid.z_max)
    constant = edge * tail_norm * envelope * grid.z_max ** (-2 * edge)
    return constant * tail_factor(psi.log_weight)


def j_components(h: Profile, params: ParamState, psi: PsiProfile,
                 grid: Grid) -> tuple[Profile, Profile, Profile]:
    """``(J1, J2, J3)``: J1 and J2 split J on [0, 1), J3 is J on [1, z_max].

    ``J1(z) = psi(z) int_0 xi a h / psi`` is a multiple of psi; J2 is the rest
    of J below 1.
    """
    j = apply_J(h, params, psi, grid)
    z = grid.nodes
    below = z < 1.0
    s = psi.log_weight.s_values
    j1 = np.where(below, j.values[0] * np.exp(-s), 0.0)
    j2 = np.where(below, j.values - j1, 0.0)
    j3 = np.where(below, 0.0, j.values)
    return Profile(grid, j1, h.norm_spec), Profile(grid, j2, h.norm_spec), Profile(grid, j3, h.norm_spec)


def split_J(h: Profile, params: ParamState, psi: PsiProfile, grid: Grid) -> tuple[Profile, Profile]:
    """``(J_app, J_res)`` with ``J_app = chi_[0,1) psi int xi J dxi``."""
    j = apply_J(h, params, psi, grid)
    mass = grid.integrate(grid.nodes * j.values)
    approximate = np.where(grid.nodes < 1.0, psi.values * mass, 0.0)
    j_app = Profile(grid, approximate, h.norm_spec)
    return j_app, j - j_app


## The map and its iteration


@dataclass(frozen=True)
class _Step:
    profile: Profile
    params: ParamState
    param_result: ParamSolveResult
    tail_bound: float


def _step(phi: Profile, config: SolverConfig) -> _Step:
    grid = phi.grid
    if grid.delta != config.delta:
        raise InvalidParameters(f"Profile grid was built for delta={grid.delta!r}, config has {config.delta!r}")
    h = convolve(phi, phi)
    result = solve_params(h, config.delta, grid, config.tol_params, tail_tolerance=config.tail_tolerance)
    params = result.state(config.delta)
    psi = compute_psi(params, grid)
    j = transfer(transfer_source(h, params.delta), psi.log_weight)
    tail = params.eps * float(np.max(j_tail_bound(h, params, psi)))
    return _Step(Profile(grid, params.eps * j, phi.norm_spec), params, result, tail)


def apply_Ibar(phi: Profile, config: SolverConfig) -> tuple[Profile, ParamState]:
    step = _step(phi, config)
    return step.profile, step.params


def ball_center(grid: Grid, norm_spec: tp.Optional[NormSpec] = None) -> Profile:
    """The homogeneous solution with eps = teps = 0, cut off at z = 1."""
    return Profile(grid, hat_psi(grid).values, norm_spec).restricted(0.0, 1.0)


def mu_delta(delta: float, k1: float, hat_distance: float) -> float:
    """Ball radius; the ball is ``||phi - center|| <= mu ** 2``."""
    return max(delta ** 0.25, 2.0 / math.sqrt(delta * k1), 2.0 * math.sqrt(hat_distance))


def _start_profile(config: SolverConfig, grid: Grid, center: Profile, initial: tp.Optional[Profile]) -> Profile:
    if initial is not None:
        if initial.grid is not grid:
            raise InvalidParameters("The initial profile lives on another grid")
        return initial.with_norm(config.norm_spec)
    if config.start == 'lsw':
        return lsw_profile(grid, config.norm_spec)
    return center


def solve_profile(config: SolverConfig, initial: tp.Optional[Profile] = None,
                  notifier=None) -> FixedPointResult:
    """Iterate the profile map to its fixed point.

    The returned profile is the last iterate; ``params`` are the parameters it
    was built with, so it satisfies both compatibility conditions on the grid.
    """
    grid = config.build_grid()
    center = ball_center(grid, config.norm_spec)
    phi = _start_profile(config, grid, center, initial)
    spread(notifier, SolveStarted(config.delta))
    log(f"solve delta={config.delta!r} grid={grid!r} start={'given' if initial is not None else config.start}")

    ratios: tp.List[float] = []
    residuals: tp.List[float] = []
    above = 0
    for iteration in range(1, config.max_iter + 1):
        step = _step(phi, config)
        residual = distance(step.profile, phi)
        ratio = residual / residuals[-1] if residuals and residuals[-1] > 0 else None
        residuals.append(residual)
        if ratio is not None:
            ratios.append(ratio)
        log(f"solve delta={config.delta!r} iteration={iteration} residual={residual:.3e} ratio={ratio} "
            f"eps={step.params.eps!r} teps={step.params.teps!r}")
        spread(notifier, IterationProgress(config.delta, iteration, residual, ratio,
                                           step.params.eps, step.params.teps))
        phi = step.profile
        if residual <= config.tol_profile:
            break
        above = above + 1 if ratio is not None and ratio > 1.0 else 0
        if above >= 2:
            raise NonContraction(ratios)
    else:
        raise MaxIterExceeded(config.max_iter, residuals[-1])

    k1 = step.param_result.K[0]
    hat_distance = distance(center, lsw_profile(grid, config.norm_spec))
    mu = mu_delta(config.delta, k1, hat_distance)
    ball_distance = distance(phi, center)
    result = FixedPointResult(
        profile=phi, params=step.params, iterations=iteration, contraction_ratios=ratios,
        final_residual=residuals[-1], in_ball=ball_distance <= mu * mu, mu=mu,
        ball_distance=ball_distance, tail_bound=step.tail_bound, param_result=step.param_result,
        residual_history=residuals,
    )
    log(f"solve delta={config.delta!r} finished after {iteration} iterations, eps={step.params.eps!r}, "
        f"in_ball={result.in_ball}")
    spread(notifier, SolveFinished(result))
    return result


def fixed_point_residual(phi: Profile, config: SolverConfig) -> float:
    """``||phi - Ibar[phi]||`` in the Z-norm."""
    return distance(apply_Ibar(phi, config)[0], phi)
