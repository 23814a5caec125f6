"""The compatibility functionals and the fixed point for (eps, teps).

For a candidate source ``h`` the two compatibility conditions read
``g_1 = eps`` and ``g_2 = teps`` with ``g_i = eps**2 G_i`` and

    G_i = int xi a(xi) h(xi) Gamma_i(xi) dxi,
    Gamma_i(xi) = int_0^xi gamma_i(z) exp(S(xi) - S(z)) dz,

where ``gamma_1(z) = z`` and ``gamma_2(z) = 1``. Exchanging the order of
integration gives ``G_1 = int z J dz`` and ``G_2 = int J dz`` for the transfer
operator J; the solve uses that form so the conditions hold exactly for the
discretised J.
"""

from __future__ import annotations

import math
import typing as tp
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import (BracketFailure, InvalidParameters, MaxIterExceeded, NonContraction,
                         SensitivityBreakdown, TailDominance, WeightOverflow)
from .homogeneous import MAX_EXPONENT, PsiProfile, accumulate, transfer
from .kernels import ParamState, R_0, build_log_weight, eval_a, phi_lsw
from .log import log
from .profiles import Profile, convolve, edge_tail_norm, envelope_tail_integral
from .quadrature import Grid

ALPHA = 2.0
DAMPING = 0.5
TAIL_GROWTH_POWER = 4.0


def gamma_weight(i: int, z: np.ndarray) -> np.ndarray:
    if i == 1:
        return np.asarray(z, dtype=float)
    if i == 2:
        return np.ones_like(z, dtype=float)
    raise ValueError(f"Gamma index must be 1 or 2, got {i!r}")


@dataclass(frozen=True, eq=False)
class GammaTable:
    index: int
    params: ParamState
    grid: Grid
    log_values: np.ndarray

    @property
    def hats(self) -> bool:
        return self.params.is_hat

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def log_at_one(self) -> float:
        return float(self.log_values[self.grid.index_of(1.0)])

    @property
    def at_one(self) -> float:
        """``Gamma_i(1)``; the constant K_i for a hat table."""
        return math.exp(self.log_at_one)


@dataclass(frozen=True)
class GValue:
    inner: float
    outer: float
    tail_bar: float

    @property
    def total(self) -> float:
        return self.inner + self.outer


@dataclass(frozen=True)
class ParamSolveResult:
    eps: float
    teps: float
    eps_app: float
    teps_app: float
    band_alpha: float
    iterations: int
    residuals: tuple[float, float]
    damped: bool = False
    evaluations: int = 0
    K: tuple[float, float] = (math.nan, math.nan)
    G_hat: tuple[float, float] = (math.nan, math.nan)
    tail_bars: tuple[float, float] = (0.0, 0.0)

    def state(self, delta: float) -> ParamState:
        return ParamState(delta, self.eps, self.teps)

    def in_band(self, alpha: float = ALPHA) -> bool:
        return self.band_alpha <= alpha

    def to_dict(self) -> dict:
        return {
            'eps': self.eps,
            'teps': self.teps,
            'eps_app': self.eps_app,
            'teps_app': self.teps_app,
            'band_alpha': self.band_alpha,
            'iterations': self.iterations,
            'residuals': list(self.residuals),
            'damped': self.damped,
            'K': list(self.K),
            'G_hat': list(self.G_hat),
            'tail_bars': list(self.tail_bars),
        }


def compute_gamma(i: int, params: ParamState, grid: Grid, psi: tp.Optional[PsiProfile] = None) -> GammaTable:
    if psi is not None:
        if psi.params != params or psi.grid is not grid:
            raise InvalidParameters("psi was computed for different parameters or another grid")
        log_weight = psi.log_weight
    else:
        log_weight = build_log_weight(params, grid)
    log_values = accumulate(gamma_weight(i, grid.nodes), log_weight)
    top = float(np.max(log_values))
    if top > MAX_EXPONENT:
        raise WeightOverflow(top)
    log_values.setflags(write=False)
    return GammaTable(i, params, grid, log_values)


def hat_gammas(grid: Grid) -> tuple[GammaTable, GammaTable]:
    hat = ParamState(grid.delta)
    return compute_gamma(1, hat, grid), compute_gamma(2, hat, grid)


def hat_constants(grid: Grid) -> tuple[float, float]:
    """``(K_1, K_2) = (Gamma_hat_1(1), Gamma_hat_2(1))``."""
    first, second = hat_gammas(grid)
    return first.at_one, second.at_one


def transfer_source(h: Profile, delta: float) -> np.ndarray:
    """``xi a(xi) h(xi)`` at the nodes: the integrand J transports."""
    z = h.grid.nodes
    return z * eval_a(z, delta) * h.values


def compute_G(i: int, h: Profile, params: ParamState, gamma: GammaTable, grid: Grid) -> GValue:
    """``G_i`` split at z = 1, plus an error bar for the part beyond z_max.

    The bar uses ``Gamma_i(xi) <= C xi**4`` with C fitted on [1, z_max], the
    decay ``|h| <= N e^{-beta1 xi} xi^{-beta2}`` with N the weighted sup of h
    over the last unit before z_max, and the decrease of ``xi a(xi)`` beyond 1/2.
    """
    if gamma.index != i or gamma.grid is not grid or h.grid is not grid:
        raise InvalidParameters("Gamma table, profile and grid do not belong together")
    z = grid.nodes
    log_gamma = gamma.log_values
    top = float(np.max(log_gamma))
    values = transfer_source(h, params.delta) * np.exp(log_gamma - top)
    scale = math.exp(top)
    inner = scale * grid.integrate(values, 0.0, 1.0)
    outer = scale * grid.integrate(values, 1.0, grid.z_max)

    beyond = z >= 1.0
    log_growth = float(np.max(log_gamma[beyond] - TAIL_GROWTH_POWER * np.log(z[beyond])))
    spec = h.norm_spec
    edge = grid.z_max * float(eval_a(grid.z_max, params.delta))
    tail_norm = edge_tail_norm(h)
    envelope = envelope_tail_integral(TAIL_GROWTH_POWER - spec.beta2, spec.beta1, grid.z_max)
    tail_bar = math.exp(log_growth) * edge * tail_norm * envelope
    return GValue(inner, outer, tail_bar)


class _Compatibility:
    """Moments of the discretised transfer operator for a fixed source."""

    def __init__(self, h: Profile, delta: float, grid: Grid):
        self.delta = delta
        self.grid = grid
        self.source = transfer_source(h, delta)
        self.evaluations = 0

    def moments(self, eps: float, teps: float) -> tuple[float, float]:
        self.evaluations += 1
        weight = build_log_weight(ParamState(self.delta, eps, teps), self.grid)
        j = transfer(self.source, weight)
        return self.grid.integrate(self.grid.nodes * j), self.grid.integrate(j)

    def g(self, eps: float, teps: float) -> np.ndarray:
        first, second = self.moments(eps, teps)
        return eps * eps * np.array([first, second])


def evaluate_g(h: Profile, params: ParamState, grid: Grid) -> tuple[float, float]:
    g1, g2 = _Compatibility(h, params.delta, grid).g(params.eps, params.teps)
    return float(g1), float(g2)


def _solve_eps(compat: _Compatibility, teps: float, eps_app: float, alpha: float, tol: float) -> float:
    def residual(x: float) -> float:
        first, _ = compat.moments(math.exp(x), teps)
        return x + math.log(first)

    lower, upper = math.log(eps_app / alpha), math.log(eps_app * alpha)
    at_lower, at_upper = residual(lower), residual(upper)
    if at_lower == 0.0:
        return eps_app / alpha
    if at_upper == 0.0:
        return eps_app * alpha
    if at_lower * at_upper > 0:
        raise BracketFailure(eps_app / alpha, eps_app * alpha, (at_lower, at_upper))
    return math.exp(brentq(residual, lower, upper, xtol=tol / 10, rtol=4 * np.finfo(float).eps, maxiter=200))


def solve_params(h: Profile, delta: float, grid: Grid, tol: float = 1e-10, *,
                 alpha: float = ALPHA, initial_teps: tp.Optional[float] = None,
                 tail_tolerance: float = 1e-2, max_outer: int = 100) -> ParamSolveResult:
    """Solve ``g_1 = eps``, ``g_2 = teps`` for the source ``h``.

    The inner solve finds eps for fixed teps by bracketed root finding on
    ``log(g_1 / eps)`` over ``[eps_app / alpha, alpha eps_app]``. The outer loop
    iterates ``teps <- g_2(eps(teps), teps)`` and halves its steps once they
    start to oscillate.
    """
    if h.grid is not grid or grid.delta != delta:
        raise InvalidParameters("The source must live on the grid built for this delta")
    hat = ParamState(delta)
    gammas = hat_gammas(grid)
    g_hat = [compute_G(i, h, hat, gammas[i - 1], grid) for i in (1, 2)]
    for i, value in enumerate(g_hat, start=1):
        if value.inner <= 0:
            raise InvalidParameters("The source has no mass on [0, 1]")
        if value.tail_bar > tail_tolerance * value.inner:
            raise TailDominance(i, value.tail_bar, value.inner)

    eps_app = 1.0 / g_hat[0].inner
    teps_app = eps_app * g_hat[1].inner / g_hat[0].inner
    compat = _Compatibility(h, delta, grid)

    teps = teps_app if initial_teps is None else float(initial_teps)
    previous_step = None
    damping = 1.0
    growth = 0
    steps = []
    for iteration in range(1, max_outer + 1):
        eps = _solve_eps(compat, teps, eps_app, alpha, tol)
        first, second = compat.moments(eps, teps)
        g2 = eps * eps * second
        residual = abs(g2 - teps) / teps
        log(f"params delta={delta!r} outer={iteration} eps={eps!r} teps={teps!r} residual={residual:.3e}")
        if residual <= tol:
            break
        step = g2 - teps
        steps.append(abs(step))
        if previous_step is not None:
            if step * previous_step < 0 and abs(step) > 0.5 * abs(previous_step):
                damping = DAMPING
            growth = growth + 1 if abs(step) > abs(previous_step) else 0
            if growth >= 3:
                raise NonContraction([b / a for a, b in zip(steps[:-1], steps[1:])], stage='parameter')
        previous_step = step
        teps = teps + damping * step
        if teps <= 0:
            raise NonContraction([b / a for a, b in zip(steps[:-1], steps[1:])] or [math.inf], stage='parameter')
    else:
        raise MaxIterExceeded(max_outer, residual)

    residuals = (abs(eps * first - 1.0), residual)
    band = max(eps / eps_app, eps_app / eps, teps / teps_app, teps_app / teps)
    return ParamSolveResult(
        eps=eps, teps=teps, eps_app=eps_app, teps_app=teps_app, band_alpha=band,
        iterations=iteration, residuals=residuals, damped=damping < 1.0,
        evaluations=compat.evaluations,
        K=(gammas[0].at_one, gammas[1].at_one),
        G_hat=(g_hat[0].inner, g_hat[1].inner),
        tail_bars=(g_hat[0].tail_bar, g_hat[1].tail_bar),
    )


def param_sensitivity(h: Profile, params: ParamState, grid: Grid, step: float = 1e-3,
                      consistency: float = 1e-2) -> np.ndarray:
    """``[[eps dg1/deps, teps dg1/dteps], [eps dg2/deps, teps dg2/dteps]]``.

    Central differences in the logarithm of each parameter, at two step sizes;
    the Richardson combination is returned once the two estimates agree.
    """
    compat = _Compatibility(h, params.delta, grid)
    base = compat.g(params.eps, params.teps)
    matrix = np.zeros((2, 2))
    for column, name in enumerate(('eps', 'teps')):
        value = getattr(params, name)
        if value == 0:
            continue

        def shifted(factor: float) -> np.ndarray:
            eps, teps = params.eps, params.teps
            if name == 'eps':
                eps *= factor
            else:
                teps *= factor
            return compat.g(eps, teps)

        def central(eta: float) -> np.ndarray:
            return (shifted(math.exp(eta)) - shifted(math.exp(-eta))) / (2 * eta)

        coarse, fine = central(step), central(step / 2)
        estimate = (4 * fine - coarse) / 3
        scale = np.maximum(np.abs(estimate), np.abs(base))
        if np.any(np.abs(coarse - fine) > consistency * scale):
            raise SensitivityBreakdown(
                f"Difference quotients in {name} disagree: {coarse.tolist()} vs {fine.tolist()}")
        matrix[:, column] = estimate
    return matrix


def lsw_profile(grid: Grid, norm_spec=None) -> Profile:
    return Profile.from_function(grid, phi_lsw, norm_spec)


def lsw_source(grid: Grid, norm_spec=None) -> Profile:
    phi = lsw_profile(grid, norm_spec)
    return convolve(phi, phi)


def lead_eps(grid: Grid) -> tuple[float, float]:
    """Leading-order parameters ``(1 / (K_1 R_0), K_2 / (K_1**2 R_0))`` for the LSW source."""
    k1, k2 = hat_constants(grid)
    r0 = R_0(lsw_source(grid))
    eps = 1.0 / (k1 * r0)
    return eps, eps * k2 / k1
