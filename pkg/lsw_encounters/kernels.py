"""Closed-form ingredients of the rescaled model.

With ``t = z ** (1/3)`` and ``t0 = 2 ** (-1/3)`` the LSW denominator
factorises as ``1 + t**3 - LAMBDA_LSW * t = (t - t0)**2 * (t + 2 t0)``, so

    a_delta(z) = 1 / ((t - t0)**2 (t + 2 t0) + delta t)
    b_delta(z) = 2 - (LAMBDA_LSW - delta) / (3 t**2)

Evaluating the factorised form avoids the cancellation of ``1 + z`` against
``LAMBDA_LSW z ** (1/3)`` at the double root z = 1/2.

The same factorisation gives the LSW profile in closed form through the
partial fractions of ``(6 t**2 - LAMBDA_LSW) / ((t - t0)**2 (t + 2 t0))``.
"""

from __future__ import annotations

import math
import typing as tp
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .exceptions import InvalidParameters, KernelDomainError
from .quadrature import Grid

if tp.TYPE_CHECKING:
    from .profiles import Profile

LAMBDA_LSW = 3.0 * 2.0 ** (-2.0 / 3.0)
LAYER_ROOT = 2.0 ** (-1.0 / 3.0)
KAPPA = math.sqrt(3.0) * math.pi / 2.0 ** (1.0 / 3.0)
SCALING_LAW_CONSTANT = 3.0 * math.pi ** 2 / 2.0 ** (2.0 / 3.0)

_ROOT_GUARD = 1e-9

ArrayLike = tp.Union[float, np.ndarray]


def _output(values: np.ndarray, like) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(values)
    return values


@dataclass(frozen=True)
class ParamState:
    """The scalar state (delta, eps, teps) of one solve.

    ``mean_field`` is the rescaled mean field ``LAMBDA_LSW - delta`` and
    ``m0 = teps / eps`` the number density the parameters encode.
    """

    delta: float
    eps: float = 0.0
    teps: float = 0.0

    def __post_init__(self):
        if not (self.delta > 0) or not math.isfinite(self.delta):
            raise InvalidParameters(f"delta must be positive, got {self.delta!r}")
        if not (self.eps >= 0) or not (self.teps >= 0):
            raise InvalidParameters(f"eps and teps must be nonnegative, got {self.eps!r}, {self.teps!r}")

    @property
    def mean_field(self) -> float:
        return LAMBDA_LSW - self.delta

    @property
    def m0(self) -> float:
        if self.eps == 0:
            return math.nan
        return self.teps / self.eps

    @property
    def is_hat(self) -> bool:
        return self.eps == 0 and self.teps == 0

    def with_parameters(self, eps: float, teps: float) -> ParamState:
        return replace(self, eps=float(eps), teps=float(teps))

    def to_dict(self) -> dict:
        return {
            'delta': self.delta,
            'lambda': self.mean_field,
            'eps': self.eps,
            'teps': self.teps,
            'm0': None if self.eps == 0 else self.m0,
        }


def denominator(t, delta: float):
    """``1 + t**3 - (LAMBDA_LSW - delta) t`` in factorised form."""
    return (t - LAYER_ROOT) ** 2 * (t + 2.0 * LAYER_ROOT) + delta * t


def eval_a(z: ArrayLike, delta: float) -> ArrayLike:
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise KernelDomainError("a_delta is defined for z >= 0 only")
    if delta < 0:
        raise KernelDomainError(f"delta must be nonnegative, got {delta!r}")
    t = np.cbrt(z_arr)
    if delta == 0 and np.any(np.abs(t - LAYER_ROOT) < _ROOT_GUARD):
        raise KernelDomainError("a_0 is singular at z = 1/2")
    return _output(1.0 / denominator(t, delta), z)


def eval_b(z: ArrayLike, delta: float) -> ArrayLike:
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0):
        raise KernelDomainError("b_delta is singular at z = 0; integrate it through the grid instead")
    t = np.cbrt(z_arr)
    return _output(2.0 - (LAMBDA_LSW - delta) / (3.0 * t * t), z)


# Densities in t: the integrand times dz/dt = 3 t**2, all bounded on [0, inf).

def exponent_density(t, delta: float, eps: float = 0.0, teps: float = 0.0):
    """``a (b - teps z - eps) dz/dt``; its integral is the log weight S."""
    t2 = t * t
    return (6.0 * t2 - (LAMBDA_LSW - delta) - 3.0 * t2 * (eps + teps * t2 * t)) / denominator(t, delta)


def a_density(t, delta: float):
    return 3.0 * t * t / denominator(t, delta)


def ay_density(t, delta: float):
    return 3.0 * t ** 5 / denominator(t, delta)


def layer_integral(delta: float, upper: float = 1.0) -> float:
    """``int_0^upper a_delta`` by adaptive quadrature, with the layer as a break point."""
    tu = np.cbrt(upper)
    points = [LAYER_ROOT] if tu > LAYER_ROOT else None
    value, _ = quad(a_density, 0.0, tu, args=(delta,), points=points, limit=500, epsabs=0.0, epsrel=1e-13)
    return value


def exponent_integral(lower: float, upper: float, delta: float, eps: float = 0.0, teps: float = 0.0) -> float:
    """``int_lower^upper a (b - teps y - eps) dy`` by adaptive quadrature."""
    tl, tu = np.cbrt(lower), np.cbrt(upper)
    points = [LAYER_ROOT] if tl < LAYER_ROOT < tu else None
    value, _ = quad(exponent_density, tl, tu, args=(delta, eps, teps), points=points, limit=500,
                    epsabs=0.0, epsrel=1e-13)
    return value


## The LSW profile


def lsw_exponent(t):
    """Antiderivative of ``a_0 b_0`` in t, zero at the origin; t != t0."""
    t = np.asarray(t, dtype=float)
    ratio = t / LAYER_ROOT
    with np.errstate(divide='ignore'):
        return (11.0 / 3.0 * np.log(np.abs(1.0 - ratio))
                + t / (LAYER_ROOT - t)
                + 7.0 / 3.0 * np.log1p(ratio / 2.0))


@lru_cache(maxsize=1)
def lsw_normalization() -> float:
    """Log of the constant C fixing ``int z phi_lsw dz = 1``."""
    def integrand(t):
        return 3.0 * t ** 5 * math.exp(-float(lsw_exponent(t)))

    mass, _ = quad(integrand, 0.0, LAYER_ROOT, limit=500, epsabs=0.0, epsrel=1e-13)
    return -math.log(mass)


def log_phi_lsw(z: ArrayLike) -> ArrayLike:
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise KernelDomainError("phi_lsw is defined for z >= 0 only")
    t = np.cbrt(z_arr)
    out = np.full(z_arr.shape, -np.inf)
    inside = z_arr < 0.5
    out[inside] = lsw_normalization() - lsw_exponent(t[inside])
    return _output(out, z)


def phi_lsw(z: ArrayLike) -> ArrayLike:
    return _output(np.exp(np.asarray(log_phi_lsw(z))), z)


## Log weight


@dataclass(frozen=True, eq=False)
class LogWeight:
    """Node values of ``S(z) = int_0^z a (b - teps y - eps) dy`` on a grid."""

    grid: Grid
    s_values: np.ndarray
    params: ParamState

    def density(self, t):
        p = self.params
        return exponent_density(t, p.delta, p.eps, p.teps)

    def derivative(self) -> np.ndarray:
        """Exact ``S'`` at the nodes (infinite at the origin)."""
        z = self.grid.nodes
        p = self.params
        with np.errstate(divide='ignore'):
            return eval_a(z, p.delta) * (2.0 - p.mean_field / (3.0 * np.cbrt(z) ** 2) - p.teps * z - p.eps)

    def at(self, z: ArrayLike) -> ArrayLike:
        """S off the nodes, integrating the exponent density from the node below."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        cells = self.grid.cell_of(z_arr)
        out = np.array([self.s_values[k] + self.grid.partial_density(self.density, int(k), float(x))
                        for k, x in zip(cells, z_arr)])
        return _output(out if np.ndim(z) else out[0], z)


@lru_cache(maxsize=16)
def exponent_parts(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cumulative ``int a b``, ``int a`` and ``int a y`` on ``grid``.

    S is linear in (eps, teps): ``S = s_hat - eps * a0 - teps * a1``.
    """
    delta = grid.delta
    s_hat = grid.cumulative_density(lambda t: exponent_density(t, delta))
    a0 = grid.cumulative_density(lambda t: a_density(t, delta))
    a1 = grid.cumulative_density(lambda t: ay_density(t, delta))
    for part in (s_hat, a0, a1):
        part.setflags(write=False)
    return s_hat, a0, a1


def build_log_weight(params: ParamState, grid: Grid) -> LogWeight:
    if params.delta != grid.delta:
        raise InvalidParameters(f"Grid was built for delta={grid.delta!r}, parameters carry {params.delta!r}")
    s_hat, a0, a1 = exponent_parts(grid)
    s = s_hat - params.eps * a0 - params.teps * a1
    s.setflags(write=False)
    return LogWeight(grid, s, params)


## Limit functionals


def rho_delta(xi: float, delta: float) -> float:
    """``xi a_delta(xi) exp(-int_xi^1 a_delta b_delta)`` by adaptive quadrature."""
    if not (0.0 < xi <= 1.0):
        raise KernelDomainError(f"rho_delta is defined on (0, 1], got {xi!r}")
    return xi * eval_a(xi, delta) * math.exp(-exponent_integral(xi, 1.0, delta))


def rho_zero(xi: ArrayLike) -> ArrayLike:
    """The delta = 0 limit of rho_delta, defined on (1/2, 1]."""
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr <= 0.5) or np.any(xi_arr > 1.0):
        raise KernelDomainError("rho_0 is evaluated on (1/2, 1] only")
    t = np.cbrt(xi_arr)
    exponent = lsw_exponent(1.0) - lsw_exponent(t)
    return _output(xi_arr * eval_a(xi_arr, 0.0) * np.exp(-exponent), xi)


def rho_profile(grid: Grid) -> np.ndarray:
    """rho_delta at the nodes in [0, 1] (zero beyond), from the hat log weight."""
    s_hat, _, _ = exponent_parts(grid)
    z = grid.nodes
    one = grid.index_of(1.0)
    values = np.zeros_like(z)
    values[:one + 1] = z[:one + 1] * eval_a(z[:one + 1], grid.delta) * np.exp(s_hat[:one + 1] - s_hat[one])
    return values


def R_delta(h: Profile, delta: float) -> float:
    if delta != h.grid.delta:
        raise InvalidParameters(f"Profile grid was built for delta={h.grid.delta!r}, got {delta!r}")
    return h.grid.integrate(rho_profile(h.grid) * h.values, 0.0, 1.0)


def R_0(h: Profile) -> float:
    grid = h.grid
    z = grid.nodes
    values = np.zeros_like(z)
    inside = (z > 0.5) & (z <= 1.0)
    values[inside] = rho_zero(z[inside]) * h.values[inside]
    return grid.integrate(values, 0.5, 1.0)
