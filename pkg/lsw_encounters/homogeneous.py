"""The normalised homogeneous solution psi and the transfer kernel built on it.

``psi(z) = N exp(-S(z))`` is never stored directly. Consumers work with
``S`` and ``log N``, and ratios ``psi(z) / psi(xi) = exp(S(xi) - S(z))`` are
formed from exponent differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import WeightOverflow
from .kernels import LogWeight, ParamState, build_log_weight, exponent_parts
from .quadrature import Grid

MAX_EXPONENT = math.log(np.finfo(float).max)


@dataclass(frozen=True, eq=False)
class PsiProfile:
    log_weight: LogWeight
    log_norm: float

    @property
    def grid(self) -> Grid:
        return self.log_weight.grid

    @property
    def params(self) -> ParamState:
        return self.log_weight.params

    @property
    def log_values(self) -> np.ndarray:
        return self.log_norm - self.log_weight.s_values

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def at(self, z):
        return np.exp(self.log_norm - np.asarray(self.log_weight.at(z)))


def log_mass(grid: Grid, s_values: np.ndarray) -> float:
    """``log int_0^1 z exp(-S) dz`` with the largest exponent shifted out."""
    one = grid.index_of(1.0)
    shift = float(np.max(-s_values[:one + 1]))
    mass = grid.integrate(grid.nodes * np.exp(-s_values - shift), 0.0, 1.0)
    return shift + math.log(mass)


def normalize(log_weight: LogWeight) -> PsiProfile:
    return PsiProfile(log_weight, -log_mass(log_weight.grid, log_weight.s_values))


def compute_psi(params: ParamState, grid: Grid) -> PsiProfile:
    return normalize(build_log_weight(params, grid))


def hat_psi(grid: Grid) -> PsiProfile:
    return compute_psi(ParamState(grid.delta), grid)


def check_exponent(exponent: float):
    if exponent > MAX_EXPONENT:
        raise WeightOverflow(exponent)


def psi_ratio(z, xi, psi: PsiProfile):
    """``psi(z) / psi(xi)``, formed as ``exp(S(xi) - S(z))``."""
    if np.all(np.asarray(z) == np.asarray(xi)):
        return 1.0 if np.ndim(z) == 0 else np.ones(np.shape(z))
    weight = psi.log_weight
    exponent = np.asarray(weight.at(xi)) - np.asarray(weight.at(z))
    check_exponent(float(np.max(exponent)))
    ratio = np.exp(exponent)
    return float(ratio) if np.ndim(ratio) == 0 else ratio


def ratio_bound_exponent(grid: Grid) -> float:
    """``2 int_0^1 a (1 + y) dy``: psi ratios across parameters are bounded by
    ``exp(ratio_bound_exponent * (|d eps| + |d teps|))`` on [0, 1]."""
    _, a0, a1 = exponent_parts(grid)
    one = grid.index_of(1.0)
    return 2.0 * float(a0[one] + a1[one])


def transfer(values: np.ndarray, log_weight: LogWeight) -> np.ndarray:
    """Node values of ``int_z^{z_max} f(xi) exp(S(xi) - S(z)) dxi``.

    The cell integrals are taken with the exponent measured from the left end
    of each cell and summed from the right with the largest S shifted out, so
    the sum stays finite whatever the sign of f.
    """
    grid = log_weight.grid
    s = log_weight.s_values
    top = float(np.max(s))
    check_exponent(top - float(np.min(s)))
    cells = grid.weighted_cells(values, s, anchor='left')
    scaled = cells * np.exp(s[:-1] - top)
    tail = np.concatenate((np.cumsum(scaled[::-1])[::-1], [0.0]))
    return np.exp(top - s) * tail


def accumulate(values: np.ndarray, log_weight: LogWeight) -> np.ndarray:
    """Logs of ``int_0^xi f(z) exp(S(xi) - S(z)) dz`` at the nodes, for f >= 0.

    The running integral obeys ``I_{k+1} = I_k exp(S_{k+1} - S_k) + c_k``; it is
    carried as ``log I_k - S_k`` through ``logaddexp``.
    """
    grid = log_weight.grid
    s = log_weight.s_values
    cells = grid.weighted_cells(values, -s, anchor='right')
    with np.errstate(divide='ignore'):
        increments = np.log(cells) - s[1:]
    shifted = np.logaddexp.accumulate(np.concatenate(([-np.inf], increments)))
    return shifted + s


def tail_factor(log_weight: LogWeight) -> np.ndarray:
    """``exp(S(z_max) - S(z))`` at the nodes."""
    s = log_weight.s_values
    check_exponent(float(s[-1] - np.min(s)))
    return np.exp(s[-1] - s)
