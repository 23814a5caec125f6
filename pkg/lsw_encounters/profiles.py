"""Grid-sampled profiles, the Z-norm and the symmetric convolution."""

from __future__ import annotations

import math
import typing as tp
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, gammaincc

from .exceptions import InvalidNormSpec, ProfileMismatch
from .quadrature import Grid

EDGE_WINDOW = 1.0


@dataclass(frozen=True)
class NormSpec:
    """Decay weights of the space Z: ``sup_[0,1] |f| + sup_[1,inf) |f| e^{beta1 z} z^{beta2}``."""

    beta1: float = 1.0
    beta2: float = 2.0

    def __post_init__(self):
        if not (self.beta1 > 0) or not math.isfinite(self.beta1):
            raise InvalidNormSpec(f"beta1 must be positive, got {self.beta1!r}")
        if not (self.beta2 > 1) or not math.isfinite(self.beta2):
            raise InvalidNormSpec(f"beta2 must exceed 1, got {self.beta2!r}")

    def tail_weight(self, z: np.ndarray) -> np.ndarray:
        return np.exp(self.beta1 * z) * z ** self.beta2


class ZNorm(tp.NamedTuple):
    sup_part: float
    tail_part: float

    @property
    def total(self) -> float:
        return self.sup_part + self.tail_part


class Profile:
    """A function sampled at the nodes of a grid.

    Values are read-only. Profiles that enter the solver are nonnegative;
    differences of profiles may take either sign.
    """

    def __init__(self, grid: Grid, values, norm_spec: tp.Optional[NormSpec] = None):
        values = np.array(values, dtype=float)
        if values.shape != grid.nodes.shape:
            raise ProfileMismatch(f"Expected {grid.size} values, got shape {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.norm_spec = norm_spec or NormSpec()

    def __repr__(self):
        return f"Profile({self.grid!r}, sup={float(np.max(np.abs(self.values))):.6g})"

    @classmethod
    def from_function(cls, grid: Grid, func: tp.Callable[[np.ndarray], np.ndarray],
                      norm_spec: tp.Optional[NormSpec] = None) -> Profile:
        return cls(grid, func(grid.nodes), norm_spec)

    @classmethod
    def zeros(cls, grid: Grid, norm_spec: tp.Optional[NormSpec] = None) -> Profile:
        return cls(grid, np.zeros(grid.size), norm_spec)

    def _check(self, other: Profile):
        if other.grid is not self.grid:
            raise ProfileMismatch("Profiles live on different grids")

    def __add__(self, other: Profile) -> Profile:
        self._check(other)
        return Profile(self.grid, self.values + other.values, self.norm_spec)

    def __sub__(self, other: Profile) -> Profile:
        self._check(other)
        return Profile(self.grid, self.values - other.values, self.norm_spec)

    def __mul__(self, factor: float) -> Profile:
        return Profile(self.grid, self.values * factor, self.norm_spec)

    __rmul__ = __mul__

    def with_norm(self, norm_spec: NormSpec) -> Profile:
        return Profile(self.grid, self.values, norm_spec)

    def restricted(self, lower: float, upper: float) -> Profile:
        """Zero outside the node range ``lower <= z < upper``."""
        z = self.grid.nodes
        return Profile(self.grid, np.where((z >= lower) & (z < upper), self.values, 0.0), self.norm_spec)

    def moment(self, k: float) -> float:
        z = self.grid.nodes
        weights = np.ones_like(z) if k == 0 else z ** k
        return self.grid.integrate(weights * self.values)

    def norm(self) -> float:
        return z_norm(self).total

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))


def z_norm(phi: Profile) -> ZNorm:
    z = phi.grid.nodes
    values = np.abs(phi.values)
    inner = z <= 1.0
    outer = z >= 1.0
    tail = values[outer] * phi.norm_spec.tail_weight(z[outer])
    return ZNorm(float(np.max(values[inner])), float(np.max(tail)) if tail.size else 0.0)


def edge_tail_norm(phi: Profile, window: float = EDGE_WINDOW) -> float:
    """Weighted sup of ``|phi|`` over the last ``window`` before z_max.

    Beyond z_max nothing is sampled; this is the constant the tail estimates
    carry past the end of the grid. Zero when phi vanishes near z_max.
    """
    z = phi.grid.nodes
    edge = z >= phi.grid.z_max - window
    return float(np.max(np.abs(phi.values[edge]) * phi.norm_spec.tail_weight(z[edge])))


def distance(first: Profile, second: Profile) -> float:
    return z_norm(first - second).total


def _half_convolution(first: np.ndarray, second: np.ndarray, grid: Grid) -> np.ndarray:
    z = grid.nodes
    shifted = np.interp(z[:, None] - z[None, :], z, first, left=0.0, right=0.0)
    return 0.5 * np.einsum('kj,kj,j->k', grid.prefix_weights, shifted, second)


def convolve(phi1: Profile, phi2: Profile) -> Profile:
    """``(phi1 * phi2)(z) = 1/2 int_0^z phi1(z - y) phi2(y) dy`` at every node.

    Off-node values of the shifted factor are linear interpolants; both
    orderings are averaged so the result is symmetric in its arguments.
    """
    phi1._check(phi2)
    grid = phi1.grid
    if phi1 is phi2:
        values = _half_convolution(phi1.values, phi1.values, grid)
    else:
        values = 0.5 * (_half_convolution(phi1.values, phi2.values, grid)
                        + _half_convolution(phi2.values, phi1.values, grid))
    return Profile(grid, values, phi1.norm_spec)


def tail_moment(phi: Profile, z: float, n: int) -> float:
    """``z**-n int_z^{z_max} xi**n |phi(xi)| dxi``."""
    nodes = phi.grid.nodes
    return phi.grid.integrate(nodes ** n * np.abs(phi.values), z) / z ** n


def envelope_tail_integral(power: float, rate: float, start: float) -> float:
    """``int_start^inf xi**power exp(-rate xi) dxi``; an upper bound when power <= -1."""
    if power > -1:
        a = power + 1
        return float(gamma(a) * gammaincc(a, rate * start) / rate ** a)
    return float(start ** power * math.exp(-rate * start) / rate)
