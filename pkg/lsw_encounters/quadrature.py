"""Graded quadrature mesh on [0, z_max] and the integrals built on it.

Every integral is evaluated in the cube-root coordinate ``t = z ** (1/3)``.
In that coordinate the ``z ** (-2/3)`` behaviour of the drift at the origin
becomes a bounded density, and the coefficients of the model are rational
functions of ``t``.

Node-sampled integrands use a composite rule that integrates the quadratic
through three neighbouring nodes over each cell. Integrands known in closed
form are integrated with Gauss-Legendre points inside every cell instead.
"""

from __future__ import annotations

import math
import typing as tp
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import exprel

from .exceptions import InvalidGrid

LAYER_CENTER = 0.5
LAYER_HALF_WIDTHS = 5.0
LAYER_RESOLUTION = 40
MIN_LAYER_RESOLUTION = 20
MIN_BASE_CELLS = 64
MIN_Z_MAX = 1.0
GRADING_SLOPE = 0.2
GAUSS_ORDER = 4

_SAMPLES_PER_SEGMENT = 20000
_SERIES_CUTOFF = 1e-2

Density = tp.Callable[[np.ndarray], np.ndarray]


def _read_only(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def _lagrange_integrals(stencil: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Integrals over [lo, hi] of the three Lagrange polynomials through ``stencil``.

    ``stencil`` has shape (..., 3). Positions are shifted to ``lo`` first so
    that every term is of the size of the cell and nothing cancels.
    """
    x = stencil - lo[..., None]
    h = hi - lo
    out = np.empty_like(x)
    for m in range(3):
        a = x[..., (m + 1) % 3]
        b = x[..., (m + 2) % 3]
        integral = h ** 3 / 3 - (a + b) * h ** 2 / 2 + a * b * h
        out[..., m] = integral / ((x[..., m] - a) * (x[..., m] - b))
    return out


def phi_moments(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(int_0^1 e^{s u} du, int_0^1 u e^{s u} du)`` elementwise."""
    sigma = np.asarray(sigma, dtype=float)
    first = exprel(sigma)
    second = np.empty_like(sigma)
    small = np.abs(sigma) < _SERIES_CUTOFF
    s = sigma[small]
    second[small] = 1 / 2 + s * (1 / 3 + s * (1 / 8 + s * (1 / 30 + s * (1 / 144 + s / 840))))
    s = sigma[~small]
    second[~small] = (np.exp(s) - first[~small]) / s
    return first, second


def node_budget(n_base: int, delta: float, z_max: float, layer_resolution: int = LAYER_RESOLUTION) -> int:
    """Upper bound on the number of nodes :func:`build_grid` produces."""
    step = math.sqrt(delta) / layer_resolution
    window = 2 * LAYER_HALF_WIDTHS * layer_resolution
    grading = 2 / GRADING_SLOPE * math.log1p(GRADING_SLOPE * z_max / step)
    return int(n_base + window + grading) + 4


class Grid:
    """A mesh on [0, z_max], refined into the sqrt(delta) layer around z = 1/2.

    Nodes, their cube roots and the jacobian ``dz/dt = 3 t**2`` are read-only
    arrays. The nodes z = 1/2 and z = 1 are always present, so integrals over
    [0, 1/2] and [0, 1] end on a node.
    """

    def __init__(self, nodes: np.ndarray, delta: float, z_max: float, n_base: int,
                 layer_resolution: int = LAYER_RESOLUTION):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4:
            raise InvalidGrid("A grid needs at least four nodes")
        if nodes[0] != 0.0 or nodes[-1] != z_max:
            raise InvalidGrid("Grid nodes must start at 0 and end at z_max")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidGrid("Grid nodes must be strictly increasing")

        self.delta = float(delta)
        self.z_max = float(z_max)
        self.n_base = int(n_base)
        self.layer_resolution = int(layer_resolution)
        self.layer_center = LAYER_CENTER
        self.layer_width = math.sqrt(self.delta)

        self.nodes = _read_only(nodes)
        self.roots = _read_only(np.cbrt(nodes))
        self.jacobian = _read_only(3 * self.roots ** 2)
        self.steps = _read_only(np.diff(self.roots))

        n = nodes.size
        cells = np.arange(n - 1)
        stencil = np.stack([cells - 1, cells, cells + 1], axis=1)
        stencil[0] = (0, 1, 2)
        self.stencil = stencil
        self.stencil.setflags(write=False)
        self.cell_weights = _read_only(_lagrange_integrals(
            self.roots[stencil], self.roots[:-1], self.roots[1:]))

        # Lagrange weights at t = 0 through the first three interior roots
        t1, t2, t3 = self.roots[1:4]
        self._origin_weights = np.array([
            t2 * t3 / ((t1 - t2) * (t1 - t3)),
            t1 * t3 / ((t2 - t1) * (t2 - t3)),
            t1 * t2 / ((t3 - t1) * (t3 - t2)),
        ])
        gauss_x, gauss_w = leggauss(GAUSS_ORDER)
        self._gauss_x = gauss_x
        self._gauss_w = gauss_w

    def __len__(self):
        return self.nodes.size

    def __repr__(self):
        return (f"Grid(delta={self.delta!r}, z_max={self.z_max!r}, n_base={self.n_base}, "
                f"layer_resolution={self.layer_resolution}, nodes={len(self)})")

    @property
    def size(self) -> int:
        return self.nodes.size

    def describe(self) -> dict:
        return {
            'delta': self.delta,
            'z_max': self.z_max,
            'n_base': self.n_base,
            'layer_resolution': self.layer_resolution,
            'nodes': len(self),
        }

    def index_of(self, z: float) -> int:
        """Index of the node nearest to ``z``."""
        return int(np.argmin(np.abs(self.nodes - z)))

    def cell_of(self, z) -> np.ndarray:
        """Index of the cell [z_k, z_k+1) holding ``z``; z_max belongs to the last cell."""
        tau = np.cbrt(np.asarray(z, dtype=float))
        return np.clip(np.searchsorted(self.roots, tau, side='right') - 1, 0, self.size - 2)

    def interpolate(self, values: np.ndarray, z, outside: float = 0.0):
        return np.interp(z, self.nodes, values, left=outside, right=outside)

    def density(self, values) -> np.ndarray:
        """Multiply node values by dz/dt.

        A non-finite value at the origin (an integrable singularity such as
        ``z ** (-2/3)``) is replaced by the quadratic extrapolation of the
        density from the next three nodes.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != self.nodes.shape:
            raise ValueError(f"Expected {self.size} node values, got shape {values.shape}")
        with np.errstate(invalid='ignore'):
            g = values * self.jacobian
        if not np.isfinite(g[0]):
            g[0] = self._origin_weights @ g[1:4]
        return g

    def cell_integrals(self, values) -> np.ndarray:
        g = self.density(values)
        return np.einsum('ij,ij->i', self.cell_weights, g[self.stencil])

    def cumulative(self, values) -> np.ndarray:
        """Node-wise ``int_0^{z_k} f dz``."""
        return np.concatenate(([0.0], np.cumsum(self.cell_integrals(values))))

    def _antiderivative(self, g: np.ndarray, cumulative: np.ndarray, z: float) -> float:
        k = int(self.cell_of(z))
        tau = np.cbrt(float(z))
        stencil = self.stencil[k]
        weights = _lagrange_integrals(self.roots[stencil][None, :], self.roots[k:k + 1], np.array([tau]))[0]
        return float(cumulative[k] + weights @ g[stencil])

    def integrate(self, values, a: float = 0.0, b: tp.Optional[float] = None) -> float:
        """``int_a^b f dz`` for node values of ``f``."""
        b = self.z_max if b is None else b
        self._check_interval(a, b)
        g = self.density(values)
        cumulative = np.concatenate(([0.0], np.cumsum(np.einsum('ij,ij->i', self.cell_weights, g[self.stencil]))))
        return self._antiderivative(g, cumulative, b) - self._antiderivative(g, cumulative, a)

    @cached_property
    def prefix_weights(self) -> np.ndarray:
        """Matrix W with ``W[k] @ f == int_0^{z_k} f dz`` for finite node values f."""
        n = self.size
        rows = np.zeros((n - 1, n))
        cells = np.arange(n - 1)
        for m in range(3):
            rows[cells, self.stencil[:, m]] += self.cell_weights[:, m] * self.jacobian[self.stencil[:, m]]
        weights = np.zeros((n, n))
        np.cumsum(rows, axis=0, out=weights[1:])
        weights.setflags(write=False)
        return weights

    def _gauss_cells(self, density: Density, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        half = (hi - lo) / 2
        out = np.zeros_like(lo)
        active = half > 0
        if np.any(active):
            points = ((lo + hi) / 2)[active, None] + half[active, None] * self._gauss_x[None, :]
            out[active] = half[active] * (density(points) @ self._gauss_w)
        return out

    def cumulative_density(self, density: Density) -> np.ndarray:
        """Node-wise ``int_0^{t_k} density(t) dt`` for a density known in closed form in t."""
        cells = self._gauss_cells(density, self.roots[:-1], self.roots[1:])
        return np.concatenate(([0.0], np.cumsum(cells)))

    def partial_density(self, density: Density, k: int, z: float) -> float:
        """``int`` of ``density`` in t from node ``k`` to ``z`` (same cell)."""
        lo = np.array([self.roots[k]])
        hi = np.array([np.cbrt(z)])
        return float(self._gauss_cells(density, lo, hi)[0])

    def integrate_function(self, func: tp.Callable[[np.ndarray], np.ndarray], a: float = 0.0,
                           b: tp.Optional[float] = None) -> float:
        """``int_a^b func(z) dz`` with Gauss-Legendre points inside every cell."""
        b = self.z_max if b is None else b
        self._check_interval(a, b)
        ta, tb = np.cbrt(a), np.cbrt(b)
        lo = np.clip(self.roots[:-1], ta, tb)
        hi = np.clip(self.roots[1:], ta, tb)
        return float(np.sum(self._gauss_cells(lambda t: func(t ** 3) * 3 * t ** 2, lo, hi)))

    def weighted_cells(self, values, exponent: np.ndarray, anchor: str) -> np.ndarray:
        """Per-cell ``int f(z) exp(E(z) - E(anchor)) dz``.

        ``f * dz/dt`` and ``E`` are taken linear in t over each cell, which
        integrates the exponential exactly however steep it is. ``anchor`` is
        ``'left'`` or ``'right'``: the cell end the exponent is measured from.
        """
        g = self.density(values)
        sigma = np.diff(exponent)
        if anchor == 'left':
            first, second = phi_moments(sigma)
            return self.steps * (g[:-1] * (first - second) + g[1:] * second)
        if anchor == 'right':
            first, second = phi_moments(-sigma)
            return self.steps * (g[:-1] * second + g[1:] * (first - second))
        raise ValueError(f"Invalid anchor: {anchor}")

    def _check_interval(self, a: float, b: float):
        if not (0.0 <= a <= b <= self.z_max):
            raise ValueError(f"Interval [{a!r}, {b!r}] is not inside [0, {self.z_max!r}]")


def _target_spacing(t: np.ndarray, base_step: float, window: tuple[float, float], layer_step: float) -> np.ndarray:
    z = t ** 3
    outside = np.maximum(np.maximum(window[0] - z, z - window[1]), 0.0)
    z_step = layer_step + GRADING_SLOPE * outside
    with np.errstate(divide='ignore'):
        layer = z_step / (3 * t * t)
    return np.minimum(base_step, layer)


def _equidistribute(start: float, stop: float, spacing: tp.Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    s = np.linspace(start, stop, _SAMPLES_PER_SEGMENT + 1)
    density = 1 / spacing(s)
    count = np.concatenate(([0.0], np.cumsum((density[1:] + density[:-1]) / 2 * np.diff(s))))
    cells = max(int(math.ceil(count[-1] - 1e-9)), 2)
    t = np.interp(np.linspace(0.0, count[-1], cells + 1), count, s)
    t[0], t[-1] = start, stop
    return t


def build_grid(delta: float, z_max: float = 10.0, n_base: int = 400,
               layer_resolution: int = LAYER_RESOLUTION) -> Grid:
    """Build the mesh used for every integral at a given delta.

    Away from the layer the mesh is uniform in t with ``n_base`` cells over
    [0, z_max ** (1/3)]. Inside ``1/2 +- 5 sqrt(delta)`` the z-spacing is at
    most ``sqrt(delta) / layer_resolution``. Between the two the spacing grows
    linearly, so neighbouring cells never differ by much more than 20 %.
    """
    if not (0.0 < delta <= 1.0) or not math.isfinite(delta):
        raise InvalidGrid(f"delta must lie in (0, 1], got {delta!r}")
    if not (z_max >= MIN_Z_MAX) or not math.isfinite(z_max):
        raise InvalidGrid(f"z_max must be at least {MIN_Z_MAX}, got {z_max!r}")
    if n_base < MIN_BASE_CELLS:
        raise InvalidGrid(f"n_base must be at least {MIN_BASE_CELLS}, got {n_base!r}")
    if layer_resolution < MIN_LAYER_RESOLUTION:
        raise InvalidGrid(f"layer_resolution must be at least {MIN_LAYER_RESOLUTION}, got {layer_resolution!r}")

    width = math.sqrt(delta)
    window = (max(LAYER_CENTER - LAYER_HALF_WIDTHS * width, 0.0),
              min(LAYER_CENTER + LAYER_HALF_WIDTHS * width, z_max))
    base_step = np.cbrt(z_max) / n_base
    layer_step = width / layer_resolution

    def spacing(t):
        return _target_spacing(t, base_step, window, layer_step)

    breaks = [0.0, np.cbrt(LAYER_CENTER), 1.0, np.cbrt(z_max)]
    if z_max == 1.0:
        breaks = breaks[:3]
    roots = [np.zeros(1)]
    for start, stop in zip(breaks[:-1], breaks[1:]):
        roots.append(_equidistribute(start, stop, spacing)[1:])
    nodes = np.concatenate(roots) ** 3
    for value in (LAYER_CENTER, 1.0, z_max):
        nodes[np.argmin(np.abs(nodes - value))] = value
    return Grid(nodes, delta, z_max, n_base, layer_resolution)
