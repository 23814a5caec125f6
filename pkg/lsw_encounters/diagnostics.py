"""Checks on solved profiles and the delta sweep behind the scaling law."""

from __future__ import annotations

import math
import threading
import typing as tp
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import NonPositiveTail, NumericalFailure
from .homogeneous import compute_psi
from .kernels import KAPPA, SCALING_LAW_CONSTANT, ParamState, layer_integral
from .log import log, warn
from .notifications import SweepProgress, spread
from .params import lead_eps, lsw_profile
from .profiles import NormSpec, Profile, convolve, distance
from .solver import FixedPointResult, SolverConfig, apply_Ibar, apply_J, solve_profile

DIFFERENTIAL_WINDOW = (0.05, 0.95)


def moments(phi: Profile, k: float) -> float:
    """``int z**k phi dz`` over [0, z_max]."""
    return phi.moment(k)


@dataclass(frozen=True)
class MeanFieldCheck:
    m0: float
    m_third: float
    mean_field: float

    @property
    def gap(self) -> float:
        """Relative mismatch of ``m0 = lambda m_1/3``."""
        return abs(self.m0 - self.mean_field * self.m_third) / self.m0


def mean_field_check(phi: Profile, params: ParamState) -> MeanFieldCheck:
    return MeanFieldCheck(moments(phi, 0), moments(phi, 1 / 3), params.mean_field)


## Tail fit


@dataclass(frozen=True)
class TailFit:
    window: tuple[float, float]
    rate: float
    power: float
    r_squared: float
    nodes: int


def tail_fit(phi: Profile, window: tuple[float, float] = (2.0, 6.0)) -> TailFit:
    """Least squares for ``log phi = c - rate z - power log z`` on the window."""
    z_lo, z_hi = window
    if z_lo < 1.5 or z_hi <= z_lo or z_hi > phi.grid.z_max:
        raise ValueError(f"Tail window must satisfy 1.5 <= z_lo < z_hi <= z_max, got {window!r}")
    z = phi.grid.nodes
    inside = (z >= z_lo) & (z <= z_hi)
    if np.count_nonzero(inside) < 10:
        raise ValueError(f"Tail window {window!r} holds fewer than 10 nodes")
    values = phi.values[inside]
    if np.any(values <= 0):
        raise NonPositiveTail(f"Profile is not positive on {window!r}")
    zs = z[inside]
    y = np.log(values)
    design = np.stack([np.ones_like(zs), -zs, -np.log(zs)], axis=1)
    coefficients, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coefficients
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum((y - fitted) ** 2)) / total if total > 0 else 1.0
    return TailFit((z_lo, z_hi), float(coefficients[1]), float(coefficients[2]), r_squared, int(zs.size))


## Residuals


def integral_equation_residual(phi: Profile, params: ParamState) -> float:
    """``sup |phi - eps J[phi * phi]| / sup phi`` with the given parameters."""
    grid = phi.grid
    psi = compute_psi(params, grid)
    image = apply_J(convolve(phi, phi), params, psi, grid) * params.eps
    return float(np.max(np.abs(phi.values - image.values)) / np.max(np.abs(phi.values)))


def differential_residual(phi: Profile, params: ParamState,
                          window: tuple[float, float] = DIFFERENTIAL_WINDOW) -> float:
    """Relative residual of the stationary equation in differential form.

    ``-z phi' - 2 phi + ((lambda z**(1/3) - 1) phi)' - eps (z (phi * phi) - phi - m0 z phi)``
    with phi' from second-order differences on the nodes, evaluated on the
    window minus ``|z - 1/2| < sqrt(delta)``.
    """
    grid = phi.grid
    z = grid.nodes
    values = phi.values
    derivative = np.gradient(values, z)
    h = convolve(phi, phi).values
    lam = params.mean_field
    m0 = 0.0 if params.eps == 0 else params.m0
    with np.errstate(divide='ignore'):
        drift = (lam * np.cbrt(z) - 1.0 - z) * derivative
        source = (lam / (3.0 * np.cbrt(z) ** 2) - 2.0) * values
    coupling = params.eps * (z * h - values - m0 * z * values)
    residual = drift + source - coupling
    mask = (z >= window[0]) & (z <= window[1]) & (np.abs(z - 0.5) >= math.sqrt(grid.delta))
    scale = np.max(np.maximum(np.abs(drift[mask]), np.abs(source[mask])))
    return float(np.max(np.abs(residual[mask])) / scale)


@dataclass(frozen=True)
class RefinementStudy:
    coarse: tp.Dict[str, float]
    fine: tp.Dict[str, float]

    @property
    def differential_shrinks(self) -> bool:
        """Whether the differential residual is smaller on the finer grid."""
        return self.fine['differential'] < self.coarse['differential']


def _residuals(result: FixedPointResult) -> tp.Dict[str, float]:
    return {
        'integral': integral_equation_residual(result.profile, result.params),
        'differential': differential_residual(result.profile, result.params),
    }


def refinement_residuals(config: SolverConfig) -> RefinementStudy:
    """Residuals of the fixed point on the configured grid and on one with twice the resolution."""
    coarse = solve_profile(config)
    fine = solve_profile(config.refined())
    return RefinementStudy(_residuals(coarse), _residuals(fine))


## Sweep


@dataclass(frozen=True)
class SweepRow:
    delta: float
    eps: float = math.nan
    teps: float = math.nan
    lead_eps: float = math.nan
    iterations: int = 0
    residual: float = math.nan
    error: tp.Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def log_eps(self) -> float:
        return math.log(self.eps) if self.ok else math.nan

    @property
    def law_value(self) -> float:
        """``delta (log eps)**2``; tends to ``3 pi**2 / 2**(2/3)`` as delta -> 0."""
        return self.delta * self.log_eps ** 2

    @property
    def law_gap(self) -> float:
        return abs(self.law_value - SCALING_LAW_CONSTANT)

    def to_dict(self) -> dict:
        def number(value):
            return None if value is None or (isinstance(value, float) and math.isnan(value)) else value

        return {
            'delta': self.delta,
            'eps': number(self.eps),
            'teps': number(self.teps),
            'log_eps': number(self.log_eps),
            'law_value': number(self.law_value),
            'lead_eps': number(self.lead_eps),
            'iterations': self.iterations,
            'residual': number(self.residual),
            'error': self.error,
        }


def _sweep_row(delta: float, template: SolverConfig) -> SweepRow:
    try:
        config = replace(template, delta=delta)
        result = solve_profile(config)
        lead, _ = lead_eps(config.build_grid())
    except (NumericalFailure, ValueError) as e:
        warn(f"sweep delta={delta!r} failed: {e}")
        return SweepRow(delta, error=f"{type(e).__name__}: {e}")
    log(f"sweep delta={delta!r} eps={result.params.eps!r} iterations={result.iterations}")
    return SweepRow(delta, result.params.eps, result.params.teps, lead, result.iterations, result.final_residual)


def sweep_scaling(deltas: tp.Sequence[float], config: SolverConfig, workers: int = 1,
                  notifier=None) -> tp.List[SweepRow]:
    """One solve per delta with the other settings of ``config``; rows keep the order of ``deltas``.

    A failed solve is recorded in its row and does not stop the sweep.
    """
    progress = SweepProgress(len(deltas))
    rows: tp.List[tp.Optional[SweepRow]] = [None] * len(deltas)
    lock = threading.Lock()

    def run(index: int):
        row = _sweep_row(float(deltas[index]), config)
        rows[index] = row
        with lock:
            progress.done += 1
            if not row.ok:
                progress.failed += 1
            spread(notifier, progress)

    if workers <= 1:
        for index in range(len(deltas)):
            run(index)
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(run, range(len(deltas))))
    return rows


def _extrapolate(deltas, values) -> float:
    x = np.sqrt(np.asarray(deltas, dtype=float))
    y = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan
    degree = min(2, x.size - 1)
    return float(np.polyval(np.polyfit(x, y, degree), 0.0))


def extrapolate_law(rows: tp.Sequence[SweepRow]) -> float:
    """Extrapolate ``sqrt(delta (log eps)**2)`` to delta = 0 with a polynomial in sqrt(delta).

    The limit is KAPPA; square it to compare with the scaling-law constant.
    """
    good = [row for row in rows if row.ok]
    return _extrapolate([row.delta for row in good], [math.sqrt(row.law_value) for row in good])


def layer_constants(deltas: tp.Sequence[float]) -> tp.List[float]:
    """``sqrt(delta) int_0^1 a_delta`` for every delta."""
    return [math.sqrt(delta) * layer_integral(delta) for delta in deltas]


def extrapolate_kappa(deltas: tp.Sequence[float] = (1e-2, 1e-3, 1e-4)) -> float:
    return _extrapolate(deltas, layer_constants(deltas))


def kappa_error(value: float) -> float:
    return abs(value - KAPPA) / KAPPA


## Supplementary checks


@dataclass(frozen=True)
class FirstIterate:
    profile: Profile
    params: ParamState
    layer_sup: float

    @property
    def relative_size(self) -> float:
        """Size of the first iterate between the layer and z = 1, in units of eps."""
        return self.layer_sup / self.params.eps


def lsw_first_iterate(config: SolverConfig) -> FirstIterate:
    """One application of the profile map to the LSW profile.

    ``layer_sup`` is taken on ``(1/2 + sqrt(delta), 1)``; inside the layer the
    iterate is still of order one.
    """
    grid = config.build_grid()
    profile, params = apply_Ibar(lsw_profile(grid, config.norm_spec), config)
    z = grid.nodes
    inside = (z > 0.5 + math.sqrt(config.delta)) & (z < 1.0)
    return FirstIterate(profile, params, float(np.max(profile.values[inside])))


@dataclass(frozen=True)
class NormComparison:
    first: FixedPointResult
    second: FixedPointResult
    distance: float


def compare_norm_specs(config: SolverConfig, other: NormSpec = NormSpec(2.0, 3.0)) -> NormComparison:
    """Solve in two decay spaces and measure the distance of the fixed points in the weaker norm."""
    first = solve_profile(config)
    second = solve_profile(replace(config, norm_spec=other))
    gap = distance(first.profile, second.profile.with_norm(config.norm_spec))
    return NormComparison(first, second, gap)
