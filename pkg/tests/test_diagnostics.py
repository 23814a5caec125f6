import math
from dataclasses import replace

import numpy as np
import pytest

from lsw_encounters.diagnostics import (SweepRow, compare_norm_specs, differential_residual, extrapolate_law,
                                        integral_equation_residual, kappa_error, lsw_first_iterate,
                                        mean_field_check, moments, refinement_residuals, sweep_scaling, tail_fit)
from lsw_encounters.exceptions import NonPositiveTail
from lsw_encounters.kernels import SCALING_LAW_CONSTANT, phi_lsw
from lsw_encounters.notifications import Notifier, SweepProgress
from lsw_encounters.profiles import Profile


def test_moments_of_lsw(grid):
    phi = Profile.from_function(grid, phi_lsw)
    assert moments(phi, 1) == pytest.approx(1.0, abs=1e-5)
    assert moments(phi, 0) > moments(phi, 1)


def test_tail_fit_recovers_exact_model(grid):
    phi = Profile.from_function(grid, lambda z: np.exp(-2 * z) / np.maximum(z, 1.0) ** 3)
    fit = tail_fit(phi)
    assert fit.rate == pytest.approx(2.0, rel=1e-8)
    assert fit.power == pytest.approx(3.0, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.nodes >= 10


def test_tail_fit_rejects_bad_input(grid):
    with pytest.raises(ValueError):
        tail_fit(Profile(grid, np.ones(grid.size)), window=(1.0, 4.0))
    with pytest.raises(NonPositiveTail):
        tail_fit(Profile(grid, np.where(grid.nodes < 3.0, 1.0, 0.0)))


def test_sweep_row_properties():
    row = SweepRow(0.01, eps=math.exp(-40.0), teps=1e-10)
    assert row.ok
    assert row.law_value == pytest.approx(16.0)
    assert row.law_gap == pytest.approx(SCALING_LAW_CONSTANT - 16.0)
    failed = SweepRow(0.1, error='BracketFailure: no sign change')
    assert not failed.ok
    data = failed.to_dict()
    assert data['eps'] is None and data['law_value'] is None
    assert data['error'].startswith('BracketFailure')


def test_extrapolate_law_skips_failed_rows():
    assert math.isnan(extrapolate_law([]))
    assert math.isnan(extrapolate_law([SweepRow(0.1, error='x')]))
    row = SweepRow(0.04, eps=math.exp(-10.0))
    assert extrapolate_law([row, SweepRow(0.1, error='x')]) == pytest.approx(math.sqrt(row.law_value))


def test_failed_sweep_row_is_recorded(config):
    notifier = Notifier()
    events = []
    notifier.add_hook('collect', events.append)
    rows = sweep_scaling([0.04], replace(config, max_iter=1), notifier=notifier)
    assert len(rows) == 1 and not rows[0].ok
    assert rows[0].error.startswith('MaxIterExceeded')
    assert isinstance(events[-1], SweepProgress)
    assert events[-1].finished and events[-1].failed == 1


def test_invalid_delta_fails_only_its_row(config):
    rows = sweep_scaling([0.04, 2.0], replace(config, max_iter=1))
    assert [row.delta for row in rows] == [0.04, 2.0]
    assert rows[0].error.startswith('MaxIterExceeded')
    assert rows[1].error.startswith('ConfigError')


def test_lsw_first_iterate_is_of_order_eps(config):
    first = lsw_first_iterate(config)
    z = first.profile.grid.nodes
    inside = (z > 0.5 + math.sqrt(config.delta)) & (z < 1.0)
    assert np.all(first.profile.values[inside] > 0)
    assert 1e-3 < first.relative_size < 10


@pytest.mark.slow
def test_mean_field_identity(solved):
    check = mean_field_check(solved.profile, solved.params)
    assert check.m0 == pytest.approx(solved.params.m0, rel=1e-6)
    assert check.gap < 1e-2


@pytest.mark.slow
def test_fixed_point_tail_decays(solved):
    fit = tail_fit(solved.profile)
    assert fit.rate >= 1.0
    assert fit.r_squared >= 0.99


@pytest.mark.slow
def test_integral_equation_residual(solved):
    assert integral_equation_residual(solved.profile, solved.params) <= 1e-5


@pytest.mark.slow
def test_differential_residual_shrinks_under_refinement(config):
    study = refinement_residuals(config)
    assert study.differential_shrinks
    assert study.fine['integral'] <= 1e-5


@pytest.mark.slow
def test_differential_residual_is_small(solved):
    assert differential_residual(solved.profile, solved.params) < 1e-1


@pytest.mark.slow
def test_single_row_sweep_matches_direct_solve(solved, config):
    row, = sweep_scaling([config.delta], config)
    assert row.ok
    assert row.eps == solved.params.eps
    assert row.iterations == solved.iterations


@pytest.mark.slow
def test_scaling_law_sweep(config):
    deltas = [0.1, 0.05, 0.02, 0.01]
    rows = sweep_scaling(deltas, config, workers=2)
    assert [row.delta for row in rows] == deltas
    assert all(row.ok for row in rows)
    laws = [row.law_value for row in rows]
    assert all(a < b for a, b in zip(laws, laws[1:]))
    assert all(law < SCALING_LAW_CONSTANT for law in laws)
    assert kappa_error(extrapolate_law(rows)) <= 0.2
    gaps = [abs(row.log_eps / math.log(row.lead_eps) - 1.0) for row in rows]
    assert gaps[-1] < gaps[0]


@pytest.mark.slow
def test_fixed_point_does_not_depend_on_the_decay_space(config):
    comparison = compare_norm_specs(config)
    assert comparison.second.profile.norm_spec.beta1 == 2.0
    assert comparison.distance <= 1e-6
