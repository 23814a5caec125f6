import math

import numpy as np
import pytest

from lsw_encounters.exceptions import InvalidNormSpec, ProfileMismatch
from lsw_encounters.kernels import phi_lsw
from lsw_encounters.profiles import (NormSpec, Profile, convolve, distance, edge_tail_norm, envelope_tail_integral,
                                     tail_moment, z_norm)
from lsw_encounters.quadrature import Grid


@pytest.fixture(scope='module')
def small_grid():
    nodes = np.linspace(0.0, 4.0 ** (1 / 3), 64) ** 3
    nodes[-1] = 4.0
    return Grid(nodes, 0.04, 4.0, 64)


def brute_force_convolution(first, second, grid):
    """Explicit double loop over the same quadrature the production code uses."""
    z = grid.nodes
    out = np.zeros(grid.size)
    for k in range(grid.size):
        weights = grid.prefix_weights[k]
        total = 0.0
        for j in range(grid.size):
            if weights[j] == 0.0:
                continue
            shifted = np.interp(z[k] - z[j], z, first, left=0.0, right=0.0)
            total += weights[j] * shifted * second[j]
        out[k] = 0.5 * total
    return out


def test_norm_spec_validation():
    with pytest.raises(InvalidNormSpec):
        NormSpec(0.0, 2.0)
    with pytest.raises(InvalidNormSpec):
        NormSpec(1.0, 1.0)


def test_z_norm_parts(grid):
    phi = Profile.from_function(grid, lambda z: np.exp(-2 * z))
    norm = z_norm(phi)
    assert norm.sup_part == 1.0
    z = grid.nodes[grid.nodes >= 1.0]
    assert norm.tail_part == pytest.approx(np.max(np.exp(-z) * z ** 2))
    assert phi.norm() == norm.total


def test_z_norm_zero(grid):
    assert Profile.zeros(grid).norm() == 0.0


def test_profile_arithmetic(grid):
    phi = Profile.from_function(grid, phi_lsw)
    assert distance(phi, phi) == 0.0
    doubled = 2 * phi
    assert np.array_equal(doubled.values, (phi + phi).values)
    assert np.all((doubled - phi).values == phi.values)
    with pytest.raises(ValueError):
        phi.values[0] = 1.0


def test_profiles_on_different_grids(grid, small_grid):
    with pytest.raises(ProfileMismatch):
        Profile.zeros(grid) + Profile.zeros(small_grid)
    with pytest.raises(ProfileMismatch):
        Profile(grid, np.zeros(3))


def test_restricted(grid):
    phi = Profile(grid, np.ones(grid.size)).restricted(0.0, 1.0)
    assert phi.values[grid.index_of(1.0)] == 0.0
    assert phi.values[grid.index_of(0.99)] == 1.0


def test_convolution_matches_double_loop(small_grid):
    rng = np.random.default_rng(7)
    for _ in range(100):
        first = rng.random(small_grid.size)
        second = rng.random(small_grid.size)
        expected = 0.5 * (brute_force_convolution(first, second, small_grid)
                          + brute_force_convolution(second, first, small_grid))
        result = convolve(Profile(small_grid, first), Profile(small_grid, second)).values
        assert np.allclose(result, expected, rtol=1e-10, atol=1e-12 * np.max(expected))


def test_convolution_is_symmetric(small_grid):
    rng = np.random.default_rng(11)
    first = Profile(small_grid, rng.random(small_grid.size))
    second = Profile(small_grid, rng.random(small_grid.size))
    assert np.allclose(convolve(first, second).values, convolve(second, first).values, rtol=1e-14)


def test_convolution_mass_identities(grid):
    phi = Profile.from_function(grid, phi_lsw)
    h = convolve(phi, phi)
    m0 = phi.moment(0)
    assert h.moment(0) == pytest.approx(0.5 * m0 * m0, rel=1e-3)
    assert h.moment(1) == pytest.approx(m0 * phi.moment(1), rel=1e-3)
    assert np.all(h.values[grid.nodes > 1.0] == 0.0)


def test_convolution_of_exponentials(grid):
    phi = Profile.from_function(grid, lambda z: np.exp(-z))
    h = convolve(phi, phi)
    k = grid.index_of(2.0)
    assert h.values[k] == pytest.approx(0.5 * grid.nodes[k] * math.exp(-grid.nodes[k]), rel=5e-4)


def test_tail_moment(grid):
    phi = Profile.from_function(grid, lambda z: np.exp(-z))
    value = tail_moment(phi, 2.0, 1)
    expected = (3 * math.exp(-2.0) - 11 * math.exp(-10.0)) / 2
    assert value == pytest.approx(expected, rel=1e-5)


def test_envelope_tail_integral():
    assert envelope_tail_integral(0.0, 2.0, 1.0) == pytest.approx(math.exp(-2.0) / 2, rel=1e-12)
    assert envelope_tail_integral(1.0, 1.0, 3.0) == pytest.approx(4 * math.exp(-3.0), rel=1e-12)
    bound = envelope_tail_integral(-2.0, 1.0, 10.0)
    assert bound >= 0.0 and bound == pytest.approx(math.exp(-10.0) / 100)


def unit_envelope(grid):
    """1 on [0, 1), the inverse tail weight beyond; Z-norm 2."""
    z = grid.nodes
    return np.where(z < 1.0, 1.0, 1.0 / NormSpec().tail_weight(np.maximum(z, 1.0)))


def test_convolution_is_bounded_bilinear(small_grid):
    rng = np.random.default_rng(7)
    envelope = unit_envelope(small_grid)
    pairs = [(envelope, envelope)]
    pairs += [(envelope * rng.uniform(-1, 1, small_grid.size), envelope * rng.uniform(-1, 1, small_grid.size))
              for _ in range(5)]
    for first, second in pairs:
        a, b = Profile(small_grid, first), Profile(small_grid, second)
        assert convolve(a, b).norm() <= 4.0 * a.norm() * b.norm()


def test_convolution_difference_identity(small_grid):
    rng = np.random.default_rng(11)
    envelope = unit_envelope(small_grid)
    for _ in range(3):
        a = Profile(small_grid, envelope * rng.uniform(0, 1, small_grid.size))
        b = Profile(small_grid, envelope * rng.uniform(0, 1, small_grid.size))
        difference = convolve(a, a) - convolve(b, b)
        product = convolve(a - b, a + b)
        assert np.allclose(difference.values, product.values, rtol=0.0, atol=1e-12)


@pytest.mark.parametrize('n', [0, 3])
def test_tail_moment_decays_like_the_weight(grid, n):
    phi = Profile(grid, unit_envelope(grid))
    for z in (1.5, 2.0, 4.0, 6.0):
        ratio = tail_moment(phi, z, n) / (math.exp(-z) / z ** 2)
        assert 0.3 < ratio <= 2.0 * phi.norm()


def test_edge_tail_norm(grid):
    decaying = Profile.from_function(grid, lambda z: np.exp(-2.0 * z))
    # e^{-z} z^2 decreases past z = 2, so the sup sits at the first node of the window
    start = grid.nodes[grid.nodes >= grid.z_max - 1.0][0]
    assert edge_tail_norm(decaying) == pytest.approx(math.exp(-start) * start ** 2, rel=1e-12)
    assert edge_tail_norm(decaying.restricted(0.0, 3.0)) == 0.0
    assert edge_tail_norm(decaying) < z_norm(decaying).tail_part
