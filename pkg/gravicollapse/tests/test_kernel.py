#!/usr/bin/env python3
"""
Tests for the self-interaction kernel U(d) and its grid tabulation
"""
import math

import numpy as np
import pytest

from gravicollapse.core.errors import (
    BadDimensions,
    NegativeSeparation,
    NotPositiveSemidefinite,
    UnsoftenedPointKernel,
    ZeroRadius,
)
from gravicollapse.core.grid import make_grid
from gravicollapse.core.kernel import (
    BallSpec,
    build_grid_kernel,
    check_closed_form,
    gravitational_frequency,
    kernel_samples,
    pair_potential,
    pair_potential_quadrature,
    point_potential,
    potential,
    potential_excess,
    self_energy,
)
from gravicollapse.core.noise import NoiseModel


def test_self_energy_of_unit_ball(unit_ball):
    assert self_energy(unit_ball) == pytest.approx(-1.2)
    assert pair_potential(unit_ball, 0.0) == pytest.approx(-1.2)


def test_closed_form_matches_quadrature(unit_ball):
    separations = np.linspace(0.0, 4.0, 25)
    assert check_closed_form(unit_ball, separations) < 1e-8


def test_quadrature_self_energy(unit_ball):
    assert pair_potential_quadrature(unit_ball, 0.0) == pytest.approx(-1.2, rel=1e-10)


def test_continuity_at_contact(unit_ball):
    below = pair_potential(unit_ball, 2.0 - 1e-9)
    above = pair_potential(unit_ball, 2.0 + 1e-9)
    assert below == pytest.approx(-0.5, abs=1e-8)
    assert above == pytest.approx(-0.5, abs=1e-8)


def test_far_field_is_newtonian(unit_ball):
    assert pair_potential(unit_ball, 10.0) == pytest.approx(-0.1)
    d = np.array([2.5, 5.0, 40.0])
    np.testing.assert_allclose(pair_potential(unit_ball, d), -1.0 / d)


def test_small_separation_is_harmonic(unit_ball):
    # U(d) - U(0) -> M omega_G^2 d^2 / 2 with omega_G = 1
    d = 1e-4
    assert potential_excess(unit_ball, d) / d ** 2 == pytest.approx(0.5, rel=1e-3)


def test_excess_matches_direct_difference(unit_ball):
    d = np.linspace(0.5, 3.0, 11)
    direct = pair_potential(unit_ball, d) - pair_potential(unit_ball, 0.0)
    np.testing.assert_allclose(potential_excess(unit_ball, d), direct, rtol=1e-12)


def test_excess_keeps_precision_next_to_huge_self_energy(harmonic_ball):
    # U(0) ~ -1.2e10 while the excess across a few units is O(1)
    assert potential_excess(harmonic_ball, 2.0) == pytest.approx(2.0, rel=1e-4)


def test_potential_is_monotone(unit_ball):
    values = pair_potential(unit_ball, np.linspace(0.0, 6.0, 61))
    assert np.all(np.diff(values) > 0.0)


def test_negative_separation_rejected(unit_ball):
    with pytest.raises(NegativeSeparation):
        pair_potential(unit_ball, -0.1)


def test_point_mass_needs_point_kernel(unit_constants):
    point = BallSpec(mass=1.0, radius=0.0, constants=unit_constants)
    with pytest.raises(ZeroRadius):
        pair_potential(point, 1.0)
    assert self_energy(point, 0.0) == -math.inf


def test_unsoftened_point_potential_is_singular(unit_constants):
    point = BallSpec(mass=1.0, radius=0.0, constants=unit_constants)
    result = point_potential(point, 0.0, 0.0)
    assert result.singular
    assert result.value == -math.inf


def test_softened_point_excess(unit_ball):
    eps = 0.5
    direct = potential(unit_ball, 3.0, "point", eps) - potential(unit_ball, 0.0, "point", eps)
    assert potential_excess(unit_ball, 3.0, "point", eps) == pytest.approx(direct, rel=1e-12)


def test_quadratic_profile(unit_ball):
    assert potential_excess(unit_ball, 3.0, "quadratic") == pytest.approx(4.5)
    assert potential(unit_ball, 3.0, "quadratic") == pytest.approx(-1.2 + 4.5)


def test_unknown_profile(unit_ball, small_grid):
    with pytest.raises(BadDimensions):
        potential(unit_ball, 1.0, "yukawa")
    with pytest.raises(BadDimensions):
        build_grid_kernel(unit_ball, small_grid, "yukawa")


def test_kernel_samples_columns(unit_ball):
    samples = kernel_samples(unit_ball, np.linspace(0.0, 4.0, 9))
    assert set(samples) == {"d", "U", "U_asymptotic_far", "U_asymptotic_near"}
    assert samples["U_asymptotic_far"][0] == -math.inf
    assert samples["U_asymptotic_far"][-1] == pytest.approx(samples["U"][-1])
    assert samples["U_asymptotic_near"][0] == pytest.approx(samples["U"][0])


def test_convolution_matches_direct_summation(unit_kernel, small_grid):
    rng = np.random.default_rng(7)
    density = rng.random(small_grid.n)
    h = small_grid.spacing
    direct_excess = unit_kernel.excess_matrix() @ density * h
    direct = unit_kernel.matrix() @ density * h
    np.testing.assert_allclose(unit_kernel.convolve_excess(density), direct_excess,
                               atol=1e-10 * np.max(np.abs(direct_excess)))
    np.testing.assert_allclose(unit_kernel.convolve(density), direct, rtol=1e-10)


def test_convolution_is_not_periodic(unit_kernel, small_grid):
    # a spike at the left edge must not leak to the right edge through wrap-around
    density = np.zeros(small_grid.n)
    density[0] = 1.0 / small_grid.spacing
    field = unit_kernel.convolve_excess(density)
    far = potential_excess(unit_kernel.ball, small_grid.length - small_grid.spacing)
    assert field[-1] == pytest.approx(far, rel=1e-10)


def test_kernel_table_is_read_only_and_cached(unit_ball, small_grid, unit_kernel):
    assert build_grid_kernel(unit_ball, small_grid) is unit_kernel
    with pytest.raises(ValueError):
        unit_kernel.excess[0] = 1.0
    with pytest.raises(ValueError):
        unit_kernel.matrix()[0, 0] = 1.0
    other = build_grid_kernel(unit_ball, make_grid(64, 16.0))
    assert other is not unit_kernel


def test_unsoftened_point_kernel_rejected(unit_constants, small_grid):
    point = BallSpec(mass=1.0, radius=0.0, constants=unit_constants)
    with pytest.raises(UnsoftenedPointKernel):
        build_grid_kernel(point, small_grid)
    table = build_grid_kernel(point, small_grid, "point", 0.25)
    assert table.U0 == pytest.approx(-4.0)
    assert math.isnan(table.omega_G)


def test_ball_kernel_is_a_valid_covariance(unit_kernel):
    model = NoiseModel.build(unit_kernel, seed=1)
    assert model.eigenvalues[0] >= -1e-10 * model.eigenvalues[-1]


def test_quadratic_kernel_is_not_a_covariance(unit_ball, small_grid):
    table = build_grid_kernel(unit_ball, small_grid, "quadratic")
    with pytest.raises(NotPositiveSemidefinite):
        NoiseModel.build(table, seed=1)


def test_gravitational_frequency(unit_ball):
    assert gravitational_frequency(unit_ball) == pytest.approx(1.0)
    water = BallSpec.from_density(1.0, 1e-3)
    # independent of R at fixed density
    assert gravitational_frequency(water) == pytest.approx(5.29e-4, rel=1e-3)
    with pytest.raises(ZeroRadius):
        gravitational_frequency(BallSpec(mass=1.0, radius=0.0))
