#!/usr/bin/env python3
"""
Tests for the grid, wave-function containers and moments
"""
import math

import numpy as np
import pytest

from gravicollapse.core.errors import BadDimensions, UnresolvedWidth
from gravicollapse.core.grid import (
    DensityMatrix,
    KineticPropagator,
    WaveFunction,
    boost,
    cat_state,
    compute_moments,
    gaussian_packet,
    make_grid,
    mean_field_potential,
    pure_density,
    shape_distance,
    sizing_rule,
    translate,
    window_norms,
)


@pytest.fixture
def wide_grid():
    return make_grid(256, 40.0)


@pytest.mark.parametrize("n, length", [(100, 10.0), (8, 10.0), (64, 0.0), (64, -3.0), (64, math.inf)])
def test_grid_validation(n, length):
    with pytest.raises(BadDimensions):
        make_grid(n, length)


def test_padding_must_be_at_least_two():
    with pytest.raises(BadDimensions):
        make_grid(64, 10.0, padding=1)


def test_grid_geometry(small_grid):
    assert small_grid.spacing == pytest.approx(0.1875)
    assert small_grid.padded_size == 128
    assert small_grid.x[0] == pytest.approx(-6.0)
    assert small_grid.index_of(0.0) == 32
    assert small_grid.index_of(-1.5) == 24
    assert small_grid.index_of(100.0) == 63


def test_sizing_rule():
    length, n = sizing_rule(20.0, 0.5)
    assert length == pytest.approx(184.0)
    assert n == 4096
    with pytest.raises(UnresolvedWidth):
        sizing_rule(1.0, 0.0)


def test_packet_is_normalised_with_requested_width(wide_grid):
    packet = gaussian_packet(wide_grid, 2.0, 1.0)
    m = compute_moments(packet)
    assert packet.norm() == pytest.approx(1.0, rel=1e-12)
    assert m.mean_x == pytest.approx(2.0, abs=1e-10)
    assert m.var_x == pytest.approx(1.0, rel=1e-8)


def test_complex_width_factor(wide_grid):
    factor = (1.0 - 1.0j) / math.sqrt(2.0)
    m = compute_moments(gaussian_packet(wide_grid, 0.0, 1.0, width_factor=factor))
    assert m.var_x == pytest.approx(math.sqrt(2.0), rel=1e-8)


def test_unresolved_packets_rejected(small_grid):
    with pytest.raises(UnresolvedWidth):
        gaussian_packet(make_grid(16, 12.0), 0.0, 0.5)
    with pytest.raises(UnresolvedWidth):
        gaussian_packet(small_grid, 5.0, 0.5)
    with pytest.raises(UnresolvedWidth):
        gaussian_packet(small_grid, 0.0, 0.5, width_factor=-1.0j)


def test_cat_state_is_balanced(small_grid):
    cat = cat_state(small_grid, 3.0, 0.5)
    left, right = window_norms(cat)
    assert cat.norm() == pytest.approx(1.0, rel=1e-12)
    assert left == pytest.approx(0.5, abs=1e-2)
    assert left + right == pytest.approx(1.0)


def test_free_spreading():
    packet = gaussian_packet(make_grid(512, 80.0), 0.0, 1.0)
    propagator = KineticPropagator(packet.grid, mass=1.0, hbar=1.0, dt=2.0)
    spread = WaveFunction(propagator.apply(packet.psi), packet.grid)
    # sigma^2 (1 + (hbar t / 2 M sigma^2)^2)
    assert compute_moments(spread).var_x == pytest.approx(2.0, rel=1e-6)
    assert spread.norm() == pytest.approx(1.0, rel=1e-12)


def test_imaginary_propagator_damps_high_momenta(small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    damped = KineticPropagator(small_grid, 1.0, 1.0, 0.1, imaginary=True).apply(packet.psi)
    assert np.sum(np.abs(damped) ** 2) < np.sum(np.abs(packet.psi) ** 2)


def test_kinetic_energy_of_packet(wide_grid):
    m = compute_moments(gaussian_packet(wide_grid, 0.0, 1.0))
    assert m.kinetic == pytest.approx(0.125, rel=1e-8)
    assert m.var_p == pytest.approx(0.25, rel=1e-8)


def test_boost_shifts_momentum(small_grid):
    moved = boost(gaussian_packet(small_grid, 0.0, 0.5), 2.0)
    assert compute_moments(moved).mean_p == pytest.approx(2.0, abs=1e-8)


def test_translate_matches_displaced_packet(small_grid):
    shifted = translate(gaussian_packet(small_grid, 0.0, 0.5), 1.5)
    assert shape_distance(shifted, gaussian_packet(small_grid, 1.5, 0.5)) < 1e-8


def test_shape_distance_ignores_global_phase(small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    rotated = WaveFunction(packet.psi * np.exp(0.7j), small_grid)
    assert shape_distance(rotated, packet) == pytest.approx(0.0, abs=1e-12)
    assert shape_distance(gaussian_packet(small_grid, 1.5, 0.5), packet) > 0.5


def test_density_matrix_purity(small_grid):
    cat = cat_state(small_grid, 3.0, 0.5)
    pure = pure_density(cat)
    assert pure.trace() == pytest.approx(1.0, rel=1e-12)
    assert pure.purity() == pytest.approx(1.0, rel=1e-10)
    assert np.sum(pure.eigenvalues()) == pytest.approx(1.0, rel=1e-10)

    left = pure_density(gaussian_packet(small_grid, -1.5, 0.5))
    right = pure_density(gaussian_packet(small_grid, 1.5, 0.5))
    mixed = DensityMatrix(0.5 * (left.rho + right.rho), small_grid)
    assert mixed.purity() == pytest.approx(0.5, abs=1e-3)
    assert mixed.min_eigenvalue() > -1e-12


def test_momentum_densities_agree(small_grid):
    cat = cat_state(small_grid, 3.0, 0.5)
    np.testing.assert_allclose(pure_density(cat).momentum_density(), cat.momentum_density(), atol=1e-12)


def test_containers_reject_bad_shapes(small_grid):
    with pytest.raises(BadDimensions):
        WaveFunction(np.ones(10), small_grid)
    with pytest.raises(BadDimensions):
        WaveFunction(np.full(small_grid.n, np.nan), small_grid)
    with pytest.raises(BadDimensions):
        DensityMatrix(np.eye(10), small_grid)


def test_mean_field_of_symmetric_cat(unit_kernel, small_grid):
    cat = cat_state(small_grid, 3.0, 0.5)
    field_ = mean_field_potential(cat, unit_kernel)
    direct = unit_kernel.matrix() @ cat.density() * small_grid.spacing
    np.testing.assert_allclose(field_, direct, rtol=1e-10)
    # x_i and x_{n-i} mirror each other about the origin
    np.testing.assert_allclose(field_[1:], field_[1:][::-1], rtol=1e-10)
    np.testing.assert_allclose(mean_field_potential(pure_density(cat), unit_kernel), field_, rtol=1e-10)
