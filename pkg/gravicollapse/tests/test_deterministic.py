#!/usr/bin/env python3
"""
Tests for the SNE, frSNE and vNNE solvers
"""
import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from gravicollapse.core.deterministic import (
    EvolutionConfig,
    evolve_frsne,
    evolve_sne,
    evolve_vnne,
    frsne_pointer_state,
    ground_state_sne,
    harmonic_potential,
    pointer_state_frsne,
    pointer_variance,
    sne_ground_gaussian,
    soliton_variance,
    uniform_force_potential,
)
from gravicollapse.core.errors import (
    BadDimensions,
    NoConvergence,
    PositivityLoss,
    StabilityViolation,
)
from gravicollapse.core.grid import cat_state, gaussian_packet, make_grid, pure_density, shape_distance
from gravicollapse.core.kernel import potential_excess


def test_variance_formulas():
    assert soliton_variance(1.0) == 0.5
    assert soliton_variance(2.0, mass=2.0, hbar=4.0) == 0.5
    assert pointer_variance(1.0) == pytest.approx(math.sqrt(2.0) / 2.0)


@pytest.mark.parametrize("kwargs", [
    {"dt": 0.0, "steps": 10},
    {"dt": math.nan, "steps": 10},
    {"dt": 0.1, "steps": -1},
    {"dt": 0.1, "steps": 10, "record_stride": 0},
    {"dt": 0.1, "steps": 10, "scheme": "euler"},
])
def test_evolution_config_validation(kwargs):
    with pytest.raises(BadDimensions):
        EvolutionConfig(**kwargs)


def test_sne_conserves_norm_and_records(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    trajectory = evolve_sne(packet, unit_kernel, EvolutionConfig(dt=0.005, steps=100, record_stride=10))
    assert len(trajectory.times) == 11
    assert trajectory.times[-1] == pytest.approx(0.5)
    assert trajectory.final.norm() == pytest.approx(1.0, rel=1e-10)
    energy = trajectory.series("energy")
    assert np.max(np.abs(energy - energy[0])) < 1e-3
    assert {"t", "norm", "var_x", "energy"} <= set(trajectory.rows()[0])


def test_sne_is_reversible(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    forward = evolve_sne(packet, unit_kernel, EvolutionConfig(dt=0.005, steps=50))
    backward = evolve_sne(forward.final, unit_kernel, EvolutionConfig(dt=-0.005, steps=50))
    assert shape_distance(backward.final, packet) < 1e-9


def test_oversized_step_violates_stability(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    with pytest.raises(StabilityViolation):
        evolve_sne(packet, unit_kernel, EvolutionConfig(dt=1.0, steps=1))


def test_external_potential_shape_checked(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    with pytest.raises(BadDimensions):
        evolve_sne(packet, unit_kernel, EvolutionConfig(dt=0.005, steps=1, external=np.zeros(5)))


def test_ground_state_in_quadratic_regime(harmonic_kernel):
    ground = ground_state_sne(harmonic_kernel)
    assert ground.converged
    assert ground.variance == pytest.approx(soliton_variance(1.0), rel=2e-3)
    assert ground.wave.norm() == pytest.approx(1.0, rel=1e-10)


def test_ground_state_is_the_oscillator_gaussian(harmonic_kernel, harmonic_grid):
    ground = ground_state_sne(harmonic_kernel)
    assert shape_distance(ground.wave, sne_ground_gaussian(harmonic_grid, 1.0)) < 1e-2


def test_ground_state_rejects_foreign_grid(harmonic_kernel):
    with pytest.raises(BadDimensions):
        ground_state_sne(harmonic_kernel, grid=make_grid(64, 12.0))


def test_uniform_force_accelerates_the_centre(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    push = uniform_force_potential(small_grid, 0.5)
    trajectory = evolve_sne(packet, unit_kernel, EvolutionConfig(dt=0.005, steps=100, external=push))
    # self-forces cancel, so d<p>/dt = F
    assert trajectory.series("mean_p")[-1] == pytest.approx(0.25, rel=1e-3)
    assert trajectory.series("mean_x")[-1] == pytest.approx(0.0625, rel=1e-2)


def test_ground_state_reports_non_convergence(harmonic_kernel):
    with pytest.raises(NoConvergence):
        ground_state_sne(harmonic_kernel, tol=0.0, max_iterations=20)


def test_ground_state_with_external_trap(harmonic_kernel, harmonic_grid):
    # trap with the same frequency doubles the curvature: omega_eff = sqrt(2)
    trap = harmonic_potential(harmonic_grid, 1.0, 1.0)
    ground = ground_state_sne(harmonic_kernel, external=trap)
    assert ground.variance == pytest.approx(soliton_variance(math.sqrt(2.0)), rel=2e-3)


def test_frsne_conserves_norm(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.0, 0.5)
    trajectory = evolve_frsne(packet, unit_kernel, EvolutionConfig(dt=0.005, steps=100))
    assert trajectory.final.norm() == pytest.approx(1.0, rel=1e-10)


def test_frsne_pointer_state(harmonic_kernel, harmonic_grid):
    pointer = pointer_state_frsne(harmonic_kernel)
    assert pointer.variance == pytest.approx(pointer_variance(1.0), rel=5e-3)
    assert shape_distance(pointer.wave, frsne_pointer_state(harmonic_grid, 1.0)) < 1e-2


def test_frsne_shrinks_a_wide_packet(harmonic_kernel, harmonic_grid):
    wide = gaussian_packet(harmonic_grid, 0.0, 1.0)
    trajectory = evolve_frsne(wide, harmonic_kernel, EvolutionConfig(dt=0.004, steps=2000, record_stride=100))
    var_x = trajectory.series("var_x")
    assert var_x[-1] < var_x[0]
    assert var_x[-1] == pytest.approx(pointer_variance(1.0), rel=2e-2)


def test_sne_breathing_follows_moment_equations(harmonic_kernel, harmonic_grid):
    wide = gaussian_packet(harmonic_grid, 0.0, 1.0)
    trajectory = evolve_sne(wide, harmonic_kernel, EvolutionConfig(dt=0.002, steps=1000, record_stride=50))

    # closed Gaussian moments in a co-moving harmonic well, M = hbar = omega = 1
    def moments(t, y):
        var_x, cov, var_p = y
        return [cov, 2.0 * var_p - 2.0 * var_x, -cov]

    times = trajectory.series("t")
    oracle = integrate.solve_ivp(moments, (0.0, times[-1]), [1.0, 0.0, 0.25], t_eval=times,
                                 rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(trajectory.series("var_x"), oracle.y[0], rtol=2e-3)
    np.testing.assert_allclose(trajectory.series("var_p"), oracle.y[2], rtol=5e-3)


def test_vnne_without_kinetic_decays_exactly(unit_kernel, small_grid):
    rho = pure_density(cat_state(small_grid, 3.0, 0.5))
    cfg = EvolutionConfig(dt=0.01, steps=50, kinetic=False)
    with warnings.catch_warnings():
        warnings.simplefilter("error", PositivityLoss)
        trajectory = evolve_vnne(rho, unit_kernel, cfg)
    i, j = small_grid.index_of(-1.5), small_grid.index_of(1.5)
    ratio = abs(trajectory.final.rho[i, j]) / abs(rho.rho[i, j])
    assert ratio == pytest.approx(math.exp(-potential_excess(unit_kernel.ball, 3.0) * 0.5), rel=1e-10)
    np.testing.assert_allclose(trajectory.final.density(), rho.density(), rtol=1e-12)
    purity = trajectory.series("purity")
    assert purity[0] == pytest.approx(1.0, rel=1e-10)
    assert purity[-1] < purity[0]


def test_vnne_preserves_trace(unit_kernel, small_grid):
    rho = pure_density(cat_state(small_grid, 3.0, 0.5))
    trajectory = evolve_vnne(rho, unit_kernel, EvolutionConfig(dt=0.01, steps=40, record_stride=10))
    assert trajectory.final.trace() == pytest.approx(1.0, rel=1e-12)
    assert trajectory.final.hermitian_error() < 1e-14
    assert min(trajectory.series("min_eigenvalue")) > -1e-6
