#!/usr/bin/env python3
"""
Tests for the stochastic wave and master equations
"""
import math

import numpy as np
import pytest

from gravicollapse.core.deterministic import EvolutionConfig, evolve_frsne
from gravicollapse.core.ensemble import EnsembleRunner, centroid_variance_series, diffusion_fit
from gravicollapse.core.errors import BadDimensions
from gravicollapse.core.grid import (
    cat_state,
    compute_moments,
    gaussian_packet,
    make_grid,
    pure_density,
)
from gravicollapse.core.kernel import build_grid_kernel
from gravicollapse.core.noise import NoiseModel
from gravicollapse.core.stochastic import (
    LEFT,
    RIGHT,
    CollapseWatch,
    TrajectoryRecord,
    centroid_variance_oracle,
    evolve_quadratic_stochastic,
    evolve_stochastic_master,
    evolve_stochastic_wave,
    stochastic_pointer_state,
    stochastic_pointer_variance,
)


@pytest.fixture
def unit_noise(unit_kernel):
    return NoiseModel.build(unit_kernel, seed=77)


@pytest.fixture
def cat(small_grid):
    return cat_state(small_grid, 3.0, 0.5)


def test_silent_noise_with_frictional_compensator_is_the_frsne(unit_kernel, small_grid):
    packet = gaussian_packet(small_grid, 0.5, 0.6)
    silent = NoiseModel.build(unit_kernel, seed=1, scale=0.0)
    cfg = EvolutionConfig(dt=0.005, steps=80, record_stride=20)
    stochastic = evolve_stochastic_wave(packet, unit_kernel, silent, cfg, compensator="frsne")
    deterministic = evolve_frsne(packet, unit_kernel, cfg)
    np.testing.assert_allclose(stochastic.final.psi, deterministic.final.psi, atol=1e-10)
    np.testing.assert_allclose(stochastic.series("var_x"), deterministic.series("var_x"), rtol=1e-9)


def test_pure_master_trajectory_matches_wave_trajectory(unit_kernel, unit_noise, cat):
    cfg = EvolutionConfig(dt=0.005, steps=50, record_stride=10)
    wave = evolve_stochastic_wave(cat, unit_kernel, unit_noise, cfg, index=4)
    master = evolve_stochastic_master(pure_density(cat), unit_kernel, unit_noise, cfg, index=4)
    expected = np.outer(wave.final.psi, np.conj(wave.final.psi))
    np.testing.assert_allclose(master.final.rho, expected, atol=1e-10)
    np.testing.assert_allclose(master.series("purity"), 1.0, rtol=1e-8)
    np.testing.assert_allclose(master.series("mean_x"), wave.series("mean_x"), atol=1e-9)


def test_wave_trajectory_keeps_unit_norm(unit_kernel, unit_noise, cat):
    record = evolve_stochastic_wave(cat, unit_kernel, unit_noise, EvolutionConfig(dt=0.005, steps=40))
    assert record.final.norm() == pytest.approx(1.0, rel=1e-12)
    assert record.steps == 40
    assert len(record.times) == 41
    assert "norm_drift" in record.extras


def test_same_index_same_trajectory(unit_kernel, unit_noise, cat):
    cfg = EvolutionConfig(dt=0.005, steps=30)
    a = evolve_stochastic_wave(cat, unit_kernel, unit_noise, cfg, index=9)
    b = evolve_stochastic_wave(cat, unit_kernel, unit_noise, cfg, index=9)
    c = evolve_stochastic_wave(cat, unit_kernel, unit_noise, cfg, index=10)
    np.testing.assert_array_equal(a.final.psi, b.final.psi)
    assert not np.allclose(a.final.psi, c.final.psi)


def test_mixed_master_trajectory_stays_physical(unit_kernel, small_grid):
    left = pure_density(gaussian_packet(small_grid, -1.5, 0.5))
    right = pure_density(gaussian_packet(small_grid, 1.5, 0.5))
    rho = left.copy()
    rho.rho = 0.5 * (left.rho + right.rho)
    noise = NoiseModel.build(unit_kernel, seed=5, scale=0.5)
    record = evolve_stochastic_master(rho, unit_kernel, noise, EvolutionConfig(dt=0.005, steps=40, record_stride=10))
    assert record.final.trace() == pytest.approx(1.0, rel=1e-12)
    assert min(record.series("min_eigenvalue")) > -1e-6
    assert max(record.series("purity")) <= 1.0 + 1e-9


def test_collapse_watch_validation():
    for threshold in (0.5, 1.0, 0.2):
        with pytest.raises(BadDimensions):
            CollapseWatch(threshold=threshold)


def test_collapse_watch_picks_the_heavy_side(small_grid):
    watch = CollapseWatch(0.0, 0.99)
    assert not watch.update(0.0, cat_state(small_grid, 3.0, 0.5))
    assert watch.update(1.0, gaussian_packet(small_grid, 2.0, 0.5))
    assert watch.branch == RIGHT
    assert watch.collapse_time == 1.0
    # first detection sticks
    assert watch.update(2.0, gaussian_packet(small_grid, -2.0, 0.5))
    assert watch.branch == RIGHT


def test_stop_on_collapse(unit_kernel, unit_noise, small_grid):
    packet = gaussian_packet(small_grid, -2.0, 0.5)
    watch = CollapseWatch(0.0, 0.99)
    record = evolve_stochastic_wave(packet, unit_kernel, unit_noise, EvolutionConfig(dt=0.005, steps=100),
                                    watch=watch, stop_on_collapse=True)
    # already collapsed at t = 0
    assert record.collapse_time == 0.0
    assert record.branch == LEFT
    assert record.steps == 0
    assert record.final.norm() == pytest.approx(1.0)


def test_stochastic_equations_reject_bad_input(unit_kernel, unit_noise, cat):
    with pytest.raises(BadDimensions):
        evolve_stochastic_wave(cat, unit_kernel, unit_noise, EvolutionConfig(dt=-0.005, steps=2))
    with pytest.raises(BadDimensions):
        evolve_stochastic_wave(cat, unit_kernel, unit_noise, EvolutionConfig(dt=0.005, steps=2),
                               compensator="none")
    with pytest.raises(BadDimensions):
        evolve_stochastic_wave(cat, unit_kernel, NoiseModel.scalar(seed=1), EvolutionConfig(dt=0.005, steps=2))
    with pytest.raises(BadDimensions):
        evolve_quadratic_stochastic(cat, 1.0, unit_noise, EvolutionConfig(dt=0.005, steps=2))


def test_noise_from_another_grid_rejected(unit_ball, cat, unit_kernel):
    foreign = NoiseModel.build(build_grid_kernel(unit_ball, make_grid(32, 12.0)), seed=1)
    with pytest.raises(BadDimensions):
        evolve_stochastic_master(pure_density(cat), unit_kernel, foreign, EvolutionConfig(dt=0.005, steps=2))


def test_quadratic_steady_state_keeps_its_width():
    grid = make_grid(512, 60.0)
    start = stochastic_pointer_state(grid, 1.0)
    assert compute_moments(start).var_x == pytest.approx(0.5, rel=1e-8)
    record = evolve_quadratic_stochastic(start, 1.0, NoiseModel.scalar(seed=3),
                                         EvolutionConfig(dt=0.002, steps=500, record_stride=50))
    np.testing.assert_allclose(record.series("var_x"), stochastic_pointer_variance(1.0), rtol=1e-2)


def test_quadratic_width_relaxes_to_steady_value():
    grid = make_grid(512, 60.0)
    start = gaussian_packet(grid, 0.0, 0.8)
    record = evolve_quadratic_stochastic(start, 1.0, NoiseModel.scalar(seed=4),
                                         EvolutionConfig(dt=0.002, steps=1500, record_stride=100))
    assert record.series("var_x")[-1] == pytest.approx(0.5, rel=1e-2)


def test_quadratic_noise_scale_enters_once():
    start = stochastic_pointer_state(make_grid(128, 12.0), 1.0)
    cfg = EvolutionConfig(dt=1e-3, steps=20, record_stride=20)

    def final_centres(scale):
        noise = NoiseModel.scalar(seed=11, scale=scale)
        return np.array([evolve_quadratic_stochastic(start, 1.0, noise, cfg, index=i).series("mean_x")[-1]
                         for i in range(200)])

    # same draws at both scales, so the spread grows as s^2
    ratio = np.var(final_centres(2.0)) / np.var(final_centres(1.0))
    assert ratio == pytest.approx(4.0, rel=0.15)


def test_quadratic_without_noise_stays_put():
    start = stochastic_pointer_state(make_grid(128, 12.0), 1.0, center=0.5)
    record = evolve_quadratic_stochastic(start, 1.0, NoiseModel.scalar(seed=5, scale=0.0),
                                         EvolutionConfig(dt=1e-3, steps=50, record_stride=10))
    np.testing.assert_allclose(record.series("mean_x"), 0.5, atol=1e-8)


def test_record_summary_lists_phases():
    record = TrajectoryRecord(seed=1, index=2)
    record.phases["relax"] = 0.5
    summary = record.summary()
    assert summary["relax_start"] == 0.5
    assert summary["final_var_x"] is None


@pytest.mark.slow
def test_centroid_variance_follows_oracle():
    grid = make_grid(256, 30.0)
    start = stochastic_pointer_state(grid, 1.0)
    noise = NoiseModel.scalar(seed=2718)
    cfg = EvolutionConfig(dt=0.002, steps=500, record_stride=50)
    records = EnsembleRunner(workers=2).run(
        lambda i: evolve_quadratic_stochastic(start, 1.0, noise, cfg, index=i), 400)
    times, variance, stderr = centroid_variance_series(records)
    expected = centroid_variance_oracle(times, 1.0)
    assert abs(variance[-1] - expected[-1]) < 3.0 * stderr[-1]


@pytest.mark.slow
def test_centroid_random_walk_fit():
    grid = make_grid(256, 30.0)
    start = stochastic_pointer_state(grid, 1.0)
    noise = NoiseModel.scalar(seed=31415)
    dt, steps, count = 0.002, 100, 1600
    cfg = EvolutionConfig(dt=dt, steps=steps, record_stride=10)
    records = EnsembleRunner(workers=4).run(
        lambda i: evolve_quadratic_stochastic(start, 1.0, noise, cfg, index=i), count)
    times, variance, _ = centroid_variance_series(records)
    fit = diffusion_fit(times, variance)
    assert fit["r_squared"] > 0.99

    # replay the same draws through <x>(t) = sum (1 + omega (t - s)) dB_s
    def draws(index):
        stream = noise.stream(index)
        return [stream.draw(dt).increment for _ in range(steps)]

    kicks = np.array([draws(i) for i in range(count)])
    kick_times = (np.arange(steps) + 0.5) * dt
    lag = times[:, None] - kick_times[None, :]
    centres = kicks @ np.where(lag > 0.0, 1.0 + lag, 0.0).T
    replay = diffusion_fit(times, np.var(centres, axis=0, ddof=1))
    assert fit["slope"] == pytest.approx(replay["slope"], rel=0.05)

    oracle = diffusion_fit(times, centroid_variance_oracle(times, 1.0))
    assert oracle["r_squared"] > 0.99
    assert fit["slope"] == pytest.approx(oracle["slope"], rel=4.0 * math.sqrt(2.0 / (count - 1)))
