#!/usr/bin/env python3
"""
Tests for physical constants and the internal unit systems
"""
import math

import pytest

from gravicollapse.core.errors import BadDimensions, ZeroRadius
from gravicollapse.core.kernel import BallSpec
from gravicollapse.core.units import (
    CODATA_G,
    CODATA_HBAR,
    PhysicalConstants,
    make_unit_system,
    physical_scales,
    soliton_scale,
)


@pytest.fixture
def gram_ball():
    """Water-density ball of radius 10 microns (CGS)"""
    return BallSpec.from_density(1.0, 1e-3)


def test_codata_defaults():
    constants = PhysicalConstants()
    assert constants.G == CODATA_G == 6.67430e-8
    assert constants.hbar == CODATA_HBAR == 1.054571817e-27


@pytest.mark.parametrize("G, hbar", [(-1.0, 1.0), (1.0, 0.0), (math.inf, 1.0), (1.0, -2.0)])
def test_constants_reject_unphysical_values(G, hbar):
    with pytest.raises(BadDimensions):
        PhysicalConstants(G=G, hbar=hbar)


def test_zero_G_is_allowed():
    assert PhysicalConstants(G=0.0).G == 0.0


def test_harmonic_frequency_of_unit_density_ball(gram_ball):
    units = make_unit_system(gram_ball, "harmonic")
    assert 1.0 / units.time_unit == pytest.approx(5.29e-4, rel=1e-3)


def test_harmonic_internal_ball_has_unit_frequency(gram_ball):
    units = make_unit_system(gram_ball, "harmonic")
    ball = units.internal_ball(gram_ball)
    assert ball.mass == 1.0
    assert ball.hbar == 1.0
    assert ball.G * ball.mass / ball.radius ** 3 == pytest.approx(1.0, rel=1e-9)
    # deep quadratic regime: the ball is far larger than Delta x_G
    assert ball.radius == pytest.approx(4.6e4, rel=2e-2)


def test_ball_scaling_units(gram_ball):
    units = make_unit_system(gram_ball, "ball")
    ball = units.internal_ball(gram_ball)
    assert units.length_unit == gram_ball.radius
    assert units.time_unit == pytest.approx(gram_ball.mass * gram_ball.radius ** 2 / CODATA_HBAR)
    assert ball.radius == 1.0
    assert ball.G == pytest.approx(CODATA_G * gram_ball.mass ** 3 * gram_ball.radius / CODATA_HBAR ** 2,
                                   rel=1e-12)


def test_energy_conversion_is_consistent(gram_ball):
    units = make_unit_system(gram_ball, "harmonic")
    assert units.unit("energy") == pytest.approx(units.energy_unit)
    assert units.to_physical(units.to_internal(3.5e-20, "energy"), "energy") == pytest.approx(3.5e-20)
    # one internal unit of action is hbar
    assert units.unit("action") == pytest.approx(CODATA_HBAR, rel=1e-12)


def test_unknown_dimension_and_mode(gram_ball):
    units = make_unit_system(gram_ball, "ball")
    with pytest.raises(BadDimensions):
        units.unit("charge")
    with pytest.raises(BadDimensions):
        make_unit_system(gram_ball, "planck")


def test_harmonic_mode_needs_radius_and_gravity():
    with pytest.raises(ZeroRadius):
        make_unit_system(BallSpec(mass=1e-10, radius=0.0), "harmonic")
    with pytest.raises(BadDimensions):
        make_unit_system(BallSpec(mass=1.0, radius=1.0, constants=PhysicalConstants(G=0.0)), "harmonic")


def test_point_mass_ball_scaling_uses_bohr_radius():
    ball = BallSpec(mass=1e-10, radius=0.0)
    units = make_unit_system(ball, "ball")
    assert units.length_unit == pytest.approx(CODATA_HBAR ** 2 / (CODATA_G * 1e-30))


def test_soliton_scale_grows_as_three_quarter_power_of_radius():
    constants = PhysicalConstants(G=1e10, hbar=1.0)
    small = soliton_scale(BallSpec(mass=1.0, radius=1.0, constants=constants))
    large = soliton_scale(BallSpec(mass=1.0, radius=16.0, constants=constants))
    assert large / small == pytest.approx(8.0, rel=1e-12)


def test_soliton_scale_without_gravity_is_infinite():
    assert soliton_scale(BallSpec(1.0, 1.0, PhysicalConstants(G=0.0, hbar=1.0))) == math.inf


def test_physical_scales(gram_ball):
    scales = physical_scales(gram_ball)
    assert scales["omega_G"] == pytest.approx(5.29e-4, rel=1e-3)
    assert scales["delta_x_G"] == pytest.approx(2.18e-8, rel=1e-2)
    assert scales["delta_x_G_over_R"] < 1e-4
    assert scales["soliton_sigma"] == pytest.approx(scales["delta_x_G"] / math.sqrt(2.0), rel=1e-12)


def test_physical_scales_of_point_mass_omit_harmonic_entries():
    scales = physical_scales(BallSpec(mass=1e-22, radius=0.0))
    assert "omega_G" not in scales
    assert scales["mass"] == 1e-22
