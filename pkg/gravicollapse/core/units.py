"""
Physical constants and the dimensionless unit systems used by the solvers

Two scaling conventions are supported:

- ``harmonic``: hbar = M = omega_G = 1. Lengths are measured in
  sqrt(hbar / (M omega_G)) = Delta x_G, times in 1/omega_G. Quadratic-regime
  answers become round numbers.
- ``ball``: hbar = M = R = 1 with G carried explicitly. Used for full-kernel runs.

CGS is the external unit system.
"""
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Tuple

from .errors import BadDimensions, ZeroRadius

if TYPE_CHECKING:
    from .kernel import BallSpec

# CODATA 2018, CGS
CODATA_G = 6.67430e-8          # cm^3 g^-1 s^-2
CODATA_HBAR = 1.054571817e-27  # erg s

HARMONIC = "harmonic"
BALL = "ball"
SCALING_MODES = (HARMONIC, BALL)

# (mass, length, time) exponents
DIMENSIONS: Dict[str, Tuple[int, int, int]] = {
    "mass": (1, 0, 0),
    "length": (0, 1, 0),
    "time": (0, 0, 1),
    "frequency": (0, 0, -1),
    "energy": (1, 2, -2),
    "action": (1, 2, -1),
    "momentum": (1, 1, -1),
    "wavenumber": (0, -1, 0),
    "density": (1, -3, 0),
    "diffusion": (0, 2, -1),
    "gravitational": (-1, 3, -2),
    "dimensionless": (0, 0, 0),
}


@dataclass(frozen=True)
class PhysicalConstants:
    """Newton's constant and the reduced Planck constant (CGS by default).

    G = 0 is accepted: it switches gravity off and is how the free-particle
    limits are run.
    """

    G: float = CODATA_G
    hbar: float = CODATA_HBAR

    def __post_init__(self):
        if not (math.isfinite(self.G) and self.G >= 0.0):
            raise BadDimensions(f"G must be finite and non-negative, got {self.G}")
        if not (math.isfinite(self.hbar) and self.hbar > 0.0):
            raise BadDimensions(f"hbar must be finite and positive, got {self.hbar}")


@dataclass(frozen=True)
class UnitSystem:
    """Internal units expressed in CGS: one internal unit of X equals ``X_unit`` CGS units."""

    length_unit: float
    time_unit: float
    mass_unit: float
    mode: str

    @property
    def energy_unit(self) -> float:
        return self.mass_unit * self.length_unit ** 2 / self.time_unit ** 2

    def unit(self, dimension: str) -> float:
        """CGS size of one internal unit of the given dimension"""
        try:
            m, l, t = DIMENSIONS[dimension]
        except KeyError:
            raise BadDimensions(f"Unknown dimension '{dimension}'") from None
        return self.mass_unit ** m * self.length_unit ** l * self.time_unit ** t

    def to_internal(self, value, dimension: str):
        return value / self.unit(dimension)

    def to_physical(self, value, dimension: str):
        return value * self.unit(dimension)

    def internal_constants(self, constants: PhysicalConstants) -> PhysicalConstants:
        """Constants in internal units; hbar is exactly 1 by construction"""
        return PhysicalConstants(G=self.to_internal(constants.G, "gravitational"), hbar=1.0)

    def internal_ball(self, ball: "BallSpec") -> "BallSpec":
        """The same ball in internal units (M exactly 1, and R exactly 1 in ball mode)"""
        from .kernel import BallSpec

        radius = 1.0 if (self.mode == BALL and ball.radius > 0.0) else self.to_internal(ball.radius, "length")
        return BallSpec(mass=1.0, radius=radius, constants=self.internal_constants(ball.constants))


def make_unit_system(ball: "BallSpec", mode: str) -> UnitSystem:
    """Build the unit system for ``ball`` under the given scaling mode"""
    if mode not in SCALING_MODES:
        raise BadDimensions(f"Unknown scaling mode '{mode}', expected one of {SCALING_MODES}")
    G, hbar = ball.constants.G, ball.constants.hbar
    M, R = ball.mass, ball.radius

    if mode == HARMONIC:
        if R <= 0.0:
            raise ZeroRadius("omega_G is undefined for R = 0; use the ball scaling mode")
        if G <= 0.0:
            raise BadDimensions("omega_G vanishes for G = 0; use the ball scaling mode")
        omega = math.sqrt(G * M / R ** 3)
        return UnitSystem(
            length_unit=math.sqrt(hbar / (M * omega)),
            time_unit=1.0 / omega,
            mass_unit=M,
            mode=mode,
        )

    if R > 0.0:
        length = R
    elif G > 0.0:
        # gravitational Bohr radius of the point mass
        length = hbar ** 2 / (G * M ** 3)
    else:
        raise ZeroRadius("ball scaling needs R > 0 or G > 0")
    return UnitSystem(length_unit=length, time_unit=M * length ** 2 / hbar, mass_unit=M, mode=mode)


def soliton_scale(ball: "BallSpec") -> float:
    """Delta x_G = (hbar^2 / G M^3)^(1/4) R^(3/4), in the ball's own units"""
    G, hbar = ball.constants.G, ball.constants.hbar
    if ball.radius <= 0.0:
        raise ZeroRadius("Delta x_G is defined through omega_G and needs R > 0")
    if G <= 0.0:
        return math.inf
    return (hbar ** 2 / (G * ball.mass ** 3)) ** 0.25 * ball.radius ** 0.75


def physical_scales(ball: "BallSpec") -> Dict[str, float]:
    """Characteristic scales of a ball, in the ball's own units (CGS for a physical ball)"""
    from .kernel import self_energy

    G, hbar = ball.constants.G, ball.constants.hbar
    scales: Dict[str, float] = {
        "mass": ball.mass,
        "radius": ball.radius,
        "G": G,
        "hbar": hbar,
    }
    if ball.radius > 0.0 and G > 0.0:
        omega = math.sqrt(G * ball.mass / ball.radius ** 3)
        dx = soliton_scale(ball)
        u0 = self_energy(ball)
        scales.update({
            "omega_G": omega,
            "delta_x_G": dx,
            "delta_x_G_over_R": dx / ball.radius,
            "soliton_sigma": math.sqrt(hbar / (2.0 * ball.mass * omega)),
            "self_energy": u0,
            "t_G_distant": hbar / (-u0),
            "t_G_estimate": hbar * ball.radius / (G * ball.mass ** 2),
        })
    return scales
