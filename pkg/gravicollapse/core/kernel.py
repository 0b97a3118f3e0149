"""
Rigid-ball Newtonian self-interaction kernel U(d)

U(d) is the gravitational interaction energy of two interpenetrating copies of
a homogeneous ball of mass M and radius R whose centres are a distance d apart.
Far apart it is -GM^2/d, at small separation it is U(0) + M omega_G^2 d^2 / 2.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Union

import numpy as np
from scipy import fft, integrate, linalg

from .errors import BadDimensions, NegativeSeparation, UnsoftenedPointKernel, ZeroRadius
from .grid import GridSpec
from .units import PhysicalConstants

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

BALL_PROFILE = "ball"
QUADRATIC_PROFILE = "quadratic"
POINT_PROFILE = "point"
PROFILES = (BALL_PROFILE, QUADRATIC_PROFILE, POINT_PROFILE)

# U(0) = -SELF_ENERGY_COEFFICIENT * G M^2 / R for a homogeneous ball
SELF_ENERGY_COEFFICIENT = 1.2


@dataclass(frozen=True)
class BallSpec:
    """Homogeneous rigid ball; R = 0 is allowed and marks a point mass"""

    mass: float
    radius: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0.0):
            raise BadDimensions(f"Ball mass must be positive, got {self.mass}")
        if not (math.isfinite(self.radius) and self.radius >= 0.0):
            raise BadDimensions(f"Ball radius must be non-negative, got {self.radius}")

    @classmethod
    def from_density(cls, density: float, radius: float,
                     constants: Optional[PhysicalConstants] = None) -> "BallSpec":
        """Ball of given mass density and radius"""
        mass = 4.0 * math.pi / 3.0 * density * radius ** 3
        return cls(mass=mass, radius=radius, constants=constants or PhysicalConstants())

    @property
    def pointlike(self) -> bool:
        return self.radius == 0.0

    @property
    def G(self) -> float:
        return self.constants.G

    @property
    def hbar(self) -> float:
        return self.constants.hbar

    @property
    def density(self) -> float:
        if self.pointlike:
            return math.inf
        return 3.0 * self.mass / (4.0 * math.pi * self.radius ** 3)


def _as_separation(d: ArrayLike) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise NegativeSeparation("Separation must be non-negative")
    return arr


def _scalar_or_array(arr: np.ndarray, like: ArrayLike):
    return float(arr) if np.ndim(like) == 0 else arr


def self_energy(ball: BallSpec, softening: Optional[float] = None) -> float:
    """U(0); for a point mass the softened value -GM^2/eps (-inf when eps = 0)"""
    gm2 = ball.G * ball.mass ** 2
    if not ball.pointlike and softening is None:
        return -SELF_ENERGY_COEFFICIENT * gm2 / ball.radius
    eps = ball.radius if softening is None else softening
    if gm2 == 0.0:
        return 0.0
    return -gm2 / eps if eps > 0.0 else -math.inf


def pair_potential(ball: BallSpec, d: ArrayLike) -> ArrayLike:
    """Closed-form U(d) for two overlapping homogeneous spheres.

    For u = d/R < 2:
        U = -(GM^2/R) (6/5 - u^2/2 + 3u^3/16 - u^5/160)
    and -GM^2/d beyond contact. Value, first and second derivative are
    continuous at d = 2R.
    """
    if ball.pointlike:
        raise ZeroRadius("pair_potential needs R > 0; use point_potential for point masses")
    arr = _as_separation(d)
    gm2 = ball.G * ball.mass ** 2
    u = arr / ball.radius
    overlap = -(gm2 / ball.radius) * (1.2 - 0.5 * u ** 2 + 0.1875 * u ** 3 - u ** 5 / 160.0)
    with np.errstate(divide="ignore"):
        far = -gm2 / np.where(u >= 2.0, arr, 1.0)
    return _scalar_or_array(np.where(u < 2.0, overlap, far), d)


def _lens_area(s: float, d: float, R: float) -> float:
    """Area of the sphere |y| = s lying inside the ball of radius R centred at distance d"""
    if s + d <= R:
        return 4.0 * math.pi * s * s
    if s >= d + R or s <= d - R:
        return 0.0
    return math.pi * s * (R * R - (s - d) ** 2) / d


def pair_potential_quadrature(ball: BallSpec, d: float) -> float:
    """U(d) by direct quadrature of the double-volume integral.

    Integrating the density of the second ball against the potential of the
    first over spheres centred on the first ball reduces the six-dimensional
    integral to a single radial one. Used to validate the closed form.
    """
    if ball.pointlike:
        raise ZeroRadius("quadrature needs R > 0")
    d = float(_as_separation(d))
    G, M, R = ball.G, ball.mass, ball.radius
    rho0 = ball.density

    def phi(s: float) -> float:
        if s < R:
            return -G * M * (3.0 * R * R - s * s) / (2.0 * R ** 3)
        return -G * M / s

    def integrand(s: float) -> float:
        return _lens_area(s, d, R) * phi(s)

    lower = max(0.0, d - R)
    upper = d + R
    breaks = sorted({p for p in (R, abs(R - d)) if lower < p < upper})
    value, _ = integrate.quad(integrand, lower, upper, points=breaks or None,
                              epsabs=0.0, epsrel=1e-12, limit=200)
    return rho0 * value


def check_closed_form(ball: BallSpec, separations: np.ndarray) -> float:
    """Largest relative deviation of the closed form from quadrature over ``separations``"""
    worst = 0.0
    for d in np.asarray(separations, dtype=float):
        reference = pair_potential_quadrature(ball, d)
        worst = max(worst, abs(pair_potential(ball, d) - reference) / abs(reference))
    return worst


@dataclass(frozen=True)
class PointPotential:
    value: ArrayLike
    singular: bool


def point_potential(ball: BallSpec, d: ArrayLike, softening: float) -> PointPotential:
    """Softened Newtonian form -GM^2/sqrt(d^2 + eps^2).

    With eps = 0 and d = 0 the value is -inf and ``singular`` is set.
    """
    if softening < 0.0:
        raise BadDimensions(f"Softening must be non-negative, got {softening}")
    arr = _as_separation(d)
    gm2 = ball.G * ball.mass ** 2
    r = np.sqrt(arr ** 2 + softening ** 2)
    singular = bool(np.any(r == 0.0)) and gm2 > 0.0
    with np.errstate(divide="ignore"):
        value = np.where(r > 0.0, -gm2 / np.where(r > 0.0, r, 1.0), -math.inf if gm2 > 0.0 else 0.0)
    return PointPotential(value=_scalar_or_array(value, d), singular=singular)


def gravitational_frequency(ball: BallSpec) -> float:
    """omega_G = sqrt(GM/R^3)"""
    if ball.pointlike:
        raise ZeroRadius("omega_G is undefined for R = 0")
    return math.sqrt(ball.G * ball.mass / ball.radius ** 3)


def quadratic_potential(ball: BallSpec, d: ArrayLike) -> ArrayLike:
    """Small-separation branch U(0) + M omega_G^2 d^2 / 2"""
    arr = _as_separation(d)
    omega = gravitational_frequency(ball)
    value = self_energy(ball) + 0.5 * ball.mass * omega ** 2 * arr ** 2
    return _scalar_or_array(value, d)


def potential(ball: BallSpec, d: ArrayLike, profile: str = BALL_PROFILE,
              softening: Optional[float] = None) -> ArrayLike:
    """U(d) under the requested kernel profile"""
    if profile == BALL_PROFILE and not ball.pointlike:
        return pair_potential(ball, d)
    if profile == QUADRATIC_PROFILE:
        return quadratic_potential(ball, d)
    if profile in (BALL_PROFILE, POINT_PROFILE):
        eps = _resolve_softening(ball, softening)
        return point_potential(ball, d, eps).value
    raise BadDimensions(f"Unknown kernel profile '{profile}', expected one of {PROFILES}")


def potential_excess(ball: BallSpec, d: ArrayLike, profile: str = BALL_PROFILE,
                     softening: Optional[float] = None) -> ArrayLike:
    """U(d) - U(0), evaluated without cancelling two large numbers.

    This is the quantity every decay rate and every mean-field gradient depends
    on; U(0) itself only ever contributes a global phase.
    """
    arr = _as_separation(d)
    gm2 = ball.G * ball.mass ** 2
    if profile == QUADRATIC_PROFILE:
        omega = gravitational_frequency(ball)
        value = 0.5 * ball.mass * omega ** 2 * arr ** 2
    elif profile == BALL_PROFILE and not ball.pointlike:
        R = ball.radius
        u = arr / R
        near = (gm2 / R) * (0.5 * u ** 2 - 0.1875 * u ** 3 + u ** 5 / 160.0)
        with np.errstate(divide="ignore"):
            far = SELF_ENERGY_COEFFICIENT * gm2 / R - gm2 / np.where(u >= 2.0, arr, 1.0)
        value = np.where(u < 2.0, near, far)
    elif profile in (BALL_PROFILE, POINT_PROFILE):
        eps = _resolve_softening(ball, softening)
        r = np.sqrt(arr ** 2 + eps ** 2)
        value = gm2 * arr ** 2 / (eps * r * (r + eps))
    else:
        raise BadDimensions(f"Unknown kernel profile '{profile}', expected one of {PROFILES}")
    return _scalar_or_array(value, d)


def _resolve_softening(ball: BallSpec, softening: Optional[float]) -> float:
    eps = ball.radius if softening is None else float(softening)
    if eps <= 0.0:
        raise UnsoftenedPointKernel("Point kernel needs a positive softening (default eps = R)")
    return eps


def kernel_samples(ball: BallSpec, separations: np.ndarray) -> Dict[str, np.ndarray]:
    """Columns d, U, far-field and near-field asymptotes for a kernel dump"""
    d = _as_separation(separations)
    gm2 = ball.G * ball.mass ** 2
    with np.errstate(divide="ignore"):
        far = np.where(d > 0.0, -gm2 / np.where(d > 0.0, d, 1.0), -math.inf)
    return {
        "d": d,
        "U": np.asarray(pair_potential(ball, d)),
        "U_asymptotic_far": far,
        "U_asymptotic_near": np.asarray(quadratic_potential(ball, d)),
    }


class KernelTable:
    """U sampled at every grid separation, plus its zero-padded spectrum.

    The excess U(d) - U(0) is tabulated separately; convolving it keeps the
    mean-field gradients exact even when |U(0)| dwarfs the variation of U
    across the domain. The table is immutable and shared read-only by every
    solver and trajectory on the same grid.
    """

    def __init__(self, ball: BallSpec, grid: GridSpec, profile: str = BALL_PROFILE,
                 softening: Optional[float] = None):
        self.ball = ball
        self.grid = grid
        self.profile = profile
        self.pointlike = profile == POINT_PROFILE or (profile == BALL_PROFILE and ball.pointlike)
        self.softening = _resolve_softening(ball, softening) if self.pointlike else None

        if self.pointlike:
            self.U0 = self_energy(ball, self.softening)
            self.omega_G = math.nan
        else:
            self.U0 = self_energy(ball)
            self.omega_G = gravitational_frequency(ball)

        n = grid.n
        self.separations = grid.spacing * np.arange(n)
        self.excess = np.asarray(potential_excess(ball, self.separations, profile, self.softening), dtype=float)
        self.values = self.U0 + self.excess

        padded = np.zeros(grid.padded_size)
        padded[:n] = self.excess
        padded[grid.padded_size - n + 1:] = self.excess[:0:-1]
        self.spectrum = fft.rfft(padded)
        for arr in (self.separations, self.excess, self.values, self.spectrum):
            arr.setflags(write=False)
        self._matrix: Optional[np.ndarray] = None

    @property
    def hbar(self) -> float:
        return self.ball.hbar

    @property
    def mass(self) -> float:
        return self.ball.mass

    def __call__(self, d: ArrayLike) -> ArrayLike:
        """U(d) off-grid, consistent with the tabulated profile"""
        return potential(self.ball, d, self.profile, self.softening)

    def convolve_excess(self, density: np.ndarray) -> np.ndarray:
        """sum_j [U(x_i - x_j) - U(0)] density_j h, aperiodic (zero-padded)"""
        size = self.grid.padded_size
        buf = np.zeros(size)
        buf[:self.grid.n] = density
        out = fft.irfft(fft.rfft(buf) * self.spectrum, n=size)
        return out[:self.grid.n] * self.grid.spacing

    def convolve(self, density: np.ndarray) -> np.ndarray:
        """V(x_i) = sum_j U(x_i - x_j) density_j h"""
        mass = float(np.sum(density)) * self.grid.spacing
        return self.U0 * mass + self.convolve_excess(density)

    def matrix(self) -> np.ndarray:
        """Dense symmetric matrix U(x_i - x_j)"""
        if self._matrix is None:
            m = linalg.toeplitz(self.values)
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    def excess_matrix(self) -> np.ndarray:
        return linalg.toeplitz(self.excess)


@lru_cache(maxsize=32)
def build_grid_kernel(ball: BallSpec, grid: GridSpec, profile: str = BALL_PROFILE,
                      softening: Optional[float] = None) -> KernelTable:
    """Kernel table for (ball, grid), cached; any parameter change builds a new table"""
    if profile not in PROFILES:
        raise BadDimensions(f"Unknown kernel profile '{profile}', expected one of {PROFILES}")
    table = KernelTable(ball, grid, profile, softening)
    logger.debug(f"Built {profile} kernel on n={grid.n}, L={grid.length:g}: U0={table.U0:.6g}")
    return table
