"""
Spatial grid, spectral kinetic propagator and quantum-state containers

The 1-D centre-of-mass coordinate lives on n equally spaced points
x_i = -L/2 + i h, h = L/n. Kinetic steps are diagonal in the discrete Fourier
basis; self-gravity convolutions are aperiodic and go through the zero-padded
kernel spectrum held by ``KernelTable``.
"""
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np
from scipy import fft, linalg

from .errors import BadDimensions, UnresolvedWidth

if TYPE_CHECKING:
    from .kernel import KernelTable

logger = logging.getLogger(__name__)

MIN_POINTS = 16
DEFAULT_PADDING = 2

# Sizing rule: L >= DOMAIN_FACTOR (d + SUPPORT_WIDTHS w), h <= w / POINTS_PER_WIDTH
DOMAIN_FACTOR = 8.0
SUPPORT_WIDTHS = 6.0
POINTS_PER_WIDTH = 8.0

# A packet is resolved when its width spans more than this many grid spacings
MIN_RESOLVED_SPACINGS = 2.0
# Packet support: centre +/- this many widths must lie inside the domain
PACKET_SUPPORT = 5.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid centred at 0; ``padding`` sets the convolution buffer to padding * n"""

    n: int
    length: float
    padding: int = DEFAULT_PADDING

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < MIN_POINTS:
            raise BadDimensions(f"Grid needs at least {MIN_POINTS} points, got {self.n}")
        if self.n & (self.n - 1):
            raise BadDimensions(f"Grid size must be a power of two, got {self.n}")
        if not (math.isfinite(self.length) and self.length > 0.0):
            raise BadDimensions(f"Domain length must be positive, got {self.length}")
        if not isinstance(self.padding, (int, np.integer)) or self.padding < 2:
            raise BadDimensions(f"Padding factor must be an integer >= 2, got {self.padding}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def padded_size(self) -> int:
        return self.padding * self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.spacing * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order"""
        return 2.0 * math.pi * fft.fftfreq(self.n, d=self.spacing)

    @property
    def bounds(self) -> Tuple[float, float]:
        x = self.x
        return float(x[0]), float(x[-1])

    def index_of(self, position: float) -> int:
        """Grid index closest to ``position`` (clipped to the domain)"""
        i = int(round((position + 0.5 * self.length) / self.spacing))
        return min(max(i, 0), self.n - 1)


def make_grid(n: int, length: float, padding: int = DEFAULT_PADDING) -> GridSpec:
    return GridSpec(n=int(n), length=float(length), padding=int(padding))


def next_power_of_two(value: float) -> int:
    return max(MIN_POINTS, 1 << max(0, math.ceil(math.log2(max(value, 1.0)))))


def sizing_rule(separation: float, width: float) -> Tuple[float, int]:
    """Default (L, n): L = 8 (d + 6 w), and enough points for h <= w / 8"""
    if width <= 0.0:
        raise UnresolvedWidth(f"Packet width must be positive, got {width}")
    length = DOMAIN_FACTOR * (abs(separation) + SUPPORT_WIDTHS * width)
    return length, next_power_of_two(length * POINTS_PER_WIDTH / width)


class KineticPropagator:
    """Free-particle propagator exp(-i p^2 dt / 2 M hbar), diagonal in k.

    ``imaginary=True`` gives the heat-kernel exp(-hbar k^2 dtau / 2M) used for
    imaginary-time relaxation.
    """

    def __init__(self, grid: GridSpec, mass: float, hbar: float, dt: float,
                 imaginary: bool = False):
        self.grid = grid
        self.dt = dt
        self.imaginary = imaginary
        exponent = hbar * grid.k ** 2 * dt / (2.0 * mass)
        if imaginary:
            self.phase = np.exp(-exponent).astype(complex)
        else:
            self.phase = np.exp(-1j * exponent)
        self.phase.setflags(write=False)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return fft.ifft(self.phase * fft.fft(psi))

    def apply_density(self, rho: np.ndarray) -> np.ndarray:
        """K rho K^dagger"""
        out = fft.ifft(self.phase[:, None] * fft.fft(rho, axis=0), axis=0)
        return fft.ifft(np.conj(self.phase)[None, :] * fft.fft(out, axis=1), axis=1)


class WaveFunction:
    """Complex amplitudes on a grid; norm^2 = sum |psi|^2 h"""

    def __init__(self, amplitudes: np.ndarray, grid: GridSpec):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (grid.n,):
            raise BadDimensions(f"Expected {grid.n} amplitudes, got shape {amplitudes.shape}")
        if not np.all(np.isfinite(amplitudes)):
            raise BadDimensions("Wave function has non-finite entries")
        self.psi = amplitudes
        self.grid = grid

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.psi.copy(), self.grid)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def norm(self) -> float:
        """norm^2 (the integral of |psi|^2)"""
        return float(np.sum(self.density()) * self.grid.spacing)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.psi / math.sqrt(self.norm()), self.grid)

    def inner(self, other: "WaveFunction") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.psi, other.psi) * self.grid.spacing)

    def momentum_density(self) -> np.ndarray:
        """|psi(k)|^2 normalised to sum 1, in FFT order"""
        weights = np.abs(fft.fft(self.psi)) ** 2
        return weights / np.sum(weights)


class DensityMatrix:
    """Dense rho(x_i, x_j); trace = sum rho_ii h"""

    def __init__(self, entries: np.ndarray, grid: GridSpec):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (grid.n, grid.n):
            raise BadDimensions(f"Expected a {grid.n}x{grid.n} matrix, got shape {entries.shape}")
        self.rho = entries
        self.grid = grid

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.rho.copy(), self.grid)

    def density(self) -> np.ndarray:
        return np.real(np.diagonal(self.rho)).copy()

    def trace(self) -> float:
        return float(np.sum(self.density()) * self.grid.spacing)

    def purity(self) -> float:
        """Tr rho^2 for the continuum-normalised operator"""
        h = self.grid.spacing
        return float(np.real(np.sum(self.rho * self.rho.T)) * h * h)

    def hermitian_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def hermitize(self):
        self.rho = 0.5 * (self.rho + self.rho.conj().T)

    def eigenvalues(self) -> np.ndarray:
        """Spectrum of the operator rho h (sums to the trace)"""
        return linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T) * self.grid.spacing)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def momentum_density(self) -> np.ndarray:
        """Diagonal of F rho F^dagger normalised to sum 1"""
        partial = fft.fft(self.rho, axis=0)
        diag = np.real(np.conj(np.diagonal(fft.fft(np.conj(partial), axis=1))))
        return diag / np.sum(diag)


State = Union[WaveFunction, DensityMatrix]


@dataclass
class Moments:
    """Position and momentum moments plus the self-gravity energy of a state"""

    mean_x: float
    var_x: float
    mean_p: float
    var_p: float
    U_G: float
    norm: float
    kinetic: float = 0.0
    external: float = 0.0

    @property
    def energy(self) -> float:
        """SNE energy functional: kinetic + U_G / 2 + external"""
        return self.kinetic + 0.5 * self.U_G + self.external

    def to_dict(self) -> dict:
        return {
            "mean_x": self.mean_x,
            "var_x": self.var_x,
            "mean_p": self.mean_p,
            "var_p": self.var_p,
            "U_G": self.U_G,
            "norm": self.norm,
            "kinetic": self.kinetic,
            "external": self.external,
            "energy": self.energy,
        }


def mean_field_potential(state: State, kernel: "KernelTable") -> np.ndarray:
    """V(x) = integral U(x - x') |psi(x')|^2 dx' via the padded spectral convolution"""
    return kernel.convolve(state.density())


def self_gravity_energy(density: np.ndarray, kernel: "KernelTable") -> float:
    """U_G = integral integral U(x - x') p(x) p(x') for a density normalised to 1"""
    h = kernel.grid.spacing
    mass = float(np.sum(density)) * h
    excess = float(np.sum(kernel.convolve_excess(density) * density)) * h
    return kernel.U0 * mass * mass + excess


def compute_moments(state: State, kernel: Optional["KernelTable"] = None,
                    mass: float = 1.0, hbar: float = 1.0,
                    external: Optional[np.ndarray] = None) -> Moments:
    """Moments of a pure or mixed state.

    Position and momentum moments are computed on the normalised state; the
    reported ``norm`` is the raw norm^2 (trace for a density matrix). When a
    kernel is given, its ball supplies M and hbar.
    """
    if kernel is not None:
        mass, hbar = kernel.mass, kernel.hbar
    grid = state.grid
    h = grid.spacing
    x = grid.x
    density = state.density()
    norm = float(np.sum(density) * h)
    p = density / norm

    mean_x = float(np.sum(x * p) * h)
    var_x = max(float(np.sum((x - mean_x) ** 2 * p) * h), 0.0)

    weights = state.momentum_density()
    k = grid.k
    mean_k = float(np.sum(k * weights))
    var_k = max(float(np.sum((k - mean_k) ** 2 * weights)), 0.0)
    kinetic = hbar ** 2 * float(np.sum(k ** 2 * weights)) / (2.0 * mass)

    U_G = self_gravity_energy(p, kernel) if kernel is not None else 0.0
    external_energy = float(np.sum(external * p) * h) if external is not None else 0.0
    return Moments(
        mean_x=mean_x,
        var_x=var_x,
        mean_p=hbar * mean_k,
        var_p=hbar ** 2 * var_k,
        U_G=U_G,
        norm=norm,
        kinetic=kinetic,
        external=external_energy,
    )


def gaussian_packet(grid: GridSpec, center: float, width: float, wavenumber: float = 0.0,
                    width_factor: complex = 1.0) -> WaveFunction:
    """Normalised psi ~ exp(-f (x - c)^2 / 4 w^2 + i k x).

    With f = 1, ``width`` is the standard deviation of |psi|^2. A complex f
    (e.g. sqrt(-i) for the frictional pointer state) gives |psi|^2 the
    standard deviation w / sqrt(Re f).
    """
    factor = complex(width_factor)
    if width <= 0.0 or factor.real <= 0.0:
        raise UnresolvedWidth(f"Packet needs positive width and Re(f) > 0, got w={width}, f={factor}")
    sigma = width / math.sqrt(factor.real)
    if sigma <= MIN_RESOLVED_SPACINGS * grid.spacing:
        raise UnresolvedWidth(
            f"Packet width {sigma:.4g} is not resolved by grid spacing {grid.spacing:.4g}")
    low, high = grid.bounds
    if center - PACKET_SUPPORT * sigma < low or center + PACKET_SUPPORT * sigma > high:
        raise UnresolvedWidth(
            f"Packet at {center:.4g} with width {sigma:.4g} does not fit in [{low:.4g}, {high:.4g}]")
    x = grid.x
    psi = np.exp(-factor * (x - center) ** 2 / (4.0 * width ** 2) + 1j * wavenumber * x)
    return WaveFunction(psi, grid).normalized()


def cat_state(grid: GridSpec, separation: float, width: float, width_factor: complex = 1.0,
              relative_phase: float = 0.0, center: float = 0.0) -> WaveFunction:
    """Balanced superposition of two packets at center +/- d/2, normalised"""
    left = gaussian_packet(grid, center - 0.5 * separation, width, width_factor=width_factor)
    right = gaussian_packet(grid, center + 0.5 * separation, width, width_factor=width_factor)
    psi = left.psi + np.exp(1j * relative_phase) * right.psi
    return WaveFunction(psi, grid).normalized()


def pure_density(psi: WaveFunction) -> DensityMatrix:
    """|psi><psi| as a density matrix"""
    return DensityMatrix(np.outer(psi.psi, np.conj(psi.psi)), psi.grid)


def window_norms(state: State, split: float = 0.0) -> Tuple[float, float]:
    """Fractions of the norm left and right of ``split``"""
    density = state.density()
    x = state.grid.x
    total = float(np.sum(density))
    left = float(np.sum(density[x < split]))
    return left / total, 1.0 - left / total


def boost(psi: WaveFunction, wavenumber: float) -> WaveFunction:
    """Galilean boost psi(x) exp(i k x)"""
    return WaveFunction(psi.psi * np.exp(1j * wavenumber * psi.grid.x), psi.grid)


def translate(psi: WaveFunction, shift: float) -> WaveFunction:
    """psi(x - a) by a spectral shift; the packet must stay clear of the domain edges"""
    spectrum = fft.fft(psi.psi) * np.exp(-1j * psi.grid.k * shift)
    return WaveFunction(fft.ifft(spectrum), psi.grid)


def shape_distance(psi: WaveFunction, phi: WaveFunction, renormalize: bool = True) -> float:
    """L2 distance between two states after optimal global phase alignment"""
    a = psi.normalized() if renormalize else psi
    b = phi.normalized() if renormalize else phi
    overlap = b.inner(a)
    phase = overlap / abs(overlap) if abs(overlap) > 0.0 else 1.0
    diff = a.psi - phase * b.psi
    return math.sqrt(float(np.sum(np.abs(diff) ** 2)) * a.grid.spacing)
