"""
Deterministic solvers: Schrödinger-Newton (SNE), frictional SNE (frSNE) and
the von Neumann-Newton master equation (vNNE)

All three use second-order Strang splitting around the spectral kinetic step:
half kinetic, full self-gravity step with the potential frozen at the half
step, half kinetic. Only the excess U(d) - U(0) enters the numerics; the
constant U(0) is a global phase for the SNE, cancels against the counterterm
for the frSNE and drops out of the vNNE decay factor.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .errors import BadDimensions, NoConvergence, NormDrift, PositivityLoss, StabilityViolation
from .grid import (
    DensityMatrix,
    GridSpec,
    KineticPropagator,
    Moments,
    WaveFunction,
    compute_moments,
    gaussian_packet,
    shape_distance,
)
from .kernel import KernelTable

logger = logging.getLogger(__name__)

STRANG = "strang"

# Points with |psi|^2 below this fraction of the peak do not count for the stability guard
SUPPORT_FRACTION = 1e-8
POSITIVITY_TOLERANCE = 1e-6
FRICTIONAL_WIDTH_FACTOR = complex((1.0 - 1.0j) / math.sqrt(2.0))

# Default steps as fractions of the harmonic period scale 1/omega
GROUND_STATE_DTAU = 0.05
RELAXATION_DT = 0.005
CONVERGENCE_CHECK_EVERY = 10


@dataclass
class EvolutionConfig:
    """Time-stepping parameters shared by every solver.

    ``dt`` may be negative to run a reversible equation backwards. ``kinetic``
    switches the spectral kinetic step off, leaving the pure self-gravity
    dynamics. ``probe`` maps the state at each record to extra named columns.
    """

    dt: float
    steps: int
    external: Optional[np.ndarray] = None
    record_stride: int = 1
    renormalize: bool = False
    kinetic: bool = True
    scheme: str = STRANG
    stability_limit: float = 0.1
    norm_tolerance: float = 1e-6
    keep_states: bool = False
    monitor_positivity: bool = True
    probe: Optional[Callable[[Any], Dict[str, float]]] = None

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt != 0.0):
            raise BadDimensions(f"Time step must be finite and non-zero, got {self.dt}")
        if self.steps < 0:
            raise BadDimensions(f"Step count must be non-negative, got {self.steps}")
        if self.record_stride < 1:
            raise BadDimensions(f"Record stride must be >= 1, got {self.record_stride}")
        if self.scheme != STRANG:
            raise BadDimensions(f"Unsupported splitting scheme '{self.scheme}'")

    def external_for(self, grid: GridSpec) -> Optional[np.ndarray]:
        if self.external is None:
            return None
        external = np.asarray(self.external, dtype=float)
        if external.shape != (grid.n,):
            raise BadDimensions(f"External potential needs shape ({grid.n},), got {external.shape}")
        return external


@dataclass
class Trajectory:
    """Recorded time series of one deterministic evolution"""

    times: List[float] = field(default_factory=list)
    moments: List[Moments] = field(default_factory=list)
    extras: Dict[str, List[float]] = field(default_factory=dict)
    states: List[Any] = field(default_factory=list)
    final: Any = None

    def record(self, t: float, moments: Moments, state=None, **extras: float):
        self.times.append(t)
        self.moments.append(moments)
        for name, value in extras.items():
            self.extras.setdefault(name, []).append(value)
        if state is not None:
            self.states.append(state)

    def series(self, name: str) -> np.ndarray:
        if name == "t":
            return np.asarray(self.times)
        if name in self.extras:
            return np.asarray(self.extras[name])
        if name == "energy":
            return np.asarray([m.energy for m in self.moments])
        return np.asarray([getattr(m, name) for m in self.moments])

    def rows(self) -> List[Dict[str, float]]:
        """One flat dict per record, ready for CSV export"""
        out = []
        for i, (t, m) in enumerate(zip(self.times, self.moments)):
            row = {"t": t, "norm": m.norm, "mean_x": m.mean_x, "var_x": m.var_x,
                   "mean_p": m.mean_p, "var_p": m.var_p, "energy": m.energy}
            for name, values in self.extras.items():
                row[name] = values[i]
            out.append(row)
        return out


@dataclass
class PointerState:
    """A shape-stationary packet and what is known about it"""

    wave: WaveFunction
    width: float
    width_factor: complex
    energy: float
    iterations: int = 0
    converged: bool = True

    @property
    def variance(self) -> float:
        return self.width ** 2


def _recording_step(step: int, steps: int, stride: int) -> bool:
    return step % stride == 0 or step == steps


def check_stability(potential: np.ndarray, density: np.ndarray, dt: float, hbar: float,
                    limit: float) -> float:
    """dt max|V - <V>| / hbar over the support of the state; raises past ``limit``"""
    support = density >= SUPPORT_FRACTION * float(np.max(density))
    weights = density[support]
    mean = float(np.sum(potential[support] * weights) / np.sum(weights))
    measure = abs(dt) * float(np.max(np.abs(potential[support] - mean))) / hbar
    if measure >= limit:
        raise StabilityViolation(
            f"dt * max|V - <V>| / hbar = {measure:.3g} exceeds {limit:g}; reduce dt")
    return measure


def _excess_field(kernel: KernelTable, density: np.ndarray,
                  external: Optional[np.ndarray]) -> np.ndarray:
    field_ = kernel.convolve_excess(density)
    if external is not None:
        field_ = field_ + external
    return field_


def _check_norm(norm: float, reference: float, tolerance: float, step: int):
    if abs(norm - reference) > tolerance * reference:
        raise NormDrift(f"Norm drifted from {reference:.12g} to {norm:.12g} by step {step}")


def harmonic_potential(grid: GridSpec, mass: float, omega: float, center: float = 0.0) -> np.ndarray:
    """External trap M omega^2 (x - c)^2 / 2"""
    return 0.5 * mass * omega ** 2 * (grid.x - center) ** 2


def uniform_force_potential(grid: GridSpec, force: float) -> np.ndarray:
    """External potential -F x of a uniform force"""
    return -force * grid.x


def evolve_sne(psi: WaveFunction, kernel: KernelTable, cfg: EvolutionConfig) -> Trajectory:
    """Unitary split-step evolution of the Schrödinger-Newton equation"""
    grid = kernel.grid
    hbar = kernel.hbar
    external = cfg.external_for(grid)
    half = KineticPropagator(grid, kernel.mass, hbar, 0.5 * cfg.dt) if cfg.kinetic else None
    state = psi.psi.copy()
    reference = psi.norm()

    trajectory = Trajectory()
    _record_wave(trajectory, 0.0, state, kernel, external, cfg)
    for step in range(1, cfg.steps + 1):
        if half is not None:
            state = half.apply(state)
        density = np.abs(state) ** 2
        field_ = _excess_field(kernel, density, external)
        check_stability(field_, density, cfg.dt, hbar, cfg.stability_limit)
        state = state * np.exp(-1j * field_ * cfg.dt / hbar)
        if half is not None:
            state = half.apply(state)

        norm = float(np.sum(np.abs(state) ** 2) * grid.spacing)
        if cfg.renormalize:
            state = state * math.sqrt(reference / norm)
        else:
            _check_norm(norm, reference, cfg.norm_tolerance, step)
        if _recording_step(step, cfg.steps, cfg.record_stride):
            _record_wave(trajectory, step * cfg.dt, state, kernel, external, cfg)

    trajectory.final = WaveFunction(state, grid)
    logger.debug(f"SNE: {cfg.steps} steps of dt={cfg.dt:g}, final var_x={trajectory.moments[-1].var_x:.6g}")
    return trajectory


def _record_wave(trajectory: Trajectory, t: float, state: np.ndarray, kernel: KernelTable,
                 external: Optional[np.ndarray], cfg: EvolutionConfig, **extras: float):
    wave = WaveFunction(state.copy(), kernel.grid)
    moments = compute_moments(wave, kernel, external=external)
    if cfg.probe is not None:
        extras.update(cfg.probe(wave))
    trajectory.record(t, moments, wave if cfg.keep_states else None, **extras)


def _default_step(kernel: KernelTable, fraction: float) -> float:
    """fraction / omega_G, or the same fraction of the kinetic time of a sixteenth of the domain"""
    if math.isfinite(kernel.omega_G) and kernel.omega_G > 0.0:
        return fraction / kernel.omega_G
    scale = kernel.grid.length / 16.0
    return fraction * kernel.mass * scale ** 2 / kernel.hbar


def _state_energy(state: np.ndarray, kernel: KernelTable, external: Optional[np.ndarray]) -> float:
    """E - U(0)/2 of a normalised state"""
    m = compute_moments(WaveFunction(state, kernel.grid), kernel, external=external)
    return m.energy - 0.5 * kernel.U0


def _starting_packet(kernel: KernelTable) -> WaveFunction:
    grid = kernel.grid
    width = grid.length / 16.0
    if math.isfinite(kernel.omega_G) and kernel.omega_G > 0.0:
        width = min(width, math.sqrt(soliton_variance(kernel.omega_G, kernel.mass, kernel.hbar)))
    return gaussian_packet(grid, 0.0, max(width, 3.0 * grid.spacing))


def ground_state_sne(kernel: KernelTable, grid: Optional[GridSpec] = None, tol: float = 1e-10,
                     dtau: Optional[float] = None, max_iterations: int = 50000,
                     initial: Optional[WaveFunction] = None,
                     external: Optional[np.ndarray] = None) -> PointerState:
    """SNE soliton by imaginary-time propagation with per-step renormalisation.

    Convergence is declared when the relative change of E - U(0)/2 between
    checks ten steps apart falls below ``tol``.
    """
    if grid is not None and grid != kernel.grid:
        raise BadDimensions("Kernel table was built on a different grid")
    grid = kernel.grid
    hbar = kernel.hbar
    dtau = dtau or _default_step(kernel, GROUND_STATE_DTAU)
    half = KineticPropagator(grid, kernel.mass, hbar, 0.5 * dtau, imaginary=True)
    state = (initial or _starting_packet(kernel)).normalized().psi
    h = grid.spacing

    previous = _state_energy(state, kernel, external)
    for iteration in range(1, max_iterations + 1):
        state = half.apply(state)
        density = np.abs(state) ** 2
        field_ = _excess_field(kernel, density, external)
        mean = float(np.sum(field_ * density) / np.sum(density))
        state = state * np.exp(-(field_ - mean) * dtau / hbar)
        state = half.apply(state)
        state = state / math.sqrt(float(np.sum(np.abs(state) ** 2)) * h)

        if iteration % CONVERGENCE_CHECK_EVERY == 0:
            energy = _state_energy(state, kernel, external)
            change = abs(energy - previous) / max(abs(energy), np.finfo(float).tiny)
            previous = energy
            if change < tol:
                wave = WaveFunction(state, grid)
                m = compute_moments(wave, kernel, external=external)
                logger.info(f"SNE ground state after {iteration} steps: width={math.sqrt(m.var_x):.6g}")
                return PointerState(wave=wave, width=math.sqrt(m.var_x), width_factor=1.0,
                                    energy=m.energy, iterations=iteration)
    raise NoConvergence(f"SNE ground state did not converge to {tol:g} in {max_iterations} steps")


def _frictional_step(state: np.ndarray, kernel: KernelTable, dt: float,
                     external: Optional[np.ndarray], limit: float) -> np.ndarray:
    """Norm-preserving damping exp(-(V - U_G) dt / hbar) with the step-consistent counterterm"""
    hbar = kernel.hbar
    h = kernel.grid.spacing
    density = np.abs(state) ** 2
    field_ = _excess_field(kernel, density, None)
    check_stability(field_, density, dt, hbar, limit)
    mean = float(np.sum(field_ * density) / np.sum(density))
    damping = np.exp(-(field_ - mean) * dt / hbar)
    before = float(np.sum(density)) * h
    after = float(np.sum(density * damping ** 2)) * h
    state = state * damping * math.sqrt(before / after)
    if external is not None:
        state = state * np.exp(-1j * external * dt / hbar)
    return state


def evolve_frsne(psi: WaveFunction, kernel: KernelTable, cfg: EvolutionConfig) -> Trajectory:
    """Frictional SNE: the self-gravity term acts as real damping and norm is conserved
    by the U_G counterterm alone."""
    grid = kernel.grid
    external = cfg.external_for(grid)
    half = KineticPropagator(grid, kernel.mass, kernel.hbar, 0.5 * cfg.dt) if cfg.kinetic else None
    state = psi.psi.copy()
    reference = psi.norm()

    trajectory = Trajectory()
    _record_wave(trajectory, 0.0, state, kernel, external, cfg)
    for step in range(1, cfg.steps + 1):
        if half is not None:
            state = half.apply(state)
        state = _frictional_step(state, kernel, cfg.dt, external, cfg.stability_limit)
        if half is not None:
            state = half.apply(state)

        norm = float(np.sum(np.abs(state) ** 2) * grid.spacing)
        if cfg.renormalize:
            state = state * math.sqrt(reference / norm)
        else:
            _check_norm(norm, reference, cfg.norm_tolerance, step)
        if _recording_step(step, cfg.steps, cfg.record_stride):
            _record_wave(trajectory, step * cfg.dt, state, kernel, external, cfg)

    trajectory.final = WaveFunction(state, grid)
    return trajectory


def pointer_state_frsne(kernel: KernelTable, grid: Optional[GridSpec] = None, tol: float = 1e-6,
                        dt: Optional[float] = None, max_iterations: int = 200000,
                        initial: Optional[WaveFunction] = None,
                        check_every: int = CONVERGENCE_CHECK_EVERY) -> PointerState:
    """Relax a packet under the frSNE until its shape changes slower than ``tol`` per unit time"""
    if grid is not None and grid != kernel.grid:
        raise BadDimensions("Kernel table was built on a different grid")
    grid = kernel.grid
    dt = dt or _default_step(kernel, RELAXATION_DT)
    half = KineticPropagator(grid, kernel.mass, kernel.hbar, 0.5 * dt)
    state = (initial or _starting_packet(kernel)).normalized().psi
    checkpoint = WaveFunction(state.copy(), grid)

    for iteration in range(1, max_iterations + 1):
        state = half.apply(state)
        state = _frictional_step(state, kernel, dt, None, 0.1)
        state = half.apply(state)
        if iteration % check_every == 0:
            current = WaveFunction(state.copy(), grid)
            rate = shape_distance(current, checkpoint) / (check_every * abs(dt))
            checkpoint = current
            if rate < tol:
                m = compute_moments(current, kernel)
                logger.info(f"frSNE pointer state after {iteration} steps: width={math.sqrt(m.var_x):.6g}")
                return PointerState(wave=current, width=math.sqrt(m.var_x),
                                    width_factor=FRICTIONAL_WIDTH_FACTOR, energy=m.energy,
                                    iterations=iteration)
    raise NoConvergence(f"frSNE relaxation did not reach shape rate {tol:g} in {max_iterations} steps")


def evolve_vnne(rho: DensityMatrix, kernel: KernelTable, cfg: EvolutionConfig) -> Trajectory:
    """Master equation: unitary kinetic step from both sides, then exact pointwise decay
    rho(x, x') <- rho(x, x') exp(-[U(x - x') - U(0)] dt / hbar)"""
    grid = kernel.grid
    hbar = kernel.hbar
    external = cfg.external_for(grid)
    half = KineticPropagator(grid, kernel.mass, hbar, 0.5 * cfg.dt) if cfg.kinetic else None
    decay = np.exp(-kernel.excess_matrix() * cfg.dt / hbar)
    if external is not None:
        phase = np.exp(-1j * external * cfg.dt / hbar)
        decay = decay * np.outer(phase, np.conj(phase))
    state = DensityMatrix(rho.rho.copy(), grid)

    trajectory = Trajectory()
    _record_density(trajectory, 0.0, state, kernel, external, cfg)
    for step in range(1, cfg.steps + 1):
        if half is not None:
            state.rho = half.apply_density(state.rho)
        state.rho = state.rho * decay
        if half is not None:
            state.rho = half.apply_density(state.rho)
        state.hermitize()
        if _recording_step(step, cfg.steps, cfg.record_stride):
            _record_density(trajectory, step * cfg.dt, state, kernel, external, cfg)

    trajectory.final = state
    return trajectory


def _record_density(trajectory: Trajectory, t: float, state: DensityMatrix, kernel: KernelTable,
                    external: Optional[np.ndarray], cfg: EvolutionConfig):
    moments = compute_moments(state, kernel, external=external)
    extras = {"purity": state.purity() / moments.norm ** 2}
    if cfg.monitor_positivity:
        lowest = state.min_eigenvalue()
        extras["min_eigenvalue"] = lowest
        if lowest < -POSITIVITY_TOLERANCE:
            logger.warning(f"Density matrix lost positivity at t={t:g}: min eigenvalue {lowest:.3g}")
            warnings.warn(f"min eigenvalue {lowest:.3g} at t={t:g}", PositivityLoss)
    if cfg.probe is not None:
        extras.update(cfg.probe(state))
    trajectory.record(t, moments, state.copy() if cfg.keep_states else None, **extras)


def soliton_variance(omega: float, mass: float = 1.0, hbar: float = 1.0) -> float:
    """Quadratic-regime SNE ground-state variance hbar / (2 M omega)"""
    return hbar / (2.0 * mass * omega)


def pointer_variance(omega: float, mass: float = 1.0, hbar: float = 1.0) -> float:
    """Quadratic-regime frSNE pointer-state variance, sqrt(2) times the soliton value"""
    return math.sqrt(2.0) * soliton_variance(omega, mass, hbar)


def sne_ground_gaussian(grid: GridSpec, omega: float, mass: float = 1.0, hbar: float = 1.0,
                        center: float = 0.0) -> WaveFunction:
    return gaussian_packet(grid, center, math.sqrt(soliton_variance(omega, mass, hbar)))


def frsne_pointer_state(grid: GridSpec, omega: float, mass: float = 1.0, hbar: float = 1.0,
                        center: float = 0.0, wavenumber: float = 0.0) -> WaveFunction:
    """exp(-sqrt(-i) (x - c)^2 / 4 sigma^2 + i k x) with sigma^2 = hbar / (2 M omega)"""
    sigma = math.sqrt(soliton_variance(omega, mass, hbar))
    return gaussian_packet(grid, center, sigma, wavenumber=wavenumber,
                           width_factor=FRICTIONAL_WIDTH_FACTOR)
