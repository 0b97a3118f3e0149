"""
Stochastic unravelings of the master equation

- ``evolve_stochastic_master``: density matrix driven by the correlated field,
  trace-renormalised every step; its ensemble mean is the vNNE solution.
- ``evolve_stochastic_wave``: frSNE with the compensator [U_G + U(0)] / 2 plus
  the field noise, projected back to unit norm every step.
- ``evolve_quadratic_stochastic``: the same equation in the quadratic regime,
  where the noise collapses to one scalar Wiener process coupled to x - <x>.

The multiplicative updates are exact exponentials of Itô increments: each
noise factor exp(X) is accompanied by exp(-Var[X] / 2) with Var[X] in closed
form from the kernel, so the unnormalised ensemble mean reproduces the
linear master equation step by step.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .deterministic import (
    POSITIVITY_TOLERANCE,
    EvolutionConfig,
    check_stability,
    soliton_variance,
)
from .errors import BadDimensions, PositivityLoss
from .grid import (
    DensityMatrix,
    GridSpec,
    KineticPropagator,
    Moments,
    WaveFunction,
    compute_moments,
    gaussian_packet,
    window_norms,
)
from .kernel import KernelTable
from .noise import NoiseModel, NoiseStream

logger = logging.getLogger(__name__)

LEFT = "left"
RIGHT = "right"

MIXED_COMPENSATOR = "mixed"        # [U_G + U(0)] / 2
FRICTIONAL_COMPENSATOR = "frsne"   # U_G
COMPENSATORS = (MIXED_COMPENSATOR, FRICTIONAL_COMPENSATOR)

DEFAULT_COLLAPSE_THRESHOLD = 0.99
STOCHASTIC_WIDTH_FACTOR = complex(1.0, -1.0)


class CollapseWatch:
    """Detects the first time one side of ``split`` holds at least ``threshold`` of the norm"""

    def __init__(self, split: float = 0.0, threshold: float = DEFAULT_COLLAPSE_THRESHOLD):
        if not 0.5 < threshold < 1.0:
            raise BadDimensions(f"Collapse threshold must lie in (0.5, 1), got {threshold}")
        self.split = split
        self.threshold = threshold
        self.collapse_time: Optional[float] = None
        self.branch: Optional[str] = None

    @property
    def collapsed(self) -> bool:
        return self.collapse_time is not None

    def update(self, t: float, state) -> bool:
        if self.collapsed:
            return True
        left, right = window_norms(state, self.split)
        if left >= self.threshold:
            self.collapse_time, self.branch = t, LEFT
        elif right >= self.threshold:
            self.collapse_time, self.branch = t, RIGHT
        return self.collapsed


@dataclass
class TrajectoryRecord:
    """Outcome of one stochastic trajectory"""

    seed: int
    index: int
    times: List[float] = field(default_factory=list)
    moments: List[Moments] = field(default_factory=list)
    extras: Dict[str, List[float]] = field(default_factory=dict)
    collapse_time: Optional[float] = None
    branch: Optional[str] = None
    steps: int = 0
    final: Any = None
    phases: Dict[str, float] = field(default_factory=dict)

    def record(self, t: float, moments: Moments, **extras: float):
        self.times.append(t)
        self.moments.append(moments)
        for name, value in extras.items():
            self.extras.setdefault(name, []).append(value)

    def extend(self, other: "TrajectoryRecord"):
        """Append a continuation (e.g. the relaxation phase after collapse)"""
        start = 1 if self.times and other.times and other.times[0] == self.times[-1] else 0
        self.times.extend(other.times[start:])
        self.moments.extend(other.moments[start:])
        for name, values in other.extras.items():
            self.extras.setdefault(name, []).extend(values[start:])
        self.steps += other.steps
        if self.collapse_time is None and other.collapse_time is not None:
            self.collapse_time, self.branch = other.collapse_time, other.branch
        self.final = other.final

    def series(self, name: str) -> np.ndarray:
        if name == "t":
            return np.asarray(self.times)
        if name in self.extras:
            return np.asarray(self.extras[name])
        if name == "energy":
            return np.asarray([m.energy for m in self.moments])
        return np.asarray([getattr(m, name) for m in self.moments])

    def rows(self) -> List[Dict[str, float]]:
        out = []
        for i, (t, m) in enumerate(zip(self.times, self.moments)):
            row = {"t": t, "norm": m.norm, "mean_x": m.mean_x, "var_x": m.var_x,
                   "mean_p": m.mean_p, "var_p": m.var_p}
            for name, values in self.extras.items():
                row[name] = values[i]
            out.append(row)
        return out

    def summary(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "index": self.index,
            "steps": self.steps,
            "collapse_time": self.collapse_time,
            "branch": self.branch,
            "final_var_x": self.moments[-1].var_x if self.moments else None,
            **{f"{name}_start": t for name, t in self.phases.items()},
        }


def _stream_for(noise: NoiseModel, stream: Optional[NoiseStream], index: int) -> NoiseStream:
    if stream is None:
        return noise.stream(index)
    if stream.model is not noise:
        raise BadDimensions("Noise stream belongs to a different model")
    return stream


def _check_grid(noise: NoiseModel, grid: GridSpec):
    if noise.is_scalar or noise.size != grid.n:
        raise BadDimensions(f"Field noise with {noise.size} points does not match grid n={grid.n}")


def _finish_record(record: TrajectoryRecord, watch: Optional[CollapseWatch]):
    if watch is not None and watch.collapsed:
        record.collapse_time, record.branch = watch.collapse_time, watch.branch


def _wants_record(step: int, cfg: EvolutionConfig, last: bool) -> bool:
    return step % cfg.record_stride == 0 or last


def evolve_stochastic_wave(psi: WaveFunction, kernel: KernelTable, noise: NoiseModel,
                           cfg: EvolutionConfig, stream: Optional[NoiseStream] = None,
                           index: int = 0, compensator: str = MIXED_COMPENSATOR,
                           watch: Optional[CollapseWatch] = None, stop_on_collapse: bool = False,
                           t0: float = 0.0) -> TrajectoryRecord:
    """One trajectory of the stochastic frSNE.

    The pre-projection norm drift of each step is recorded as ``norm_drift``;
    ``compensator='frsne'`` with a zero noise scale reproduces the frSNE.
    """
    if compensator not in COMPENSATORS:
        raise BadDimensions(f"Unknown compensator '{compensator}', expected one of {COMPENSATORS}")
    if cfg.dt <= 0.0:
        raise BadDimensions("Stochastic evolution runs forward in time only")
    grid = kernel.grid
    _check_grid(noise, grid)
    stream = _stream_for(noise, stream, index)
    hbar = kernel.hbar
    h = grid.spacing
    dt = cfg.dt
    s2 = noise.scale ** 2
    share = 0.5 if compensator == MIXED_COMPENSATOR else 1.0
    half = KineticPropagator(grid, kernel.mass, hbar, 0.5 * dt) if cfg.kinetic else None
    external = cfg.external_for(grid)
    state = psi.normalized().psi

    record = TrajectoryRecord(seed=noise.seed, index=stream.index)
    record.record(t0, compute_moments(WaveFunction(state, grid), kernel), norm_drift=0.0)
    already = watch is not None and watch.update(t0, WaveFunction(state, grid))
    steps = 0 if stop_on_collapse and already else cfg.steps

    for step in range(1, steps + 1):
        t = t0 + step * dt
        if half is not None:
            state = half.apply(state)
        density = np.abs(state) ** 2
        p = density / (float(np.sum(density)) * h)
        field_ = kernel.convolve_excess(p)
        energy = float(np.sum(field_ * p)) * h
        drift = -(field_ - share * energy) + 0.5 * s2 * (energy - 2.0 * field_)
        check_stability(field_, density, dt, hbar, cfg.stability_limit)

        sample = stream.draw(dt)
        xi = sample.increment
        mean_xi = float(np.sum(xi * p)) * h
        state = state * np.exp(drift * dt / hbar + (xi - mean_xi) / hbar)
        if external is not None:
            state = state * np.exp(-1j * external * dt / hbar)
        if half is not None:
            state = half.apply(state)

        norm = float(np.sum(np.abs(state) ** 2)) * h
        state = state / math.sqrt(norm)
        record.steps = step
        wave = WaveFunction(state, grid)
        collapsed_now = watch is not None and not watch.collapsed and watch.update(t, wave)
        last = step == cfg.steps or (stop_on_collapse and collapsed_now)
        if _wants_record(step, cfg, last):
            record.record(t, compute_moments(wave, kernel), norm_drift=norm - 1.0)
        if stop_on_collapse and collapsed_now:
            break

    record.final = WaveFunction(state, grid)
    _finish_record(record, watch)
    return record


def evolve_stochastic_master(rho: DensityMatrix, kernel: KernelTable, noise: NoiseModel,
                             cfg: EvolutionConfig, stream: Optional[NoiseStream] = None,
                             index: int = 0, watch: Optional[CollapseWatch] = None,
                             stop_on_collapse: bool = False, t0: float = 0.0) -> TrajectoryRecord:
    """One trajectory of the stochastic master equation.

    Per step: kinetic half step from both sides, then
        rho_ij <- rho_ij exp(-(U_ij - U0) dt / hbar + X_ij - Var[X_ij] / 2)
    with X_ij = (xi_i + xi_j - 2 <xi>) / hbar, then the second kinetic half
    step, trace renormalisation and hermitisation.
    """
    if cfg.dt <= 0.0:
        raise BadDimensions("Stochastic evolution runs forward in time only")
    grid = kernel.grid
    _check_grid(noise, grid)
    stream = _stream_for(noise, stream, index)
    hbar = kernel.hbar
    h = grid.spacing
    dt = cfg.dt
    s2 = noise.scale ** 2
    half = KineticPropagator(grid, kernel.mass, hbar, 0.5 * dt) if cfg.kinetic else None
    # for s = 1 the non-separable part cancels and pure states stay pure
    coupling = np.exp((s2 - 1.0) * kernel.excess_matrix() * dt / hbar)
    state = DensityMatrix(rho.rho / rho.trace(), grid)

    record = TrajectoryRecord(seed=noise.seed, index=stream.index)
    _record_master(record, t0, state, kernel, cfg, 0.0)
    already = watch is not None and watch.update(t0, state)
    steps = 0 if stop_on_collapse and already else cfg.steps

    for step in range(1, steps + 1):
        t = t0 + step * dt
        if half is not None:
            state.rho = half.apply_density(state.rho)
        density = state.density()
        p = density / (float(np.sum(density)) * h)
        field_ = kernel.convolve_excess(p)
        energy = float(np.sum(field_ * p)) * h

        sample = stream.draw(dt)
        xi = sample.increment
        mean_xi = float(np.sum(xi * p)) * h
        side = (xi - mean_xi) / hbar + s2 * dt * (energy - 2.0 * field_) / hbar
        scaling = np.exp(side)
        state.rho = state.rho * coupling * np.outer(scaling, scaling)
        if half is not None:
            state.rho = half.apply_density(state.rho)

        trace = state.trace()
        state.rho = state.rho / trace
        state.hermitize()
        record.steps = step
        collapsed_now = watch is not None and not watch.collapsed and watch.update(t, state)
        last = step == cfg.steps or (stop_on_collapse and collapsed_now)
        if _wants_record(step, cfg, last):
            _record_master(record, t, state, kernel, cfg, trace - 1.0)
        if stop_on_collapse and collapsed_now:
            break

    record.final = state
    _finish_record(record, watch)
    return record


def _record_master(record: TrajectoryRecord, t: float, state: DensityMatrix, kernel: KernelTable,
                   cfg: EvolutionConfig, drift: float):
    extras = {"purity": state.purity(), "norm_drift": drift}
    if cfg.monitor_positivity:
        lowest = state.min_eigenvalue()
        extras["min_eigenvalue"] = lowest
        if lowest < -POSITIVITY_TOLERANCE:
            logger.warning(f"Trajectory {record.index}: min eigenvalue {lowest:.3g} at t={t:g}")
            warnings.warn(f"min eigenvalue {lowest:.3g} at t={t:g}", PositivityLoss)
    record.record(t, compute_moments(state, kernel), **extras)


def evolve_quadratic_stochastic(psi: WaveFunction, omega: float, noise: NoiseModel,
                                cfg: EvolutionConfig, mass: float = 1.0, hbar: float = 1.0,
                                stream: Optional[NoiseStream] = None, index: int = 0,
                                t0: float = 0.0) -> TrajectoryRecord:
    """Quadratic-regime stochastic frSNE driven by one scalar Wiener process.

    With A = sqrt(M / hbar) omega (x - <x>), each step multiplies psi by
    exp(-(A^2 - <A^2>) dt / 2) and by the Itô exponential
    exp(A dW - s^2 A^2 dt / 2) with dW = s dB the scaled draw, then projects
    back to unit norm.
    """
    if not noise.is_scalar:
        raise BadDimensions("The quadratic-regime equation needs scalar noise")
    if cfg.dt <= 0.0:
        raise BadDimensions("Stochastic evolution runs forward in time only")
    grid = psi.grid
    stream = _stream_for(noise, stream, index)
    h = grid.spacing
    x = grid.x
    dt = cfg.dt
    s = noise.scale
    coupling = math.sqrt(mass / hbar) * omega
    half = KineticPropagator(grid, mass, hbar, 0.5 * dt) if cfg.kinetic else None
    state = psi.normalized().psi

    record = TrajectoryRecord(seed=noise.seed, index=stream.index)
    record.record(t0, compute_moments(WaveFunction(state, grid), mass=mass, hbar=hbar), norm_drift=0.0)
    for step in range(1, cfg.steps + 1):
        if half is not None:
            state = half.apply(state)
        density = np.abs(state) ** 2
        p = density / (float(np.sum(density)) * h)
        centre = float(np.sum(x * p)) * h
        a = coupling * (x - centre)
        a2 = a * a
        check_stability(0.5 * hbar * a2, density, dt, hbar, cfg.stability_limit)
        mean_a2 = float(np.sum(a2 * p)) * h

        db = stream.draw(dt).increment
        state = state * np.exp(-0.5 * (a2 - mean_a2) * dt + a * db - 0.5 * s * s * a2 * dt)
        if half is not None:
            state = half.apply(state)
        norm = float(np.sum(np.abs(state) ** 2)) * h
        state = state / math.sqrt(norm)
        record.steps = step
        if _wants_record(step, cfg, step == cfg.steps):
            wave = WaveFunction(state, grid)
            record.record(t0 + step * dt, compute_moments(wave, mass=mass, hbar=hbar),
                          norm_drift=norm - 1.0)

    record.final = WaveFunction(state, grid)
    return record


def stochastic_pointer_variance(omega: float, mass: float = 1.0, hbar: float = 1.0) -> float:
    """Steady packet variance under the noisy equation: hbar / (2 M omega)"""
    return soliton_variance(omega, mass, hbar)


def stochastic_pointer_state(grid: GridSpec, omega: float, mass: float = 1.0, hbar: float = 1.0,
                             center: float = 0.0) -> WaveFunction:
    """Steady Gaussian of the noisy quadratic equation: exp(-(1 - i)(x - c)^2 / 4 sigma^2)"""
    sigma = math.sqrt(soliton_variance(omega, mass, hbar))
    return gaussian_packet(grid, center, sigma, width_factor=STOCHASTIC_WIDTH_FACTOR)


def centroid_variance_oracle(t: np.ndarray, omega: float, mass: float = 1.0,
                             hbar: float = 1.0) -> np.ndarray:
    """Var[<x>](t) = (hbar/M)(t + omega t^2 + omega^2 t^3 / 3) for the steady packet"""
    t = np.asarray(t, dtype=float)
    return hbar / mass * (t + omega * t ** 2 + omega ** 2 * t ** 3 / 3.0)
