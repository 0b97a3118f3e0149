"""
End-to-end scenarios: cat collapse, pointer-state formation, unraveling
checks, decoherence-time sweeps and the single-equation runs behind each CLI
subcommand

Every runner takes a validated ``ScenarioConfig`` and returns a
``ScenarioReport``. Physical inputs (mass, radius, density, softening, G, hbar
and the sweep lists) are CGS unless ``unit_mode`` is "none"; grid, time and
packet parameters (separation, packet_width, domain_length, dt, relax_dt,
momentum) are in the internal units of the selected scaling mode.
"""
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

import numpy as np
from scipy import stats

from .decoherence import decoherence_time, distant_estimate
from .deterministic import (
    EvolutionConfig,
    evolve_frsne,
    evolve_sne,
    evolve_vnne,
    ground_state_sne,
    pointer_variance,
    soliton_variance,
)
from .ensemble import (
    ERROR_SCALING_PARTS,
    EnsembleRunner,
    centroid_variance_series,
    collapse_statistics,
    ensemble_density_mean,
    error_scaling,
    mean_series,
)
from .errors import BadDimensions, UnresolvedCat, UnresolvedWidth, ZeroRadius
from .grid import (
    GridSpec,
    POINTS_PER_WIDTH,
    WaveFunction,
    cat_state,
    compute_moments,
    gaussian_packet,
    make_grid,
    pure_density,
    sizing_rule,
    translate,
    window_norms,
)
from .kernel import (
    POINT_PROFILE,
    BallSpec,
    KernelTable,
    build_grid_kernel,
    check_closed_form,
    kernel_samples,
    potential_excess,
)
from .noise import NoiseModel
from .reports import ScenarioReport
from .stochastic import (
    CollapseWatch,
    TrajectoryRecord,
    evolve_stochastic_master,
    evolve_stochastic_wave,
    stochastic_pointer_variance,
)
from .units import CODATA_G, CODATA_HBAR, PhysicalConstants, UnitSystem, make_unit_system, physical_scales

if TYPE_CHECKING:
    from ..utils.config import ScenarioConfig

logger = logging.getLogger(__name__)

DEFAULT_STEP_FRACTION = 0.005      # dt = fraction / omega_G for deterministic runs
COLLAPSE_STEPS_PER_T_G = 100
VNNE_STEPS_PER_T_G = 50
MIN_CAT_SEPARATION = 10.0          # in packet widths
PURGE_THRESHOLD = 1.0 - 1e-9       # minority branch weight below which the relaxation phase starts
KERNEL_DUMP_POINTS = 201
CLOSED_FORM_CHECK_POINTS = 50
NEAR_FIT_RANGE = 0.05              # in units of R
NEAR_FIT_POINTS = 21
POINT_GRID_WIDTHS = 20.0
RELAXED_FRACTION = 0.01            # |var - var_final| / var_final marking the relaxation time
TAIL_FRACTION = 0.2                # share of the relaxation records averaged for the final width


@dataclass
class Setup:
    """Physical ball, its unit system and the same ball in internal units"""

    config: "ScenarioConfig"
    ball: BallSpec
    internal: BallSpec
    units: Optional[UnitSystem]

    @property
    def time_unit(self) -> float:
        return self.units.time_unit if self.units else 1.0

    @property
    def length_unit(self) -> float:
        return self.units.length_unit if self.units else 1.0

    def internal_length(self, value: Optional[float]) -> Optional[float]:
        if value is None:
            return None
        return value / self.length_unit

    @property
    def softening(self) -> Optional[float]:
        return self.internal_length(self.config.softening)

    @property
    def omega(self) -> Optional[float]:
        """Internal omega_G, or None when there is no harmonic scale"""
        ball = self.internal
        if ball.pointlike or ball.G <= 0.0:
            return None
        return math.sqrt(ball.G * ball.mass / ball.radius ** 3)

    def default_width(self) -> float:
        """Configured packet width, else the SNE soliton width"""
        if self.config.packet_width is not None:
            return self.config.packet_width
        if self.omega is None:
            return 1.0
        return math.sqrt(soliton_variance(self.omega, self.internal.mass, self.internal.hbar))

    def describe(self) -> Dict[str, float]:
        info = {"mass": self.ball.mass, "radius": self.ball.radius, "G": self.ball.G, "hbar": self.ball.hbar,
                "internal_G": self.internal.G, "internal_radius": self.internal.radius}
        if self.units:
            info.update({"unit_mode": self.units.mode, "length_unit": self.units.length_unit,
                         "time_unit": self.units.time_unit, "mass_unit": self.units.mass_unit,
                         "energy_unit": self.units.energy_unit})
        return info


def physical_constants(cfg: "ScenarioConfig") -> PhysicalConstants:
    """Configured G and hbar; unset values are CODATA, or 1 when unit_mode is "none" """
    fallback_g, fallback_hbar = (1.0, 1.0) if cfg.unit_mode == "none" else (CODATA_G, CODATA_HBAR)
    return PhysicalConstants(G=fallback_g if cfg.G is None else cfg.G,
                             hbar=fallback_hbar if cfg.hbar is None else cfg.hbar)


def physical_ball(cfg: "ScenarioConfig") -> BallSpec:
    constants = physical_constants(cfg)
    if cfg.mass is not None:
        return BallSpec(mass=cfg.mass, radius=cfg.radius, constants=constants)
    return BallSpec.from_density(cfg.density, cfg.radius, constants)


def prepare(cfg: "ScenarioConfig") -> Setup:
    ball = physical_ball(cfg)
    if cfg.unit_mode == "none":
        return Setup(config=cfg, ball=ball, internal=ball, units=None)
    units = make_unit_system(ball, cfg.unit_mode)
    return Setup(config=cfg, ball=ball, internal=units.internal_ball(ball), units=units)


def scenario_grid(cfg: "ScenarioConfig", separation: float, width: float) -> GridSpec:
    length = cfg.domain_length
    if length is None:
        length, suggested = sizing_rule(separation, width)
        if suggested > cfg.grid_points:
            length = cfg.grid_points * width / POINTS_PER_WIDTH
            logger.warning(f"Sizing rule asks for {suggested} points; using L={length:.4g} "
                           f"so that n={cfg.grid_points} keeps h <= w/{POINTS_PER_WIDTH:g}")
    return make_grid(cfg.grid_points, length, cfg.padding)


def scenario_kernel(setup: Setup, grid: GridSpec) -> KernelTable:
    return build_grid_kernel(setup.internal, grid, setup.config.kernel_profile, setup.softening)


def _deterministic_dt(setup: Setup, kernel: KernelTable) -> float:
    """Configured dt, else a fraction of 1/omega_G shrunk by the square of the initial width factor"""
    if setup.config.dt is not None:
        return setup.config.dt
    spread = max(1.0, setup.config.initial_width_factor ** 2)
    if setup.omega is not None:
        return DEFAULT_STEP_FRACTION / (setup.omega * spread)
    return DEFAULT_STEP_FRACTION * kernel.mass * (kernel.grid.length / 16.0) ** 2 / (kernel.hbar * spread)


def _separation_t_G(setup: Setup, separation: float) -> float:
    cfg = setup.config
    profile = cfg.kernel_profile
    return decoherence_time(setup.internal, separation, setup.softening, profile,
                            setup.time_unit).t_G


def _initial_packet(setup: Setup, grid: GridSpec) -> WaveFunction:
    width = setup.default_width() * setup.config.initial_width_factor
    return gaussian_packet(grid, 0.0, width, wavenumber=setup.config.momentum)


def _build_cat(grid: GridSpec, separation: float, width: float, min_widths: float = 0.0) -> WaveFunction:
    if separation <= 0.0 or separation < min_widths * width:
        raise UnresolvedCat(f"Cat separation {separation:.4g} must be positive and at least "
                            f"{min_widths:g} packet widths ({width:.4g})")
    try:
        return cat_state(grid, separation, width)
    except UnresolvedWidth as e:
        raise UnresolvedCat(f"Grid does not resolve the cat state: {e}") from None


def _tail_mean(values: np.ndarray, fraction: float = TAIL_FRACTION) -> float:
    count = max(1, int(len(values) * fraction))
    return float(np.mean(values[-count:]))


def _relaxation_time(times: np.ndarray, variance: np.ndarray, target: float) -> Optional[float]:
    """First time after which var_x stays within RELAXED_FRACTION of ``target``"""
    outside = np.nonzero(np.abs(variance - target) > RELAXED_FRACTION * target)[0]
    if outside.size == 0:
        return float(times[0])
    last = outside[-1] + 1
    return float(times[last]) if last < len(times) else None


# ---------------------------------------------------------------------------
# Kernel, units and decoherence-time tables


def run_kernel_dump(cfg: "ScenarioConfig") -> ScenarioReport:
    """U(d) samples on [0, 4R] with far and near asymptotes, plus the quadrature check"""
    setup = prepare(cfg)
    ball = setup.internal
    if ball.pointlike:
        raise ZeroRadius("The kernel dump needs R > 0")
    separations = np.linspace(0.0, 4.0 * ball.radius, KERNEL_DUMP_POINTS)
    samples = kernel_samples(ball, separations)
    rows = [dict(zip(samples, values)) for values in zip(*samples.values())]
    check = np.linspace(0.0, 4.0 * ball.radius, CLOSED_FORM_CHECK_POINTS)
    deviation = check_closed_form(ball, check)

    near = np.linspace(0.0, NEAR_FIT_RANGE * ball.radius, NEAR_FIT_POINTS)
    curvature = 2.0 * float(np.polyfit(near, potential_excess(ball, near), 3)[1])
    metrics = {
        "U0": float(samples["U"][0]),
        "omega_G": setup.omega,
        "closed_form_max_rel_error": deviation,
        "near_curvature": curvature,
        "near_curvature_expected": ball.G * ball.mass ** 2 / ball.radius ** 3,
    }
    logger.info(f"Kernel dump: closed form within {deviation:.2e} of quadrature")
    return ScenarioReport.create(cfg, metrics, tables={"kernel": rows}, details=setup.describe())


def run_units(cfg: "ScenarioConfig") -> ScenarioReport:
    """Characteristic scales of the configured ball and the internal unit system"""
    setup = prepare(cfg)
    scales = physical_scales(setup.ball)
    if not setup.ball.pointlike:
        scales["t_G_distant_estimate"] = distant_estimate(setup.ball)
    return ScenarioReport.create(cfg, scales, details=setup.describe())


def _sweep_balls(cfg: "ScenarioConfig", constants: PhysicalConstants) -> List[BallSpec]:
    balls = []
    for radius in cfg.sweep_radii:
        if cfg.sweep_masses:
            balls.extend(BallSpec(mass=m, radius=radius, constants=constants) for m in cfg.sweep_masses)
        elif radius > 0.0:
            balls.append(BallSpec.from_density(cfg.sweep_density, radius, constants))
        else:
            logger.warning("Radius 0 in a fixed-density sweep has zero mass; give sweep_masses")
    return balls


def run_tg_sweep(cfg: "ScenarioConfig") -> ScenarioReport:
    """t_G across (M, R, d) in CGS.

    Separations are multiples of R; for R = 0 rows they are absolute lengths.
    """
    constants = physical_constants(cfg)
    rows = []
    for ball in _sweep_balls(cfg, constants):
        scales = physical_scales(ball)
        for factor in cfg.sweep_separations:
            d = factor * ball.radius if ball.radius > 0.0 else factor
            report = decoherence_time(ball, d, softening=cfg.softening)
            if report.singular:
                logger.warning(f"Singular t_G for M={ball.mass:.3g} g, R=0, d={d:.3g} cm")
            rows.append({
                "mass_g": ball.mass,
                "radius_cm": ball.radius,
                "d_cm": d,
                "d_over_R": factor if ball.radius > 0.0 else math.inf,
                "t_G_s": report.t_G,
                "rate_per_s": report.rate,
                "regime": report.regime,
                "singular": report.singular,
                "delta_x_G_cm": scales.get("delta_x_G", math.nan),
                "delta_x_G_over_R": scales.get("delta_x_G_over_R", math.nan),
                "omega_G_per_s": scales.get("omega_G", math.nan),
                "t_G_estimate_s": scales.get("t_G_estimate", math.nan),
            })
    metrics = {
        "rows": len(rows),
        "singular_rows": sum(1 for r in rows if r["singular"]),
        "delocalization_crossing_cm": _ratio_crossing(rows),
        "max_t_G_s": max((r["t_G_s"] for r in rows if math.isfinite(r["t_G_s"])), default=None),
    }
    return ScenarioReport.create(cfg, metrics, tables={"tg_sweep": rows})


def _ratio_crossing(rows: List[Dict]) -> Optional[float]:
    """Radius where Delta x_G / R crosses 1, log-log interpolated between swept radii"""
    points = sorted({(r["radius_cm"], r["delta_x_G_over_R"]) for r in rows
                     if r["radius_cm"] > 0.0 and math.isfinite(r["delta_x_G_over_R"])})
    for (r1, q1), (r2, q2) in zip(points, points[1:]):
        if (q1 - 1.0) * (q2 - 1.0) <= 0.0 and q1 != q2:
            slope = (math.log(q2) - math.log(q1)) / (math.log(r2) - math.log(r1))
            return math.exp(math.log(r1) - math.log(q1) / slope)
    return None


def run_point_limit_sweep(cfg: "ScenarioConfig") -> ScenarioReport:
    """Point-mass limit: softened-kernel soliton width against the decoherence rate.

    Softenings are multiples of R. As they shrink the soliton stays finite
    while 1/t_G at the configured separation grows without bound. Each grid
    spans POINT_GRID_WIDTHS times the larger of the harmonic width and the
    unsoftened scale hbar^2 / G M^3.
    """
    setup = prepare(cfg)
    ball = setup.internal
    if ball.pointlike:
        raise ZeroRadius("Softenings are given in units of R; the point-limit sweep needs R > 0")
    rows = []
    for factor in cfg.softenings:
        eps = factor * ball.radius
        report = decoherence_time(ball, cfg.separation, softening=eps, profile=POINT_PROFILE,
                                  time_unit=setup.time_unit)
        row = {"softening_over_R": factor, "softening": eps, "t_G": report.t_G,
               "rate": report.rate, "singular": report.singular}
        if eps > 0.0 and ball.G > 0.0:
            omega = math.sqrt(ball.G * ball.mass / eps ** 3)
            sigma = math.sqrt(soliton_variance(omega, ball.mass, ball.hbar))
            scale = max(sigma, ball.hbar ** 2 / (ball.G * ball.mass ** 3))
            grid = make_grid(cfg.grid_points, POINT_GRID_WIDTHS * scale, cfg.padding)
            kernel = build_grid_kernel(ball, grid, POINT_PROFILE, eps)
            start = gaussian_packet(grid, 0.0, max(sigma, 4.0 * grid.spacing))
            soliton = ground_state_sne(kernel, tol=cfg.tolerance, max_iterations=cfg.max_iterations,
                                       initial=start)
            row["soliton_width"] = soliton.width
            row["harmonic_estimate"] = sigma
        else:
            row["soliton_width"] = math.nan
            row["harmonic_estimate"] = math.nan
        rows.append(row)
        logger.info(f"eps={factor:g} R: width={row['soliton_width']:.4g}, 1/t_G={report.rate:.4g}")
    finite = [r for r in rows if math.isfinite(r["soliton_width"])]
    metrics = {
        "rows": len(rows),
        "singular_rows": sum(1 for r in rows if r["singular"]),
        "rate_growth": rows[-1]["rate"] / rows[0]["rate"] if rows and rows[0]["rate"] > 0 else None,
        "min_soliton_width": min((r["soliton_width"] for r in finite), default=None),
    }
    return ScenarioReport.create(cfg, metrics, tables={"point_limit": rows}, details=setup.describe())


# ---------------------------------------------------------------------------
# Deterministic equations


def run_sne_ground(cfg: "ScenarioConfig") -> ScenarioReport:
    setup = prepare(cfg)
    width = setup.default_width()
    grid = scenario_grid(cfg, 0.0, width)
    kernel = scenario_kernel(setup, grid)
    soliton = ground_state_sne(kernel, tol=cfg.tolerance, max_iterations=cfg.max_iterations,
                               initial=gaussian_packet(grid, 0.0, width * cfg.initial_width_factor))
    metrics = {"width": soliton.width, "energy": soliton.energy, "iterations": soliton.iterations}
    if setup.omega is not None:
        sigma2 = soliton_variance(setup.omega, setup.internal.mass, setup.internal.hbar)
        metrics["var_over_soliton_variance"] = soliton.variance / sigma2
        metrics["width_over_delta_x_G"] = soliton.width / math.sqrt(2.0 * sigma2)
    if setup.units:
        metrics["width_cm"] = soliton.width * setup.length_unit
    return ScenarioReport.create(cfg, metrics, snapshots={"ground_state": (soliton.wave, 0.0)},
                                 details=setup.describe())


def _evolution_config(cfg: "ScenarioConfig", dt: float) -> EvolutionConfig:
    return EvolutionConfig(dt=dt, steps=cfg.steps, record_stride=cfg.record_stride)


def run_sne_evolve(cfg: "ScenarioConfig") -> ScenarioReport:
    setup = prepare(cfg)
    width = setup.default_width() * cfg.initial_width_factor
    grid = scenario_grid(cfg, 0.0, width)
    kernel = scenario_kernel(setup, grid)
    psi = _initial_packet(setup, grid)
    trajectory = evolve_sne(psi, kernel, _evolution_config(cfg, _deterministic_dt(setup, kernel)))
    energy = trajectory.series("energy")
    norm = trajectory.series("norm")
    var = trajectory.series("var_x")
    metrics = {
        "norm_drift": float(np.max(np.abs(norm - norm[0]))),
        "energy_drift": float(np.max(np.abs(energy - energy[0])) / max(abs(energy[0]), 1e-300)),
        "var_x_min": float(np.min(var)),
        "var_x_max": float(np.max(var)),
    }
    return ScenarioReport.create(cfg, metrics, tables={"sne_series": trajectory.rows()},
                                 snapshots={"final_state": (trajectory.final, trajectory.times[-1])},
                                 details=setup.describe())


def run_frsne_relax(cfg: "ScenarioConfig") -> ScenarioReport:
    setup = prepare(cfg)
    width = setup.default_width() * cfg.initial_width_factor
    grid = scenario_grid(cfg, 0.0, width)
    kernel = scenario_kernel(setup, grid)
    psi = _initial_packet(setup, grid)
    trajectory = evolve_frsne(psi, kernel, _evolution_config(cfg, _deterministic_dt(setup, kernel)))
    norm = trajectory.series("norm")
    var = trajectory.series("var_x")
    metrics = {"norm_drift": float(np.max(np.abs(norm - norm[0]))), "final_var_x": float(var[-1])}
    if setup.omega is not None:
        target = pointer_variance(setup.omega, setup.internal.mass, setup.internal.hbar)
        metrics["final_var_over_pointer"] = float(var[-1]) / target
    return ScenarioReport.create(cfg, metrics, tables={"frsne_series": trajectory.rows()},
                                 snapshots={"final_state": (trajectory.final, trajectory.times[-1])},
                                 details=setup.describe())


def run_pointer_relaxation(cfg: "ScenarioConfig") -> ScenarioReport:
    """frSNE relaxation from an off-width packet next to the SNE run from the same start"""
    setup = prepare(cfg)
    width = setup.default_width() * cfg.initial_width_factor
    grid = scenario_grid(cfg, 0.0, max(width, setup.default_width()))
    kernel = scenario_kernel(setup, grid)
    psi = _initial_packet(setup, grid)
    evolution = _evolution_config(cfg, _deterministic_dt(setup, kernel))
    frictional = evolve_frsne(psi, kernel, evolution)
    reversible = evolve_sne(psi, kernel, evolution)

    times = frictional.series("t")
    var = frictional.series("var_x")
    sne_var = reversible.series("var_x")
    metrics = {
        "final_var_x": float(var[-1]),
        "relaxation_time": _relaxation_time(times, var, float(var[-1])),
        "sne_var_range": float(np.max(sne_var) - np.min(sne_var)),
        "sne_var_final": float(sne_var[-1]),
        "frsne_var_range_last_fifth": float(np.ptp(var[-max(1, len(var) // 5):])),
    }
    if setup.omega is not None:
        metrics["final_var_over_pointer"] = float(var[-1]) / pointer_variance(
            setup.omega, setup.internal.mass, setup.internal.hbar)
        metrics["sne_ground_width"] = math.sqrt(soliton_variance(
            setup.omega, setup.internal.mass, setup.internal.hbar))
    rows = [dict(row, sne_var_x=s) for row, s in zip(frictional.rows(), sne_var)]
    return ScenarioReport.create(cfg, metrics, tables={"pointer_relaxation": rows},
                                 snapshots={"pointer_state": (frictional.final, float(times[-1]))},
                                 details=setup.describe())


def run_vnne(cfg: "ScenarioConfig") -> ScenarioReport:
    """Master-equation decoherence of a cat state; measures the off-diagonal decay rate"""
    setup = prepare(cfg)
    width = setup.default_width()
    grid = scenario_grid(cfg, cfg.separation, width)
    kernel = scenario_kernel(setup, grid)
    cat = _build_cat(grid, cfg.separation, width)
    t_G = _separation_t_G(setup, cfg.separation)
    dt = cfg.dt or t_G / VNNE_STEPS_PER_T_G
    i = grid.index_of(-0.5 * cfg.separation)
    j = grid.index_of(0.5 * cfg.separation)

    def coherence_probe(state) -> Dict[str, float]:
        rho = state.rho
        return {"coherence": abs(rho[i, j]) / math.sqrt(abs(rho[i, i] * rho[j, j]))}

    evolution = EvolutionConfig(dt=dt, steps=cfg.steps, record_stride=cfg.record_stride,
                                probe=coherence_probe)
    trajectory = evolve_vnne(pure_density(cat), kernel, evolution)

    coherence = trajectory.series("coherence")
    times = trajectory.series("t")
    rows = trajectory.rows()
    positive = coherence > 0.0
    fit = stats.linregress(times[positive], np.log(coherence[positive]))
    metrics = {
        "t_G": t_G,
        "decay_rate": -float(fit.slope),
        "decay_rate_over_expected": -float(fit.slope) * t_G,
        "trace_drift": float(np.max(np.abs(trajectory.series("norm") - 1.0))),
        "final_purity": float(trajectory.series("purity")[-1]),
    }
    return ScenarioReport.create(cfg, metrics, tables={"vnne_series": rows}, details=setup.describe())


# ---------------------------------------------------------------------------
# Stochastic ensembles


def run_unravel_ensemble(cfg: "ScenarioConfig") -> ScenarioReport:
    """Ensemble means of the stochastic master and/or wave equations against the vNNE solution"""
    setup = prepare(cfg)
    width = setup.default_width()
    grid = scenario_grid(cfg, cfg.separation, width)
    kernel = scenario_kernel(setup, grid)
    cat = _build_cat(grid, cfg.separation, width)
    t_G = _separation_t_G(setup, cfg.separation)
    dt = cfg.dt or t_G / VNNE_STEPS_PER_T_G
    evolution = EvolutionConfig(dt=dt, steps=cfg.steps, record_stride=cfg.record_stride)
    reference = evolve_vnne(pure_density(cat), kernel, evolution).final.rho
    noise = NoiseModel.build(kernel, cfg.seed, scale=cfg.noise_scale)
    runner = EnsembleRunner(workers=cfg.workers, progress=cfg.progress)

    equations = ("wave", "master") if cfg.unravel_equation == "both" else (cfg.unravel_equation,)
    consistency: Dict[str, Dict] = {}
    details: Dict[str, Dict] = {"setup": setup.describe()}
    tables: Dict[str, List[Dict]] = {}
    quiet = EvolutionConfig(dt=dt, steps=cfg.steps, record_stride=cfg.record_stride,
                            monitor_positivity=False)
    for equation in equations:
        if equation == "wave":
            def task(index: int) -> TrajectoryRecord:
                return evolve_stochastic_wave(cat, kernel, noise, quiet, index=index,
                                              watch=CollapseWatch(0.0, cfg.collapse_threshold))
        else:
            start = pure_density(cat)

            def task(index: int) -> TrajectoryRecord:
                return evolve_stochastic_master(start, kernel, noise, quiet, index=index,
                                                watch=CollapseWatch(0.0, cfg.collapse_threshold))
        runner.description = f"{equation} trajectories"
        records = runner.run(task, cfg.ensemble_size)
        mean = ensemble_density_mean([r.final for r in records])
        result = mean.consistency(reference)
        if cfg.ensemble_size >= 2 * ERROR_SCALING_PARTS:
            result["error_scaling"] = error_scaling([r.final for r in records], reference)
            logger.info(f"{equation}: N/{ERROR_SCALING_PARTS} to N standard error ratio "
                        f"{result['error_scaling']['stderr_ratio']:.3g}")
        consistency[equation] = result
        _, variance, _ = centroid_variance_series(records)
        details[equation] = {
            **collapse_statistics(records, t_G),
            "mean_var_x_series": mean_series(records, "var_x").tolist(),
            "centroid_variance_series": variance.tolist(),
        }
        tables[f"{equation}_trajectories"] = [r.summary() for r in records]
        logger.info(f"{equation}: {100 * result['fraction_within']:.1f}% of entries within 3 SE")
    metrics = {"t_G": t_G, "n_traj": cfg.ensemble_size, "consistency": consistency}
    return ScenarioReport.create(cfg, metrics, tables=tables, details=details)


def _collapse_trajectory(cat: WaveFunction, kernel: KernelTable, noise: NoiseModel, cfg: "ScenarioConfig",
                         dt: float, max_steps: int, index: int) -> TrajectoryRecord:
    """Collapse phase at dt, purge of the minority branch at dt, then relaxation at relax_dt.

    The relaxation step is only stable once the losing branch has dropped out of
    the stability support, so trajectories that do not purge within the step
    budget end after the purge phase. The surviving packet is moved to the
    origin before relaxing; widths do not depend on where it sits.
    """
    stream = noise.stream(index)

    def phase(start: WaveFunction, step: float, steps: int, threshold: Optional[float], t0: float):
        evolution = EvolutionConfig(dt=step, steps=steps, record_stride=cfg.record_stride,
                                    monitor_positivity=False)
        watch = CollapseWatch(0.0, threshold) if threshold else None
        return evolve_stochastic_wave(start, kernel, noise, evolution, stream=stream, watch=watch,
                                      stop_on_collapse=watch is not None, t0=t0)

    record = phase(cat, dt, max_steps, cfg.collapse_threshold, 0.0)
    if record.collapse_time is None:
        return record
    if max(window_norms(record.final)) < PURGE_THRESHOLD:
        remaining = max_steps - record.steps
        if remaining <= 0:
            return record
        record.phases["purge"] = record.times[-1]
        purge = phase(record.final, dt, remaining, PURGE_THRESHOLD, record.times[-1])
        purged = purge.collapse_time is not None
        purge.collapse_time, purge.branch = None, None
        record.extend(purge)
        if not purged:
            logger.debug(f"Trajectory {index}: minority branch not purged within the step budget")
            return record
    record.phases["relax"] = record.times[-1]
    centred = translate(record.final, -compute_moments(record.final).mean_x)
    record.extend(phase(centred, cfg.relax_dt, cfg.relax_steps, None, record.times[-1]))
    return record


def run_cat_collapse(cfg: "ScenarioConfig") -> ScenarioReport:
    """Balanced cat state under the stochastic frSNE: collapse statistics and post-collapse width"""
    setup = prepare(cfg)
    width = setup.default_width()
    separation = cfg.separation
    grid = scenario_grid(cfg, separation, width)
    kernel = scenario_kernel(setup, grid)
    cat = _build_cat(grid, separation, width, MIN_CAT_SEPARATION)
    t_G = _separation_t_G(setup, separation)
    if not (math.isfinite(t_G) and t_G > 0.0):
        raise BadDimensions(f"Cat collapse needs a finite positive t_G, got {t_G}")
    dt = cfg.dt or t_G / COLLAPSE_STEPS_PER_T_G
    max_steps = int(math.ceil(cfg.max_collapse_time_factor * t_G / dt))
    noise = NoiseModel.build(kernel, cfg.seed, scale=cfg.noise_scale)
    logger.info(f"Cat collapse: d={separation:g}, width={width:.4g}, t_G={t_G:.4g}, dt={dt:.4g}, "
                f"N={cfg.ensemble_size}, grid n={grid.n} L={grid.length:.4g}")

    runner = EnsembleRunner(workers=cfg.workers, progress=cfg.progress, description="cat trajectories")
    records = runner.run(lambda i: _collapse_trajectory(cat, kernel, noise, cfg, dt, max_steps, i),
                         cfg.ensemble_size)

    summary = collapse_statistics(records, t_G)
    low, high = cfg.collapse_band
    metrics: Dict = {
        "t_G": t_G,
        "t_G_s": t_G * setup.time_unit,
        "n_traj": len(records),
        "collapsed_fraction": summary["collapsed_fraction"],
        "branch_counts": summary["branch_counts"],
    }
    if "median_collapse_time" in summary:
        ratio = summary["median_over_t_G"]
        metrics.update({
            "median_collapse_time": summary["median_collapse_time"],
            "median_collapse_over_t_G": ratio,
            "median_in_band": bool(low <= ratio <= high),
            "branch_z_score": summary["branch_z_score"],
            "collapse_time_quantiles": summary["collapse_time_quantiles"],
        })
    relaxed = [_relaxed_variance(r) for r in records if r.collapse_time is not None]
    relaxed = [v for v in relaxed if v is not None]
    if relaxed and setup.omega is not None:
        final_var = float(np.mean(relaxed))
        metrics["final_var_x"] = final_var
        metrics["final_var_over_pointer"] = final_var / stochastic_pointer_variance(
            setup.omega, setup.internal.mass, setup.internal.hbar)
        metrics["final_var_over_frsne_pointer"] = final_var / pointer_variance(
            setup.omega, setup.internal.mass, setup.internal.hbar)

    details: Dict = {"setup": setup.describe(), "ensemble": summary}
    if setup.omega is not None:
        details["variance_references"] = _variance_references(setup)

    tables = {"cat_trajectories": [r.summary() for r in records]}
    if records:
        tables["trajectory_0000"] = records[0].rows()
    snapshots = {"final_state_0000": (records[0].final, records[0].times[-1])} if records else {}
    return ScenarioReport.create(cfg, metrics, tables=tables, snapshots=snapshots,
                                 details=details)


def _variance_references(setup: Setup) -> Dict[str, Dict]:
    """What the two post-collapse variance ratios are measured against.

    Under the Itô reading the noisy quadratic equation settles on the
    exp(-(1 - i) x^2 / 4 sigma^2) packet with variance hbar / (2 M omega), not
    on the noiseless frSNE pointer state, whose variance is sqrt(2) times larger.
    """
    mass, hbar = setup.internal.mass, setup.internal.hbar
    return {
        "final_var_over_pointer": {
            "variance": stochastic_pointer_variance(setup.omega, mass, hbar),
            "state": "steady Gaussian of the noisy equation, width factor 1 - i",
        },
        "final_var_over_frsne_pointer": {
            "variance": pointer_variance(setup.omega, mass, hbar),
            "state": "noiseless frSNE pointer state, width factor sqrt(-i)",
        },
    }


def _relaxed_variance(record: TrajectoryRecord) -> Optional[float]:
    """Tail mean of var_x over the relaxation phase"""
    if "relax" not in record.phases:
        return None
    times = np.asarray(record.times)
    mask = times >= record.phases["relax"]
    return _tail_mean(record.series("var_x")[mask]) if np.any(mask) else None


SCENARIO_RUNNERS: Dict[str, Callable[["ScenarioConfig"], ScenarioReport]] = {
    "cat-collapse": run_cat_collapse,
    "pointer-relax": run_pointer_relaxation,
    "tg-sweep": run_tg_sweep,
    "kernel-dump": run_kernel_dump,
    "unravel-ensemble": run_unravel_ensemble,
    "sne-evolve": run_sne_evolve,
    "sne-ground": run_sne_ground,
    "frsne-relax": run_frsne_relax,
    "vnne": run_vnne,
    "units": run_units,
    "point-limit": run_point_limit_sweep,
}


def run_scenario(cfg: "ScenarioConfig") -> ScenarioReport:
    try:
        runner = SCENARIO_RUNNERS[cfg.scenario]
    except KeyError:
        raise BadDimensions(f"Unknown scenario '{cfg.scenario}'") from None
    logger.info(f"Starting scenario {cfg.scenario} (config {cfg.config_hash[:12]}, seed {cfg.seed})")
    report = runner(cfg)
    logger.info(report.summary)
    return report
