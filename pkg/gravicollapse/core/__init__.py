"""
Core package - kernels, grids and the deterministic and stochastic solvers
"""

from .errors import (
    GraviCollapseError,
    ConfigError,
    ParseError,
    ExportError,
    NumericalError,
    ZeroRadius,
    NegativeSeparation,
    BadDimensions,
    UnresolvedWidth,
    UnsoftenedPointKernel,
    StabilityViolation,
    NormDrift,
    NoConvergence,
    NotPositiveSemidefinite,
    UnresolvedCat,
    PositivityLoss,
)
from .units import PhysicalConstants, UnitSystem, make_unit_system, physical_scales
from .kernel import BallSpec, KernelTable, build_grid_kernel, pair_potential, potential, self_energy
from .grid import GridSpec, WaveFunction, DensityMatrix, Moments, make_grid, gaussian_packet, cat_state
from .decoherence import DecoherenceReport, decoherence_time, decoherence_times
from .deterministic import (
    EvolutionConfig,
    Trajectory,
    PointerState,
    evolve_sne,
    ground_state_sne,
    evolve_frsne,
    pointer_state_frsne,
    evolve_vnne,
)
from .noise import NoiseModel, NoiseStream, sample_noise
from .stochastic import (
    CollapseWatch,
    TrajectoryRecord,
    evolve_stochastic_wave,
    evolve_stochastic_master,
    evolve_quadratic_stochastic,
)
from .ensemble import EnsembleRunner, EnsembleMean, ensemble_density_mean, error_scaling, collapse_statistics
from .reports import ScenarioReport
from .scenarios import SCENARIO_RUNNERS, run_scenario

__all__ = [
    # Errors
    'GraviCollapseError',
    'ConfigError',
    'ParseError',
    'ExportError',
    'NumericalError',
    'ZeroRadius',
    'NegativeSeparation',
    'BadDimensions',
    'UnresolvedWidth',
    'UnsoftenedPointKernel',
    'StabilityViolation',
    'NormDrift',
    'NoConvergence',
    'NotPositiveSemidefinite',
    'UnresolvedCat',
    'PositivityLoss',
    # Units and kernels
    'PhysicalConstants',
    'UnitSystem',
    'make_unit_system',
    'physical_scales',
    'BallSpec',
    'KernelTable',
    'build_grid_kernel',
    'pair_potential',
    'potential',
    'self_energy',
    # Grid and states
    'GridSpec',
    'WaveFunction',
    'DensityMatrix',
    'Moments',
    'make_grid',
    'gaussian_packet',
    'cat_state',
    # Decoherence
    'DecoherenceReport',
    'decoherence_time',
    'decoherence_times',
    # Solvers
    'EvolutionConfig',
    'Trajectory',
    'PointerState',
    'evolve_sne',
    'ground_state_sne',
    'evolve_frsne',
    'pointer_state_frsne',
    'evolve_vnne',
    'NoiseModel',
    'NoiseStream',
    'sample_noise',
    'CollapseWatch',
    'TrajectoryRecord',
    'evolve_stochastic_wave',
    'evolve_stochastic_master',
    'evolve_quadratic_stochastic',
    # Ensembles and scenarios
    'EnsembleRunner',
    'EnsembleMean',
    'ensemble_density_mean',
    'error_scaling',
    'collapse_statistics',
    'ScenarioReport',
    'SCENARIO_RUNNERS',
    'run_scenario',
]
