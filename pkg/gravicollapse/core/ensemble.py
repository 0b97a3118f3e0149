"""
Ensemble runner and reductions over stochastic trajectories

Trajectories are independent tasks sharing only read-only data (grid, kernel,
noise factor). Results are merged in trajectory-index order whatever order the
workers finish in, so an ensemble is a pure function of (config, seed).
"""
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from .errors import BadDimensions
from .grid import DensityMatrix, WaveFunction, pure_density
from .stochastic import LEFT, RIGHT, TrajectoryRecord

logger = logging.getLogger(__name__)

CONSISTENCY_SIGMAS = 3.0
CONSISTENCY_FRACTION = 0.95
CONSISTENCY_FLOOR = 1e-12        # relative to max|reference|; entries below it count as agreeing
COLLAPSE_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
ERROR_SCALING_PARTS = 4         # N/4 against N: Monte Carlo error ratio near 2


class EnsembleRunner:
    """Runs ``task(index)`` for index = 0..count-1 on a thread pool"""

    def __init__(self, workers: int = 1, progress: bool = False, description: str = "trajectories"):
        if workers < 1:
            raise BadDimensions(f"Worker count must be >= 1, got {workers}")
        self.workers = workers
        self.progress = progress
        self.description = description
        self.progress_callbacks: List[Callable[[int, int], None]] = []
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()
        self._done = 0

    def add_progress_callback(self, callback: Callable[[int, int], None]):
        """Add callback called with (completed, total) after every trajectory"""
        self.progress_callbacks.append(callback)

    def _notify_progress(self, completed: int, total: int):
        for callback in self.progress_callbacks:
            try:
                callback(completed, total)
            except Exception as e:
                self.logger.error(f"Progress callback error: {e}")

    def run(self, task: Callable[[int], TrajectoryRecord], count: int) -> List[TrajectoryRecord]:
        """Results ordered by trajectory index"""
        self._done = 0
        bar = tqdm(total=count, desc=self.description, disable=not self.progress)

        def tracked(index: int) -> TrajectoryRecord:
            result = task(index)
            with self._lock:
                self._done += 1
                completed = self._done
                bar.update(1)
            self._notify_progress(completed, count)
            return result

        self.logger.info(f"Running {count} {self.description} on {self.workers} worker(s)")
        try:
            if self.workers == 1:
                results = [tracked(i) for i in range(count)]
            else:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    results = list(pool.map(tracked, range(count)))
        finally:
            bar.close()
        return results


@dataclass
class EnsembleMean:
    """Entrywise ensemble mean of density matrices with standard errors"""

    mean: np.ndarray
    stderr_real: np.ndarray
    stderr_imag: np.ndarray
    count: int

    def consistency(self, reference: np.ndarray, sigmas: float = CONSISTENCY_SIGMAS) -> Dict[str, float]:
        """Fraction of entries within ``sigmas`` standard errors of ``reference`` and the RMS residual"""
        diff = self.mean - reference
        floor = CONSISTENCY_FLOOR * float(np.max(np.abs(reference)))
        ok_real = np.abs(diff.real) <= sigmas * self.stderr_real + floor
        ok_imag = np.abs(diff.imag) <= sigmas * self.stderr_imag + floor
        return {
            "fraction_within": float(np.mean(ok_real & ok_imag)),
            "rms_residual": float(np.sqrt(np.mean(np.abs(diff) ** 2))),
            "max_residual": float(np.max(np.abs(diff))),
            "count": self.count,
        }


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, WaveFunction):
        return pure_density(state.normalized()).rho
    if isinstance(state, DensityMatrix):
        return state.rho / state.trace()
    raise BadDimensions(f"Cannot average states of type {type(state).__name__}")


def ensemble_density_mean(states: Sequence) -> EnsembleMean:
    """Mean of |psi><psi| (or rho) over an ensemble, with entrywise standard errors"""
    if len(states) < 2:
        raise BadDimensions("An ensemble mean needs at least two members")
    first = _as_matrix(states[0])
    total = np.zeros_like(first)
    square_real = np.zeros(first.shape)
    square_imag = np.zeros(first.shape)
    for state in states:
        m = _as_matrix(state)
        total += m
        square_real += m.real ** 2
        square_imag += m.imag ** 2
    n = len(states)
    mean = total / n
    var_real = np.clip((square_real - n * mean.real ** 2) / (n - 1), 0.0, None)
    var_imag = np.clip((square_imag - n * mean.imag ** 2) / (n - 1), 0.0, None)
    return EnsembleMean(mean=mean, stderr_real=np.sqrt(var_real / n),
                        stderr_imag=np.sqrt(var_imag / n), count=n)


def residual_ratio(small: EnsembleMean, large: EnsembleMean, reference: np.ndarray) -> float:
    """RMS residual of the smaller ensemble over that of the larger one"""
    return small.consistency(reference)["rms_residual"] / large.consistency(reference)["rms_residual"]


def _rms_stderr(mean: EnsembleMean) -> float:
    return float(np.sqrt(np.mean(mean.stderr_real ** 2 + mean.stderr_imag ** 2)))


def error_scaling(states: Sequence, reference: np.ndarray, parts: int = ERROR_SCALING_PARTS) -> Dict[str, float]:
    """Monte Carlo error of ``parts`` disjoint sub-ensembles against the whole ensemble.

    Under N^(-1/2) convergence both ratios sit near sqrt(parts). The residual
    ratio rests on a few collective modes of the ensemble and scatters more.
    """
    size = len(states) // parts
    if parts < 2 or size < 2:
        raise BadDimensions(f"Cannot split {len(states)} states into {parts} sub-ensembles of two or more")
    whole = ensemble_density_mean(states)
    subsets = [ensemble_density_mean(states[k * size:(k + 1) * size]) for k in range(parts)]
    subset_residual = math.sqrt(np.mean([m.consistency(reference)["rms_residual"] ** 2 for m in subsets]))
    subset_stderr = math.sqrt(np.mean([_rms_stderr(m) ** 2 for m in subsets]))
    residual = whole.consistency(reference)["rms_residual"]
    stderr = _rms_stderr(whole)
    return {
        "subset_size": size,
        "subset_rms_residual": subset_residual,
        "subset_rms_stderr": subset_stderr,
        "rms_stderr": stderr,
        "residual_ratio": subset_residual / residual if residual > 0.0 else math.inf,
        "stderr_ratio": subset_stderr / stderr if stderr > 0.0 else math.inf,
    }


def collapse_statistics(records: Sequence[TrajectoryRecord], t_G: Optional[float] = None) -> Dict:
    """Collapse-time quantiles, branch counts and the binomial balance of the outcomes"""
    times = np.asarray([r.collapse_time for r in records if r.collapse_time is not None])
    counts = {LEFT: 0, RIGHT: 0}
    for r in records:
        if r.branch in counts:
            counts[r.branch] += 1
    collapsed = int(times.size)
    summary: Dict = {
        "n_traj": len(records),
        "collapsed": collapsed,
        "collapsed_fraction": collapsed / len(records) if records else 0.0,
        "branch_counts": counts,
    }
    if collapsed:
        summary["collapse_time_quantiles"] = {
            f"q{int(q * 100):02d}": float(np.quantile(times, q)) for q in COLLAPSE_QUANTILES}
        summary["median_collapse_time"] = float(np.median(times))
        if t_G is not None and t_G > 0.0:
            summary["median_over_t_G"] = summary["median_collapse_time"] / t_G
        sigma = math.sqrt(collapsed * 0.25)
        summary["branch_z_score"] = (counts[LEFT] - 0.5 * collapsed) / sigma
    if collapsed < len(records):
        logger.warning(f"{len(records) - collapsed} of {len(records)} trajectories did not collapse")
    return summary


def centroid_variance_series(records: Sequence[TrajectoryRecord]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Times, ensemble variance of <x> and its standard error on the common record grid"""
    length = min(len(r.times) for r in records)
    times = np.asarray(records[0].times[:length])
    centres = np.asarray([[m.mean_x for m in r.moments[:length]] for r in records])
    n = centres.shape[0]
    variance = np.var(centres, axis=0, ddof=1)
    return times, variance, variance * math.sqrt(2.0 / (n - 1))


def mean_series(records: Sequence[TrajectoryRecord], name: str) -> np.ndarray:
    length = min(len(r.times) for r in records)
    return np.mean([r.series(name)[:length] for r in records], axis=0)


def diffusion_fit(times: np.ndarray, variance: np.ndarray,
                  window: Optional[Tuple[float, float]] = None) -> Dict[str, float]:
    """Linear fit Var[<x>](t) = 2 D t + c over ``window``"""
    times = np.asarray(times)
    variance = np.asarray(variance)
    mask = np.ones_like(times, dtype=bool)
    if window is not None:
        mask = (times >= window[0]) & (times <= window[1])
    if np.count_nonzero(mask) < 3:
        raise BadDimensions("Diffusion fit needs at least three points in the window")
    fit = stats.linregress(times[mask], variance[mask])
    return {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r_squared": float(fit.rvalue ** 2),
        "diffusion": 0.5 * float(fit.slope),
        "points": int(np.count_nonzero(mask)),
    }
