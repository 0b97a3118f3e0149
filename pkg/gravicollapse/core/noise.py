"""
Spatially correlated white noise W_t(x) with M[W_t(x) W_t'(x')] = -hbar U(x - x') delta(t - t')

One realisation of the discretised field is F z / sqrt(dt) with z i.i.d.
standard normals and F F^T = C, C_ij = -hbar U(x_i - x_j). F comes from the
symmetric eigendecomposition of C; tiny negative eigenvalues produced by
round-off are clipped. Every trajectory draws from its own counter-based
Philox stream keyed by (master seed, trajectory index), so ensembles are
reproducible regardless of the order in which trajectories execute.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import linalg

from .errors import BadDimensions, NotPositiveSemidefinite
from .kernel import KernelTable

logger = logging.getLogger(__name__)

CLIP_TOLERANCE = 1e-10


@dataclass
class NoiseFieldSample:
    """One time-step draw.

    ``increment`` is the integrated noise W dt (field mode) or the Wiener
    increment dB (scalar mode).
    """

    increment: Union[np.ndarray, float]
    dt: float
    counter: int

    @property
    def field(self) -> Union[np.ndarray, float]:
        """W = increment / dt"""
        return self.increment / self.dt


class NoiseModel:
    """Covariance factor of the noise field, or the scalar white-noise mode"""

    def __init__(self, factor: Optional[np.ndarray], seed: int, scale: float = 1.0,
                 hbar: float = 1.0, eigenvalues: Optional[np.ndarray] = None,
                 clipped: float = 0.0):
        if scale < 0.0:
            raise BadDimensions(f"Noise scale must be non-negative, got {scale}")
        self.factor = factor
        self.seed = int(seed)
        self.scale = float(scale)
        self.hbar = hbar
        self.eigenvalues = eigenvalues
        self.clipped = clipped
        if factor is not None:
            factor.setflags(write=False)

    @property
    def is_scalar(self) -> bool:
        return self.factor is None

    @property
    def size(self) -> int:
        return 1 if self.factor is None else self.factor.shape[0]

    @classmethod
    def build(cls, kernel: KernelTable, seed: int, scale: float = 1.0,
              tolerance: float = CLIP_TOLERANCE) -> "NoiseModel":
        """Factorise C = -hbar U on the kernel's grid.

        Raises NotPositiveSemidefinite when the most negative eigenvalue is
        below -tolerance * max eigenvalue; the kernel is then not a valid
        covariance (the pure quadratic profile, for example).
        """
        covariance = -kernel.hbar * kernel.matrix()
        eigenvalues, vectors = linalg.eigh(covariance)
        top = float(eigenvalues[-1])
        lowest = float(eigenvalues[0])
        if top <= 0.0:
            if top == 0.0 and lowest == 0.0:
                # G = 0: the field vanishes identically
                return cls(np.zeros_like(covariance), seed, scale, kernel.hbar, eigenvalues, 0.0)
            raise NotPositiveSemidefinite("Noise covariance has no positive spectrum")
        if lowest < -tolerance * top:
            raise NotPositiveSemidefinite(
                f"Noise covariance eigenvalue {lowest:.3g} is below -{tolerance:g} x {top:.3g}")
        if lowest < 0.0:
            logger.debug(f"Clipping covariance eigenvalues down to {lowest:.3g} (max {top:.3g})")
        clipped = np.clip(eigenvalues, 0.0, None)
        factor = vectors * np.sqrt(clipped)[None, :]
        return cls(factor, seed, scale, kernel.hbar, eigenvalues, min(lowest, 0.0))

    @classmethod
    def scalar(cls, seed: int, scale: float = 1.0) -> "NoiseModel":
        """Scalar white noise w_t with M[w_t w_t'] = delta(t - t')"""
        return cls(None, seed, scale)

    def covariance(self) -> np.ndarray:
        """F F^T (scale not applied)"""
        if self.factor is None:
            return np.ones((1, 1))
        return self.factor @ self.factor.T

    def stream(self, index: int = 0) -> "NoiseStream":
        return NoiseStream(self, index)


class NoiseStream:
    """Deterministic sequence of draws for one trajectory"""

    def __init__(self, model: NoiseModel, index: int):
        self.model = model
        self.index = int(index)
        sequence = np.random.SeedSequence(model.seed, spawn_key=(self.index,))
        self.rng = np.random.Generator(np.random.Philox(sequence))
        self.counter = 0

    def draw(self, dt: float) -> NoiseFieldSample:
        if not dt > 0.0:
            raise BadDimensions(f"Noise needs dt > 0, got {dt}")
        model = self.model
        root = math.sqrt(dt)
        if model.is_scalar:
            increment = model.scale * root * float(self.rng.standard_normal())
        else:
            z = self.rng.standard_normal(model.factor.shape[1])
            increment = model.scale * root * (model.factor @ z)
        self.counter += 1
        return NoiseFieldSample(increment=increment, dt=dt, counter=self.counter)


def sample_noise(model: NoiseModel, dt: float, stream: NoiseStream) -> NoiseFieldSample:
    """Next draw W = F z / sqrt(dt) from ``stream``"""
    if stream.model is not model:
        raise BadDimensions("Noise stream belongs to a different model")
    return stream.draw(dt)
