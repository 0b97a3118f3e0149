"""
Gravity-related decoherence time t_G(d) = hbar / (U(d) - U(0))
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional

from .errors import ZeroRadius
from .kernel import BALL_PROFILE, POINT_PROFILE, BallSpec, potential_excess

logger = logging.getLogger(__name__)

ATOMIC = "atomic"
NANO = "nano"
MACRO = "macro"

# Regime thresholds on t_G in seconds
ATOMIC_THRESHOLD = 1.0
NANO_THRESHOLD = 1e-3


def classify_regime(t_seconds: float) -> str:
    """Informational label only; nothing downstream branches on it"""
    if t_seconds >= ATOMIC_THRESHOLD:
        return ATOMIC
    if t_seconds >= NANO_THRESHOLD:
        return NANO
    return MACRO


@dataclass(frozen=True)
class DecoherenceReport:
    separation: float
    t_G: float
    rate: float
    regime: str
    singular: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def decoherence_time(ball: BallSpec, d: float, softening: Optional[float] = None,
                     profile: str = BALL_PROFILE, time_unit: float = 1.0) -> DecoherenceReport:
    """Decoherence time of a superposition of two packets whose centres are ``d`` apart.

    Degenerate inputs come back as sentinels: d = 0 gives t_G = inf (nothing to
    decohere) and an unsoftened point mass gives t_G = 0 with ``singular`` set.
    ``time_unit`` converts t_G to seconds for the regime label.
    """
    d = float(d)
    hbar = ball.hbar
    if d == 0.0:
        return DecoherenceReport(separation=d, t_G=math.inf, rate=0.0,
                                 regime=classify_regime(math.inf))

    pointlike = profile == POINT_PROFILE or ball.pointlike
    eps = ball.radius if softening is None else float(softening)
    if pointlike and eps == 0.0 and ball.G > 0.0:
        logger.debug(f"Unsoftened point mass at d={d:g}: t_G = 0")
        return DecoherenceReport(separation=d, t_G=0.0, rate=math.inf, regime=MACRO, singular=True)

    excess = float(potential_excess(ball, d, profile, softening))
    if excess <= 0.0:
        return DecoherenceReport(separation=d, t_G=math.inf, rate=0.0,
                                 regime=classify_regime(math.inf))
    t_G = hbar / excess
    return DecoherenceReport(separation=d, t_G=t_G, rate=excess / hbar,
                             regime=classify_regime(t_G * time_unit))


def decoherence_times(ball: BallSpec, separations: Iterable[float], **kwargs) -> List[DecoherenceReport]:
    return [decoherence_time(ball, d, **kwargs) for d in separations]


def distant_estimate(ball: BallSpec) -> float:
    """Order-of-magnitude t_G ~ hbar R / G M^2 for well separated packets"""
    if ball.pointlike:
        raise ZeroRadius("The distant estimate needs R > 0")
    if ball.G == 0.0:
        return math.inf
    return ball.hbar * ball.radius / (ball.G * ball.mass ** 2)
