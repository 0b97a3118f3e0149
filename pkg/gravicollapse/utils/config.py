"""
Configuration management for GraviCollapse

A scenario is configured by one flat JSON document. Parsing is strict: unknown
keys and wrongly typed values are errors that name the key and the line it is
on. Missing keys take the defaults below, and the full echo (defaults
included) is what gets hashed and embedded in every report.
"""
import hashlib
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from ..core.errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

SCENARIOS = (
    "cat-collapse",
    "pointer-relax",
    "tg-sweep",
    "kernel-dump",
    "unravel-ensemble",
    "sne-evolve",
    "sne-ground",
    "frsne-relax",
    "vnne",
    "units",
    "point-limit",
)
UNIT_MODES = ("harmonic", "ball", "none")
KERNEL_PROFILES = ("ball", "quadratic", "point")
UNRAVEL_EQUATIONS = ("wave", "master", "both")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# key -> (kind, nullable); kinds: str, int, float, bool, floats (list), band (pair)
SCHEMA: Dict[str, Tuple[str, bool]] = {
    "scenario": ("str", False),
    "unit_mode": ("str", False),
    "mass": ("float", True),
    "radius": ("float", False),
    "density": ("float", True),
    "G": ("float", True),
    "hbar": ("float", True),
    "kernel_profile": ("str", False),
    "softening": ("float", True),
    "grid_points": ("int", False),
    "domain_length": ("float", True),
    "padding": ("int", False),
    "dt": ("float", True),
    "steps": ("int", False),
    "record_stride": ("int", False),
    "separation": ("float", False),
    "packet_width": ("float", True),
    "initial_width_factor": ("float", False),
    "momentum": ("float", False),
    "ensemble_size": ("int", False),
    "seed": ("int", False),
    "workers": ("int", False),
    "collapse_threshold": ("float", False),
    "collapse_band": ("band", False),
    "max_collapse_time_factor": ("float", False),
    "relax_dt": ("float", False),
    "relax_steps": ("int", False),
    "noise_scale": ("float", False),
    "unravel_equation": ("str", False),
    "tolerance": ("float", False),
    "max_iterations": ("int", False),
    "sweep_radii": ("floats", False),
    "sweep_masses": ("floats", False),
    "sweep_density": ("float", False),
    "sweep_separations": ("floats", False),
    "softenings": ("floats", False),
    "output_dir": ("str", False),
    "log_level": ("str", False),
    "log_file": ("str", True),
    "progress": ("bool", False),
}

CHOICES = {
    "scenario": SCENARIOS,
    "unit_mode": UNIT_MODES,
    "kernel_profile": KERNEL_PROFILES,
    "unravel_equation": UNRAVEL_EQUATIONS,
    "log_level": LOG_LEVELS,
}

POSITIVE = ("initial_width_factor", "max_collapse_time_factor", "relax_dt",
            "tolerance", "sweep_density")
POSITIVE_OR_NULL = ("mass", "density", "domain_length", "dt", "packet_width")
AT_LEAST_ONE = ("record_stride", "ensemble_size", "workers", "max_iterations")
NON_NEGATIVE = ("radius", "separation", "noise_scale", "steps", "relax_steps", "G", "softening")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario configuration; sequences are stored as tuples"""

    scenario: str = "cat-collapse"
    unit_mode: str = "harmonic"
    mass: Optional[float] = None
    radius: float = 1e-3
    density: Optional[float] = 1.0
    G: Optional[float] = None
    hbar: Optional[float] = None
    kernel_profile: str = "ball"
    softening: Optional[float] = None
    grid_points: int = 512
    domain_length: Optional[float] = None
    padding: int = 2
    dt: Optional[float] = None
    steps: int = 1000
    record_stride: int = 10
    separation: float = 20.0
    packet_width: Optional[float] = None
    initial_width_factor: float = 1.0
    momentum: float = 0.0
    ensemble_size: int = 40
    seed: int = 12345
    workers: int = 1
    collapse_threshold: float = 0.99
    collapse_band: Tuple[float, float] = (0.2, 5.0)
    max_collapse_time_factor: float = 20.0
    relax_dt: float = 0.005
    relax_steps: int = 600
    noise_scale: float = 1.0
    unravel_equation: str = "both"
    tolerance: float = 1e-10
    max_iterations: int = 50000
    sweep_radii: Tuple[float, ...] = (1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 1e-2)
    sweep_masses: Tuple[float, ...] = ()
    sweep_density: float = 1.0
    sweep_separations: Tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 10.0, 100.0)
    softenings: Tuple[float, ...] = (1.0, 0.5, 0.25, 0.1, 0.05)
    output_dir: str = "results"
    log_level: str = "INFO"
    log_file: Optional[str] = None
    progress: bool = False

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    def to_json(self) -> str:
        """Full echo of the configuration, defaults included"""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Re-validated copy with some keys replaced (None values are ignored)"""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return config_from_dict(data)


DEFAULT_CONFIG: Dict[str, Any] = ScenarioConfig().to_dict()


def _line_of(text: str, key: str) -> Optional[int]:
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def _coerce(key: str, value: Any, line: Optional[int]) -> Any:
    kind, nullable = SCHEMA[key]
    if value is None:
        if nullable:
            return None
        raise ParseError("Value must not be null", key=key, line=line)
    is_number = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "str" and isinstance(value, str):
        return value
    if kind == "bool" and isinstance(value, bool):
        return value
    if kind == "int" and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind == "float" and is_number:
        if not math.isfinite(value):
            raise ParseError("Value must be finite", key=key, line=line)
        return float(value)
    if kind in ("floats", "band") and isinstance(value, list):
        items = []
        for item in value:
            if not isinstance(item, (int, float)) or isinstance(item, bool) or not math.isfinite(item):
                raise ParseError(f"List entries must be finite numbers, got {item!r}", key=key, line=line)
            items.append(float(item))
        if kind == "band" and (len(items) != 2 or not 0.0 < items[0] < items[1]):
            raise ParseError("Band must be two increasing positive numbers", key=key, line=line)
        return tuple(items)
    raise ParseError(f"Expected {kind}, got {type(value).__name__}", key=key, line=line)


def _validate(data: Dict[str, Any], lines: Dict[str, Optional[int]]):
    def fail(key: str, message: str):
        raise ParseError(message, key=key, line=lines.get(key))

    for key, allowed in CHOICES.items():
        value = data[key].upper() if key == "log_level" else data[key]
        if value not in allowed:
            fail(key, f"Unknown value '{data[key]}', expected one of {allowed}")
    for key in POSITIVE:
        if data[key] <= 0.0:
            fail(key, "Value must be positive")
    for key in POSITIVE_OR_NULL:
        if data[key] is not None and data[key] <= 0.0:
            fail(key, "Value must be positive")
    for key in AT_LEAST_ONE:
        if data[key] < 1:
            fail(key, "Value must be at least 1")
    for key in NON_NEGATIVE:
        if data[key] is not None and data[key] < 0:
            fail(key, "Value must be non-negative")
    if data["hbar"] is not None and data["hbar"] <= 0.0:
        fail("hbar", "Value must be positive")
    n = data["grid_points"]
    if n < 16 or n & (n - 1):
        fail("grid_points", "Grid size must be a power of two >= 16")
    if data["padding"] < 2:
        fail("padding", "Padding factor must be >= 2")
    if not 0.5 < data["collapse_threshold"] < 1.0:
        fail("collapse_threshold", "Threshold must lie in (0.5, 1)")
    if data["mass"] is not None and data["density"] is not None:
        fail("mass", "Give either mass or density, not both")
    if data["mass"] is None and data["density"] is None:
        fail("mass", "One of mass or density is required")
    if data["radius"] == 0.0 and data["mass"] is None:
        fail("radius", "A point mass (radius 0) needs an explicit mass")
    for key in ("sweep_radii", "sweep_masses", "sweep_separations", "softenings"):
        if any(v < 0.0 for v in data[key]):
            fail(key, "Sweep values must be non-negative")


def config_from_dict(raw: Dict[str, Any], text: str = "") -> ScenarioConfig:
    """Strictly validate a decoded document and fill in defaults"""
    if not isinstance(raw, dict):
        raise ParseError("Configuration must be a JSON object", line=1)
    lines = {key: _line_of(text, key) for key in raw} if text else {}
    for key in raw:
        if key not in SCHEMA:
            raise ParseError("Unknown configuration key", key=key, line=lines.get(key))
    data = dict(DEFAULT_CONFIG)
    for key, value in raw.items():
        data[key] = _coerce(key, value, lines.get(key))
    for key, (kind, _) in SCHEMA.items():
        if kind in ("floats", "band") and isinstance(data[key], list):
            data[key] = tuple(data[key])
    _validate(data, lines)
    data["log_level"] = data["log_level"].upper()
    known = {f.name for f in fields(ScenarioConfig)}
    return ScenarioConfig(**{k: v for k, v in data.items() if k in known})


def parse_config(text: str) -> ScenarioConfig:
    """Parse a flat JSON configuration document"""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON: {e.msg}", line=e.lineno) from None
    return config_from_dict(raw, text)


class Config:
    """Manages a scenario configuration file with the defaults merged in"""

    DEFAULT_CONFIG = DEFAULT_CONFIG

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file, or the defaults when no file is given"""
        if not self.config_file:
            return dict(self.DEFAULT_CONFIG)
        path = Path(self.config_file)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from None
        logger.debug(f"Loaded configuration from {path}")
        return parse_config(text).to_dict()

    def save(self, path: Optional[str] = None) -> Path:
        """Write the full echo of the configuration"""
        target = Path(path or self.config_file)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.scenario_config().to_json() + "\n", encoding="utf-8")
        return target

    def get(self, key: str, default=None):
        return self._config.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """Set one key; the value is validated immediately"""
        candidate = dict(self._config)
        candidate[key] = value
        self._config = config_from_dict(candidate).to_dict()

    def scenario_config(self) -> ScenarioConfig:
        return config_from_dict(self._config)

    @property
    def physics(self) -> Dict[str, Any]:
        keys = ("unit_mode", "mass", "radius", "density", "G", "hbar", "kernel_profile", "softening")
        return {k: self._config[k] for k in keys}

    @property
    def grid(self) -> Dict[str, Any]:
        return {k: self._config[k] for k in ("grid_points", "domain_length", "padding")}

    @property
    def ensemble(self) -> Dict[str, Any]:
        return {k: self._config[k] for k in ("ensemble_size", "seed", "workers", "noise_scale")}
