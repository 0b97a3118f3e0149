#!/usr/bin/env python3
"""
Scenario reports - headline metrics plus the provenance needed to reproduce them
"""
import platform
from dataclasses import dataclass, field
from datetime import datetime
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple

import numpy as np
import scipy

from .grid import WaveFunction

if TYPE_CHECKING:
    from ..utils.config import ScenarioConfig

__version__ = "0.1.0"


def library_versions() -> Dict[str, str]:
    return {
        "gravicollapse": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


@dataclass
class ScenarioReport:
    """Complete outcome of one scenario run"""

    scenario: str
    timestamp: datetime
    metrics: Dict[str, Any]
    provenance: Dict[str, Any]
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    snapshots: Dict[str, Tuple[WaveFunction, float]] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    summary: str = ""

    @classmethod
    def create(
        cls,
        config: "ScenarioConfig",
        metrics: Dict[str, Any],
        tables: Optional[Dict[str, List[Dict[str, Any]]]] = None,
        snapshots: Optional[Dict[str, Tuple[WaveFunction, float]]] = None,
        details: Optional[Dict[str, Any]] = None,
    ) -> "ScenarioReport":
        """Create a report with provenance and an auto-generated summary"""
        report = cls(
            scenario=config.scenario,
            timestamp=datetime.now(),
            metrics=metrics,
            provenance={
                "config_hash": config.config_hash,
                "seed": config.seed,
                "versions": library_versions(),
                "config": config.to_dict(),
            },
            tables=tables or {},
            snapshots=snapshots or {},
            details=details or {},
        )
        report.summary = report._generate_summary()
        return report

    def _generate_summary(self) -> str:
        """One human-readable line per headline metric family"""
        m = self.metrics
        parts = [f"Scenario {self.scenario}"]
        if "median_collapse_over_t_G" in m:
            parts.append(f"median collapse time {m['median_collapse_over_t_G']:.3g} t_G")
        if "branch_counts" in m:
            counts = m["branch_counts"]
            parts.append(f"branches left/right {counts.get('left', 0)}/{counts.get('right', 0)}")
        if "final_var_over_pointer" in m:
            parts.append(f"final variance {m['final_var_over_pointer']:.4g} x pointer value")
        if "width_over_delta_x_G" in m:
            parts.append(f"width {m['width_over_delta_x_G']:.4g} x Delta x_G")
        if "consistency" in m:
            for name, result in m["consistency"].items():
                parts.append(f"{name} unraveling within 3 SE at {100 * result['fraction_within']:.1f}% of entries")
                if "error_scaling" in result:
                    parts.append(f"{name} standard error ratio {result['error_scaling']['stderr_ratio']:.3g}")
        if "singular_rows" in m:
            parts.append(f"{m['singular_rows']} singular rows")
        return ". ".join(parts) + "."

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization"""
        return {
            "scenario": self.scenario,
            "timestamp": self.timestamp.isoformat(),
            "summary": self.summary,
            "metrics": self.metrics,
            "details": self.details,
            "provenance": self.provenance,
            "files": sorted([f"{name}.csv" for name in self.tables]
                            + [f"{name}.bin" for name in self.snapshots]
                            + [f"{name}.csv" for name in self.snapshots]),
        }
