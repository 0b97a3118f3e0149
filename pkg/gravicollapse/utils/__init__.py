"""
Utils package - configuration, logging and file export for GraviCollapse
"""

from .config import Config, ScenarioConfig, DEFAULT_CONFIG, parse_config, config_from_dict
from .logger_config import setup_logging, get_logger
from .export import (
    export_json,
    export_csv,
    export_series,
    read_csv,
    write_snapshot,
    read_snapshot,
    emit_report,
)

__all__ = [
    # Configuration
    'Config',
    'ScenarioConfig',
    'DEFAULT_CONFIG',
    'parse_config',
    'config_from_dict',
    # Logging
    'setup_logging',
    'get_logger',
    # Export
    'export_json',
    'export_csv',
    'export_series',
    'read_csv',
    'write_snapshot',
    'read_snapshot',
    'emit_report',
]
