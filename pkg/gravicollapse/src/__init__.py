"""
Source package - command-line interface for GraviCollapse
"""

from .cli import build_parser, run, main

__all__ = [
    'build_parser',
    'run',
    'main',
]
