"""
GraviCollapse - gravity-related decoherence and collapse of massive superpositions
"""

from .core.reports import __version__

__all__ = ['__version__']
