"""
Reports Package

Contains one report per experiment of the geodesic-flow lab.
"""

from .base_report import BaseReport
from .bounds_report import BoundsReport
from .entropy_report import EntropyLabReport
from .inclusion_report import InclusionReport
from .spectrum_report import SpectrumReport
from .verdict_report import VerdictReport

# Experiment name (scenario [experiment] name) -> report class
AVAILABLE_REPORTS = {
    'spectrum': SpectrumReport,
    'bounds': BoundsReport,
    'inclusion': InclusionReport,
    'entropy': EntropyLabReport,
    'full-verdict': VerdictReport,
}

__all__ = [
    'BaseReport',
    'BoundsReport',
    'EntropyLabReport',
    'InclusionReport',
    'SpectrumReport',
    'VerdictReport',
    'AVAILABLE_REPORTS'
]
