"""Slow-light soliton storage and revival in a three-level medium.

Exact one-soliton fields on a switched control background, a direct
Maxwell-Bloch integrator, and the measurements that compare them.
"""

__version__ = "0.1.0"

from .analytic import AnalyticSolution, grid_evaluate, solution_for
from .config import Config, ConfigError, Region, default_config, load_config, validate_config
from .grid import GridSolution, GridSpec
from .integrator import SchemeConfig, integrate, residual_norm, simulate

__all__ = [
    "AnalyticSolution",
    "Config",
    "ConfigError",
    "GridSolution",
    "GridSpec",
    "Region",
    "SchemeConfig",
    "default_config",
    "grid_evaluate",
    "integrate",
    "load_config",
    "residual_norm",
    "simulate",
    "solution_for",
    "validate_config",
    "__version__",
]
