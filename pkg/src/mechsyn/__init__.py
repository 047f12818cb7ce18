"""Differential-evolution synthesis of planar four-bar and six-bar linkages."""
from mechsyn.de import Bounds, DEConfig, RunResult, evolve
from mechsyn.errors import ConfigurationError, DegenerateRepair, DegenerateTask, InfeasibleConfiguration
from mechsyn.kernels import BACKEND
from mechsyn.problems import builtin_names, builtin_problem, resolve_problem

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bounds",
    "ConfigurationError",
    "DEConfig",
    "DegenerateRepair",
    "DegenerateTask",
    "InfeasibleConfiguration",
    "RunResult",
    "builtin_names",
    "builtin_problem",
    "evolve",
    "resolve_problem",
]
