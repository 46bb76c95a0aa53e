"""Example catalogue, initial data, run driver and study drivers."""

from .config import PRESETS, RunConfig, apply_overrides, preset
from .initial import initial_condition, splitmix64, uniform
from .run import InvariantMonitor, RunResult, Violation, integrate, run_simulation
from .studies import (
    Comparison,
    ConvergenceReport,
    compare_sav_esav,
    convergence_study,
    energy_ladder,
    exact_linear_solution,
    reference_solution,
)

__all__ = [
    "PRESETS",
    "RunConfig",
    "apply_overrides",
    "preset",
    "initial_condition",
    "splitmix64",
    "uniform",
    "InvariantMonitor",
    "RunResult",
    "Violation",
    "integrate",
    "run_simulation",
    "Comparison",
    "ConvergenceReport",
    "compare_sav_esav",
    "convergence_study",
    "energy_ladder",
    "exact_linear_solution",
    "reference_solution",
]
