"""Exponential scalar auxiliary variable integrators for phase-field gradient flows.

Subpackages
-----------
spectral
    Periodic grids, FFT transforms, Fourier multipliers and quadrature.
models
    Allen-Cahn, Cahn-Hilliard, phase field crystal, a linear test model and the
    fluid-surfactant system.
schemes
    E-SAV, SAV and two-variable E-SAV time steppers.
harness
    Example presets, initial data, run and study drivers, file formats.
"""

from . import errors, models, spectral
from .models import ModelKind, ModelSpec, SurfactantSpec
from .schemes import SCHEMES, Integrator
from .spectral import Grid

__version__ = "0.1.0"

__all__ = [
    "errors",
    "models",
    "spectral",
    "ModelKind",
    "ModelSpec",
    "SurfactantSpec",
    "SCHEMES",
    "Integrator",
    "Grid",
    "__version__",
]
