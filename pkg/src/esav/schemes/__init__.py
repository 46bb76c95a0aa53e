"""Time integrators and a uniform driver interface over them.

=========  ======================================================  ============
id         scheme                                                  model
=========  ======================================================  ============
esav1      exponential SAV, backward Euler                         scalar
esav-cn    exponential SAV, Crank-Nicolson with extrapolation      scalar
sav1       square-root SAV, backward Euler                         scalar
sav-cn     square-root SAV, Crank-Nicolson with extrapolation      scalar
mesav1     two-variable exponential SAV, decoupled, first order    surfactant
=========  ======================================================  ============
"""

from __future__ import annotations

import numpy as np

from .. import models
from ..errors import InvalidArgumentError
from ..models import ModelSpec, SurfactantSpec
from ..spectral import Grid
from . import esav, sav, surfactant
from .base import EsavState, SavState, StepDiagnostics, SurfactantState
from .esav import bratio, esav_cn_bootstrap, esav_step_cn, esav_step_first
from .sav import sav_step_cn, sav_step_first
from .surfactant import SolverConfig, surfactant_step

SCHEMES = ("esav1", "esav-cn", "sav1", "sav-cn", "mesav1")
ORDER = {"esav1": 1, "esav-cn": 2, "sav1": 1, "sav-cn": 2, "mesav1": 1}

__all__ = [
    "SCHEMES",
    "ORDER",
    "Integrator",
    "EsavState",
    "SavState",
    "SurfactantState",
    "StepDiagnostics",
    "SolverConfig",
    "bratio",
    "esav_step_first",
    "esav_cn_bootstrap",
    "esav_step_cn",
    "sav_step_first",
    "sav_step_cn",
    "surfactant_step",
]


class Integrator:
    """A scheme bound to a model, grid and time step.

    ``c`` is the E-SAV scaling constant (default ``max(1, |E1(phi0)|)``) or the
    SAV shift under the square root (default 1); it is ignored by ``mesav1``.
    """

    def __init__(
        self,
        scheme: str,
        model: ModelSpec | SurfactantSpec,
        grid: Grid,
        dt: float,
        c: float | None = None,
        solver: SolverConfig | None = None,
    ) -> None:
        if scheme not in SCHEMES:
            raise InvalidArgumentError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
        surf = isinstance(model, SurfactantSpec)
        if surf != (scheme == "mesav1"):
            raise InvalidArgumentError(
                f"scheme {scheme!r} cannot integrate the "
                f"{'surfactant' if surf else model.kind.value} model"
            )
        if not (np.isfinite(dt) and dt > 0):
            raise InvalidArgumentError(f"dt must be positive, got {dt!r}")
        self.scheme = scheme
        self.model = model
        self.grid = grid
        self.dt = float(dt)
        self.c = c
        self.solver = solver or SolverConfig()

    @property
    def order(self) -> int:
        return ORDER[self.scheme]

    @property
    def field_names(self) -> tuple[str, ...]:
        return ("phi", "rho") if self.scheme == "mesav1" else ("phi",)

    @property
    def aux_names(self) -> tuple[str, ...]:
        if self.scheme == "mesav1":
            return ("s_r", "s_q")
        return ("s",) if self.scheme.startswith("esav") else ("r",)

    def initial_state(self, fields: dict[str, np.ndarray]):
        g = self.grid
        if self.scheme == "mesav1":
            return surfactant.initial_state(self.model, g, fields["phi"], fields["rho"])
        if self.scheme.startswith("esav"):
            return esav.initial_state(self.model, g, fields["phi"], self.c)
        c = sav.DEFAULT_C_SHIFT if self.c is None else self.c
        return sav.initial_state(self.model, g, fields["phi"], c)

    def step(self, state):
        m, g, dt = self.model, self.grid, self.dt
        if self.scheme == "esav1":
            return esav_step_first(state, m, g, dt)
        if self.scheme == "esav-cn":
            return esav_step_cn(state, m, g, dt)
        if self.scheme == "sav1":
            return sav_step_first(state, m, g, dt)
        if self.scheme == "sav-cn":
            return sav_step_cn(state, m, g, dt)
        return surfactant_step(state, m, g, dt, self.solver)

    def modified_energy(self, state) -> float:
        if self.scheme == "mesav1":
            return surfactant.modified_energy(state, self.model, self.grid)
        if self.scheme.startswith("esav"):
            return esav.modified_energy(state, self.model, self.grid)
        return sav.modified_energy(state, self.model, self.grid)

    def original_energy(self, state) -> float:
        rho = state.rho if self.scheme == "mesav1" else None
        return models.original_energy(self.model, self.grid, state.phi, rho)

    def fields(self, state) -> dict[str, np.ndarray]:
        if self.scheme == "mesav1":
            return {"phi": state.phi, "rho": state.rho}
        return {"phi": state.phi}

    def aux(self, state) -> dict[str, float]:
        if self.scheme == "mesav1":
            return {"s_r": state.s_r, "s_q": state.s_q}
        if self.scheme.startswith("esav"):
            return {"s": state.s}
        return {"r": state.r}

    def conserves_mass(self) -> bool:
        return isinstance(self.model, SurfactantSpec) or self.model.conserves_mass
