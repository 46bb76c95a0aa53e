"""State containers, diagnostics and operator caches shared by the integrators."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .. import models
from .. import spectral as sp
from ..errors import OverflowGuardError
from ..models import ModelSpec
from ..spectral import Grid

#: Largest exponent argument accepted before ``exp`` is considered unsafe.
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class StepDiagnostics:
    original_energy: float
    modified_energy: float
    mass: float
    inner_solver_iterations: int = 0
    linear_solves_performed: int = 0
    max_exponent_arg: float = 0.0
    mass_rho: float | None = None
    inner_residual: float | None = None
    ledger_residual: float | None = None


@dataclass(frozen=True)
class EsavState:
    """Exponential-variable state; ``s = ln r`` is stored instead of ``r``.

    ``phi_hat`` and ``e1`` cache the coefficients of ``phi`` and ``E1(phi)``.
    """

    phi: np.ndarray
    s: float
    c_scale: float
    step_index: int = 0
    t: float = 0.0
    phi_prev: np.ndarray | None = None
    s_prev: float | None = None
    phi_hat: np.ndarray | None = None
    e1: float | None = None

    @property
    def r(self) -> float:
        """``exp(s)``; may overflow to ``inf`` for large ``s``, ``s`` itself never does."""
        try:
            return math.exp(self.s)
        except OverflowError:
            return math.inf

    def evolve(self, **changes) -> "EsavState":
        return replace(self, **changes)


@dataclass(frozen=True)
class SavState:
    """Square-root variable state ``r = sqrt(E1 + c_shift)``."""

    phi: np.ndarray
    r: float
    c_shift: float
    step_index: int = 0
    t: float = 0.0
    phi_prev: np.ndarray | None = None
    r_prev: float | None = None
    phi_hat: np.ndarray | None = None
    e1: float | None = None

    def evolve(self, **changes) -> "SavState":
        return replace(self, **changes)


@dataclass(frozen=True)
class SurfactantState:
    """Two fields and their log auxiliary variables ``s_r = ln r``, ``s_q = ln q``."""

    phi: np.ndarray
    rho: np.ndarray
    s_r: float
    s_q: float
    step_index: int = 0
    t: float = 0.0
    phi_hat: np.ndarray | None = None
    rho_hat: np.ndarray | None = None

    def evolve(self, **changes) -> "SurfactantState":
        return replace(self, **changes)


@dataclass(frozen=True)
class LinearOps:
    """Cached symbols for one ``(model, grid, dt)`` combination."""

    g: np.ndarray
    l: np.ndarray
    den_euler: np.ndarray  # 1 - dt G L
    den_half: np.ndarray  # 1 - dt/2 G L
    gl: np.ndarray  # G L


@lru_cache(maxsize=32)
def linear_ops(model: ModelSpec, grid: Grid, dt: float) -> LinearOps:
    lm = models.l_symbol(model, grid)
    gm = models.g_symbol(model, grid)
    den_euler = sp.shifted_denominator(gm * lm, 1.0, -dt)
    den_half = sp.shifted_denominator(gm * lm, 1.0, -0.5 * dt)
    return LinearOps(gm.symbol, lm.symbol, den_euler, den_half, gm.symbol * lm.symbol)


def increment_solve(
    ops: LinearOps, phi_hat: np.ndarray, forcing_hat: np.ndarray, dt: float, den: np.ndarray
) -> np.ndarray:
    """``phi_hat + dt (G L phi_hat + forcing_hat) / den``.

    With ``den = 1 - dt G L`` this solves ``den u = phi + dt forcing``; with
    ``den = 1 - dt/2 G L`` it is the Crank-Nicolson solve.  Solving for the
    increment keeps the tiny products ``dt G L`` out of ``1 +- dt G L``, where
    rounding would bias the decay of every mode once ``dt |G L|`` nears 1e-10.
    """
    return phi_hat + (dt * (ops.gl * phi_hat + forcing_hat)) / den


def safe_exp(arg: float, what: str = "auxiliary ratio") -> float:
    """``exp(arg)`` with the overflow guard applied."""
    if not math.isfinite(arg):
        raise OverflowGuardError(f"non-finite exponent argument {arg!r} in {what}")
    if arg > MAX_EXPONENT:
        raise OverflowGuardError(
            f"exponent argument {arg:.6g} in {what} exceeds {MAX_EXPONENT:g}; "
            "increase the scaling constant C"
        )
    return math.exp(arg)


def ensure_hat(grid: Grid, phi: np.ndarray, phi_hat: np.ndarray | None) -> np.ndarray:
    return sp.forward(grid, phi) if phi_hat is None else phi_hat


def ensure_e1(model: ModelSpec, grid: Grid, phi: np.ndarray, value: float | None) -> float:
    return models.e1(model, grid, phi) if value is None else value
