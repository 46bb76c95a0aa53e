"""Classical square-root SAV baselines, ``r = sqrt(E1 + C)``.

The coupled ``(phi, r)`` update is reduced to a scalar equation for
``(b, phi^{n+1})``: two constant-coefficient solves give the affine
dependence of ``phi^{n+1}`` on that inner product, which is then fixed by a
1x1 linear equation.
"""

from __future__ import annotations

import math

import numpy as np

from .. import models
from .. import spectral as sp
from ..errors import DegenerateReductionError, InvalidShiftError
from ..models import ModelSpec
from ..spectral import Grid
from .base import (
    LinearOps,
    SavState,
    StepDiagnostics,
    ensure_e1,
    ensure_hat,
    increment_solve,
    linear_ops,
)
from .esav import half_step_predictor

DEFAULT_C_SHIFT = 1.0


def _radicand(e1v: float, c_shift: float) -> float:
    rad = e1v + c_shift
    if not rad > 0.0:
        raise InvalidShiftError(
            f"E1 + C = {rad:.6g} is not positive (E1 = {e1v:.6g}, C = {c_shift:.6g}); increase C"
        )
    return rad


def initial_state(
    model: ModelSpec, grid: Grid, phi0: np.ndarray, c_shift: float = DEFAULT_C_SHIFT
) -> SavState:
    phi0 = np.array(grid.check(phi0, "phi0"), dtype=float)
    e10 = models.e1(model, grid, phi0)
    r0 = math.sqrt(_radicand(e10, float(c_shift)))
    return SavState(phi=phi0, r=r0, c_shift=float(c_shift), phi_hat=sp.forward(grid, phi0), e1=e10)


def modified_energy(state: SavState, model: ModelSpec, grid: Grid) -> float:
    """``1/2 (phi, L phi) + r^2``."""
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    return models.quadratic_energy(model, grid, phi_hat) + state.r**2


def _reduced_solve(
    grid: Grid,
    state: SavState,
    b: np.ndarray,
    phi_hat: np.ndarray,
    ops: LinearOps,
    den: np.ndarray,
    dt: float,
    weight: float,
) -> tuple[np.ndarray, float, float]:
    """Solve ``den phi' = explicit + dt G b (r - w (b,phi)) + w dt G b (b, phi')``.

    ``den`` is ``1 - dt G L`` (backward Euler, ``weight`` 1/2, explicit part
    ``phi``) or ``1 - dt/2 G L`` (Crank-Nicolson, ``weight`` 1/4, explicit
    part ``(1 + dt/2 G L) phi``).  Returns the new coefficients,
    ``(b, phi^{n+1})`` and ``(b, phi^n)``.
    """
    b_hat = sp.forward(grid, b)
    gb_hat = ops.g * b_hat
    b_phi = sp.inner(grid, b, state.phi)
    u1 = increment_solve(ops, phi_hat, (state.r - weight * b_phi) * gb_hat, dt, den)
    u2 = ((weight * dt) * gb_hat) / den
    pivot = 1.0 - sp.inner_hat(grid, b_hat, u2)
    if pivot == 0.0 or not math.isfinite(pivot):
        raise DegenerateReductionError(f"scalar pivot {pivot!r} in the SAV reduction")
    b_new = sp.inner_hat(grid, b_hat, u1) / pivot
    return u1 + b_new * u2, b_new, b_phi


def _finish(state, model, grid, dt, new_hat, b_new_inner, b_phi_old, **extra):
    new = sp.backward(grid, new_hat)
    r_new = state.r + 0.5 * (b_new_inner - b_phi_old)
    e1_new = models.e1(model, grid, new)
    quad = models.quadratic_energy(model, grid, new_hat)
    nxt = SavState(
        phi=new,
        r=r_new,
        c_shift=state.c_shift,
        step_index=state.step_index + 1,
        t=state.t + dt,
        phi_hat=new_hat,
        e1=e1_new,
        **extra,
    )
    diag = StepDiagnostics(
        original_energy=quad + e1_new,
        modified_energy=quad + r_new**2,
        mass=sp.integral(grid, new),
        linear_solves_performed=2,
    )
    return nxt, diag


def sav_step_first(
    state: SavState, model: ModelSpec, grid: Grid, dt: float
) -> tuple[SavState, StepDiagnostics]:
    ops = linear_ops(model, grid, float(dt))
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    e1n = ensure_e1(model, grid, state.phi, state.e1)
    b = model.nonlinear_scale * models.f_prime(model, state.phi) / math.sqrt(
        _radicand(e1n, state.c_shift)
    )
    new_hat, b_new, b_old = _reduced_solve(grid, state, b, phi_hat, ops, ops.den_euler, dt, 0.5)
    return _finish(state, model, grid, dt, new_hat, b_new, b_old)


def sav_step_cn(
    state: SavState,
    model: ModelSpec,
    grid: Grid,
    dt: float,
    predictor: np.ndarray | None = None,
) -> tuple[SavState, StepDiagnostics]:
    """Crank-Nicolson SAV step; the first step uses the half-step predictor."""
    ops = linear_ops(model, grid, float(dt))
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    if state.phi_prev is None:
        phit = predictor if predictor is not None else half_step_predictor(
            model, grid, state.phi, dt, phi_hat
        )
    else:
        phit = 1.5 * state.phi - 0.5 * state.phi_prev
    e1t = models.e1(model, grid, phit)
    b = model.nonlinear_scale * models.f_prime(model, phit) / math.sqrt(
        _radicand(e1t, state.c_shift)
    )
    new_hat, b_new, b_old = _reduced_solve(
        grid, state, b, phi_hat, ops, ops.den_half, dt, 0.25
    )
    return _finish(
        state, model, grid, dt, new_hat, b_new, b_old, phi_prev=state.phi, r_prev=state.r
    )
