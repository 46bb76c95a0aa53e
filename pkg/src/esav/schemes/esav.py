"""Exponential scalar auxiliary variable integrators.

The auxiliary variable ``r = exp(E1(phi) / C)`` is carried as ``s = ln r``.
Every ratio ``r / exp(E1 / C)`` is formed as ``exp(s - E1 / C)``, a number that
stays within ``O(dt)`` of one, so large energies never reach ``exp``.

Both schemes need one constant-coefficient solve per step and update ``s``
only after ``phi`` is known.
"""

from __future__ import annotations

import math

import numpy as np

from .. import models
from .. import spectral as sp
from ..errors import ExtrapolationDegenerateError, InvalidArgumentError
from ..models import ModelSpec
from ..spectral import Grid
from .base import (
    EsavState,
    StepDiagnostics,
    ensure_e1,
    ensure_hat,
    increment_solve,
    linear_ops,
    safe_exp,
)


def default_c_scale(e1_initial: float) -> float:
    """``max(1, |E1(phi0)|)``."""
    return max(1.0, abs(float(e1_initial)))


def initial_state(
    model: ModelSpec, grid: Grid, phi0: np.ndarray, c_scale: float | None = None
) -> EsavState:
    """State at ``t = 0`` with ``C * s = E1(phi0)``."""
    phi0 = np.array(grid.check(phi0, "phi0"), dtype=float)
    e10 = models.e1(model, grid, phi0)
    c = default_c_scale(e10) if c_scale is None else float(c_scale)
    if not (math.isfinite(c) and c > 0):
        raise InvalidArgumentError(f"c_scale must be positive, got {c_scale!r}")
    return EsavState(
        phi=phi0, s=e10 / c, c_scale=c, phi_hat=sp.forward(grid, phi0), e1=e10
    )


def bratio(
    state: EsavState,
    model: ModelSpec,
    grid: Grid,
    phi_eval: np.ndarray,
    s_eval: float,
    e1_eval: float | None = None,
) -> tuple[np.ndarray, float]:
    """``exp(s_eval - E1(phi_eval)/C) * lam * F'(phi_eval)`` and the exponent used."""
    c = state.c_scale
    e1v = models.e1(model, grid, phi_eval) if e1_eval is None else e1_eval
    arg = s_eval - e1v / c
    ratio = safe_exp(arg)
    lam = model.nonlinear_scale
    return (ratio * lam) * models.f_prime(model, phi_eval), arg


def modified_energy(state: EsavState, model: ModelSpec, grid: Grid) -> float:
    """``1/2 (phi, L phi) + C s``."""
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    return models.quadratic_energy(model, grid, phi_hat) + state.c_scale * state.s


def _finish(
    state: EsavState,
    model: ModelSpec,
    grid: Grid,
    dt: float,
    new_hat: np.ndarray,
    b: np.ndarray,
    solves: int,
    max_arg: float,
    **extra,
) -> tuple[EsavState, StepDiagnostics]:
    new = sp.backward(grid, new_hat)
    s_new = state.s + sp.inner(grid, b, new - state.phi) / state.c_scale
    e1_new = models.e1(model, grid, new)
    quad = models.quadratic_energy(model, grid, new_hat)
    nxt = EsavState(
        phi=new,
        s=s_new,
        c_scale=state.c_scale,
        step_index=state.step_index + 1,
        t=state.t + dt,
        phi_hat=new_hat,
        e1=e1_new,
        **extra,
    )
    diag = StepDiagnostics(
        original_energy=quad + e1_new,
        modified_energy=quad + state.c_scale * s_new,
        mass=sp.integral(grid, new),
        linear_solves_performed=solves,
        max_exponent_arg=max_arg,
    )
    return nxt, diag


def esav_step_first(
    state: EsavState, model: ModelSpec, grid: Grid, dt: float
) -> tuple[EsavState, StepDiagnostics]:
    """Backward-Euler step: ``(I - dt G L) phi' = phi + dt G b``, then update ``s``."""
    ops = linear_ops(model, grid, float(dt))
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    e1n = ensure_e1(model, grid, state.phi, state.e1)
    b, arg = bratio(state, model, grid, state.phi, state.s, e1n)
    new_hat = increment_solve(ops, phi_hat, ops.g * sp.forward(grid, b), dt, ops.den_euler)
    return _finish(state, model, grid, dt, new_hat, b, 1, abs(arg))


def half_step_predictor(
    model: ModelSpec, grid: Grid, phi0: np.ndarray, dt: float, phi0_hat: np.ndarray | None = None
) -> np.ndarray:
    """Solve ``(I - dt/2 G L) u = phi0 + dt/2 G lam F'(phi0)``."""
    ops = linear_ops(model, grid, float(dt))
    phi0_hat = ensure_hat(grid, phi0, phi0_hat)
    nl = model.nonlinear_scale * models.f_prime(model, phi0)
    new_hat = increment_solve(ops, phi0_hat, ops.g * sp.forward(grid, nl), 0.5 * dt, ops.den_half)
    return sp.backward(grid, new_hat)


def esav_cn_bootstrap(
    state0: EsavState, model: ModelSpec, grid: Grid, dt: float
) -> tuple[np.ndarray, float]:
    """Half-step predictor ``(phi~, s~)`` with ``s~ = E1(phi~) / C``."""
    if state0.step_index != 0:
        raise InvalidArgumentError("the bootstrap predictor is only defined at step 0")
    phit = half_step_predictor(model, grid, state0.phi, dt, state0.phi_hat)
    return phit, models.e1(model, grid, phit) / state0.c_scale


def esav_step_cn(
    state: EsavState,
    model: ModelSpec,
    grid: Grid,
    dt: float,
    predictor: tuple[np.ndarray, float] | None = None,
) -> tuple[EsavState, StepDiagnostics]:
    """Crank-Nicolson step with extrapolated nonlinear term.

    For ``step_index >= 1`` the nonlinear term uses ``phi~ = 3/2 phi^n - 1/2 phi^{n-1}``
    and ``r~ = 3/2 r^n - 1/2 r^{n-1}``.  The first step uses the half-step
    predictor from :func:`esav_cn_bootstrap` unless one is supplied.
    """
    ops = linear_ops(model, grid, float(dt))
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    c = state.c_scale
    solves = 1
    if state.phi_prev is None:
        if predictor is None:
            predictor = esav_cn_bootstrap(state, model, grid, dt)
            solves += 1
        phit, st = predictor
        e1t = models.e1(model, grid, phit)
        arg = st - e1t / c
        ratio = safe_exp(arg)
        max_arg = abs(arg)
    else:
        phit = 1.5 * state.phi - 0.5 * state.phi_prev
        e1t = models.e1(model, grid, phit)
        a_now = state.s - e1t / c
        a_old = state.s_prev - e1t / c
        ratio = 1.5 * safe_exp(a_now) - 0.5 * safe_exp(a_old)
        max_arg = max(abs(a_now), abs(a_old))
        if not ratio > 0.0:
            raise ExtrapolationDegenerateError(
                f"extrapolated auxiliary ratio {ratio:.6g} is not positive at step {state.step_index}"
            )
    b = (ratio * model.nonlinear_scale) * models.f_prime(model, phit)
    new_hat = increment_solve(ops, phi_hat, ops.g * sp.forward(grid, b), dt, ops.den_half)
    return _finish(
        state, model, grid, dt, new_hat, b, solves, max_arg, phi_prev=state.phi, s_prev=state.s
    )
