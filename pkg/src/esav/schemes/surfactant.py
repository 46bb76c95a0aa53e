"""Decoupled first-order multiple-E-SAV step for the fluid-surfactant system.

Step I advances ``rho`` with ``phi^n`` frozen; Step II advances ``phi`` using
the new ``rho``.  Each nonlinear functional has its own log auxiliary
variable: ``s_r`` for ``int F(phi)`` and ``s_q`` for ``int G(rho)``.

Chemical potentials (``phi_bar = (phi^{n+1} + phi^n) / 2``)::

    mu_rho = -beta lap rho' + d / (4 eta^2) - theta |grad phi^n|^2
    mu_phi = -lap phi' + alpha lap^2 phi' + b / (4 eps^2) + 2 theta div(rho' grad phi_bar)

Both coupling terms come from the single energy term ``-theta rho |grad phi|^2``,
which is what makes the discrete energy telescope.

Step II contains the variable-coefficient operator ``div(rho' grad .)``.  It is
solved by fixed-point iteration: the mean of ``rho'`` goes into the
constant-coefficient operator inverted spectrally, the fluctuation is lagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import models
from .. import spectral as sp
from ..errors import InvalidArgumentError, IterationLimitError
from ..models import SurfactantSpec
from ..spectral import Grid
from .base import StepDiagnostics, SurfactantState, ensure_hat, safe_exp


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-11
    max_iters: int = 200

    def __post_init__(self) -> None:
        if not self.tol > 0 or self.max_iters < 1:
            raise InvalidArgumentError("solver tol must be > 0 and max_iters >= 1")


@lru_cache(maxsize=16)
def _rho_denominator(spec: SurfactantSpec, grid: Grid, dt: float) -> np.ndarray:
    k2 = grid.k2
    return 1.0 + dt * spec.m_rho * spec.beta * k2 * k2


def initial_state(spec: SurfactantSpec, grid: Grid, phi0, rho0) -> SurfactantState:
    phi0 = np.array(grid.check(phi0, "phi0"), dtype=float)
    rho0 = np.array(grid.check(rho0, "rho0"), dtype=float)
    return SurfactantState(
        phi=phi0,
        rho=rho0,
        s_r=models.e_f(spec, grid, phi0),
        s_q=models.e_g(spec, grid, rho0),
        phi_hat=sp.forward(grid, phi0),
        rho_hat=sp.forward(grid, rho0),
    )


def _gradient_energy(spec, grid, phi_hat, rho_hat, g2, rho) -> float:
    k2 = grid.k2
    return (
        0.5 * sp.inner_hat(grid, phi_hat, phi_hat, k2)
        + 0.5 * spec.alpha * sp.inner_hat(grid, phi_hat, phi_hat, k2 * k2)
        + 0.5 * spec.beta * sp.inner_hat(grid, rho_hat, rho_hat, k2)
        - spec.theta * sp.inner(grid, g2, rho)
    )


def modified_energy(state: SurfactantState, spec: SurfactantSpec, grid: Grid) -> float:
    phi_hat = ensure_hat(grid, state.phi, state.phi_hat)
    rho_hat = ensure_hat(grid, state.rho, state.rho_hat)
    g2 = sp.grad_sq(grid, phi_hat)
    return (
        _gradient_energy(spec, grid, phi_hat, rho_hat, g2, state.rho)
        + spec.weight_f * state.s_r
        + spec.weight_g * state.s_q
    )


def ledger_identity(grid: Grid, g2_old, g2_new, rho_old, rho_new) -> tuple[float, float]:
    """Both sides of the coupling-term telescoping identity.

    ``(|grad phi^n|^2, rho' - rho) + (|grad phi'|^2 - |grad phi^n|^2, rho')``
    equals ``(|grad phi'|^2, rho') - (|grad phi^n|^2, rho)``.
    """
    lhs = sp.inner(grid, g2_old, rho_new - rho_old) + sp.inner(grid, g2_new - g2_old, rho_new)
    rhs = sp.inner(grid, g2_new, rho_new) - sp.inner(grid, g2_old, rho_old)
    return lhs, rhs


def _coupling_hat(grid: Grid, coeff: np.ndarray, phi_hat: np.ndarray) -> np.ndarray:
    gx, gy = sp.gradient_hat(grid, phi_hat)
    return sp.divergence_hat(grid, coeff * gx, coeff * gy)


def surfactant_step(
    state: SurfactantState,
    spec: SurfactantSpec,
    grid: Grid,
    dt: float,
    solver: SolverConfig | None = None,
) -> tuple[SurfactantState, StepDiagnostics]:
    solver = solver or SolverConfig()
    k2 = grid.k2
    phi, rho = state.phi, state.rho
    phi_hat = ensure_hat(grid, phi, state.phi_hat)
    rho_hat = ensure_hat(grid, rho, state.rho_hat)

    # Step I: rho with phi^n frozen
    gx, gy = sp.gradient_hat(grid, phi_hat)
    g2_old = gx * gx + gy * gy
    arg_q = state.s_q - models.e_g(spec, grid, rho)
    d = safe_exp(arg_q, "surfactant ratio q") * spec.g_prime(rho)
    mu_explicit = spec.weight_g * d - spec.theta * g2_old
    rho_new_hat = (rho_hat - (dt * spec.m_rho) * k2 * sp.forward(grid, mu_explicit)) / _rho_denominator(
        spec, grid, float(dt)
    )
    rho_new = sp.backward(grid, rho_new_hat)
    s_q_new = state.s_q + sp.inner(grid, d, rho_new - rho)

    # Step II: phi with rho^{n+1}
    arg_r = state.s_r - models.e_f(spec, grid, phi)
    b = safe_exp(arg_r, "surfactant ratio r") * spec.f_prime(phi)
    explicit_coupling = spec.theta * sp.divergence_hat(grid, rho_new * gx, rho_new * gy)
    rhs_hat = phi_hat - (dt * spec.m_phi) * k2 * (
        spec.weight_f * sp.forward(grid, b) + explicit_coupling
    )
    shift = min(float(np.mean(rho_new)), 0.5 / spec.theta)
    den = 1.0 + (dt * spec.m_phi) * k2 * ((1.0 - spec.theta * shift) * k2 + spec.alpha * k2 * k2)
    fluct = spec.theta * (rho_new - shift)
    lag = (dt * spec.m_phi) * k2

    it_hat = phi_hat
    update = np.inf
    for iteration in range(1, solver.max_iters + 1):
        new_hat = (rhs_hat - lag * _coupling_hat(grid, fluct, it_hat)) / den
        diff = new_hat - it_hat
        scale = np.sqrt(sp.inner_hat(grid, new_hat, new_hat))
        update = float(np.sqrt(sp.inner_hat(grid, diff, diff)))
        if scale > 0:
            update /= scale
        it_hat = new_hat
        if update < solver.tol:
            break
    else:
        raise IterationLimitError(
            f"Step II fixed-point iteration stopped at {solver.max_iters} iterations "
            f"with relative update {update:.3e} > {solver.tol:.1e}",
            iterations=solver.max_iters,
            residual=update,
        )
    phi_new_hat = it_hat
    phi_new = sp.backward(grid, phi_new_hat)
    s_r_new = state.s_r + sp.inner(grid, b, phi_new - phi)

    g2_new = sp.grad_sq(grid, phi_new_hat)
    lhs, rhs = ledger_identity(grid, g2_old, g2_new, rho, rho_new)
    ledger_scale = abs(sp.inner(grid, g2_new, rho_new)) + abs(sp.inner(grid, g2_old, rho))
    ledger_res = abs(lhs - rhs) / ledger_scale if ledger_scale > 0 else abs(lhs - rhs)

    quad = _gradient_energy(spec, grid, phi_new_hat, rho_new_hat, g2_new, rho_new)
    nxt = SurfactantState(
        phi=phi_new,
        rho=rho_new,
        s_r=s_r_new,
        s_q=s_q_new,
        step_index=state.step_index + 1,
        t=state.t + dt,
        phi_hat=phi_new_hat,
        rho_hat=rho_new_hat,
    )
    diag = StepDiagnostics(
        original_energy=quad
        + spec.weight_f * models.e_f(spec, grid, phi_new)
        + spec.weight_g * models.e_g(spec, grid, rho_new),
        modified_energy=quad + spec.weight_f * s_r_new + spec.weight_g * s_q_new,
        mass=sp.integral(grid, phi_new),
        mass_rho=sp.integral(grid, rho_new),
        inner_solver_iterations=iteration,
        linear_solves_performed=1 + iteration,
        max_exponent_arg=max(abs(arg_q), abs(arg_r)),
        inner_residual=update,
        ledger_residual=ledger_res,
    )
    return nxt, diag
