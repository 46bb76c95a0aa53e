"""Phase-field models written as ``dphi/dt = G (L phi + lam F'(phi))``.

Every scalar model splits its free energy as ``1/2 (phi, L phi) + E1(phi)`` with
``E1 = lam * int F(phi)``.  ``L`` has a non-negative symbol and ``G`` a
non-positive one, which is all the time integrators need.

===================  =====================  ================  ========
model                L symbol               G symbol          lam
===================  =====================  ================  ========
Allen-Cahn           |k|^2                  -M                1/eps^2
Cahn-Hilliard        eps |k|^2              -M |k|^2          1/eps
phase field crystal  (1 - |k|^2)^2          -M |k|^2          1
linear test          |k|^2                  -M                0
===================  =====================  ================  ========

For the crystal model the ``-eps/2 phi^2`` part of the Swift-Hohenberg energy is
moved into ``F`` so that ``L = (1 + Laplacian)^2`` stays non-negative.

The binary fluid-surfactant system is described separately by
:class:`SurfactantSpec`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import spectral as sp
from .errors import InvalidArgumentError
from .spectral import Grid, Multiplier


class ModelKind(str, enum.Enum):
    ALLEN_CAHN = "allen-cahn"
    CAHN_HILLIARD = "cahn-hilliard"
    PHASE_FIELD_CRYSTAL = "pfc"
    LINEAR_TEST = "linear-test"


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    mobility: float = 1.0
    epsilon: float = 0.1
    pfc_epsilon: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "mobility", _positive("mobility", self.mobility))
        object.__setattr__(self, "epsilon", _positive("epsilon", self.epsilon))
        object.__setattr__(self, "pfc_epsilon", _positive("pfc_epsilon", self.pfc_epsilon))

    @property
    def nonlinear_scale(self) -> float:
        """Weight ``lam`` in ``E1 = lam * int F``."""
        if self.kind is ModelKind.ALLEN_CAHN:
            return 1.0 / self.epsilon**2
        if self.kind is ModelKind.CAHN_HILLIARD:
            return 1.0 / self.epsilon
        if self.kind is ModelKind.PHASE_FIELD_CRYSTAL:
            return 1.0
        return 0.0

    @property
    def conserves_mass(self) -> bool:
        return self.kind in (ModelKind.CAHN_HILLIARD, ModelKind.PHASE_FIELD_CRYSTAL)

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)


def allen_cahn(epsilon: float = 0.1, mobility: float = 1.0) -> ModelSpec:
    return ModelSpec(ModelKind.ALLEN_CAHN, mobility=mobility, epsilon=epsilon)


def cahn_hilliard(epsilon: float = 0.1, mobility: float = 0.1) -> ModelSpec:
    return ModelSpec(ModelKind.CAHN_HILLIARD, mobility=mobility, epsilon=epsilon)


def phase_field_crystal(epsilon: float = 0.25, mobility: float = 1.0) -> ModelSpec:
    return ModelSpec(ModelKind.PHASE_FIELD_CRYSTAL, mobility=mobility, pfc_epsilon=epsilon)


def linear_test(mobility: float = 1.0) -> ModelSpec:
    return ModelSpec(ModelKind.LINEAR_TEST, mobility=mobility)


@dataclass(frozen=True)
class SurfactantSpec:
    """Parameters of the coupled fluid-surfactant Cahn-Hilliard system.

    Free energy::

        int 1/2|grad phi|^2 + a/2 (lap phi)^2 + b/2 |grad rho|^2 - theta rho |grad phi|^2
            + F(phi) / (4 eps^2) + G(rho) / (4 eta^2)

    with ``F = (phi^2 - 1)^2`` and ``G = rho^2 (rho - rho_s)^2``.
    """

    m_phi: float = 2.5e-4
    m_rho: float = 2.5e-4
    alpha: float = 2.5e-4
    beta: float = 1.0
    theta: float = 0.3
    epsilon: float = 0.05
    eta: float = 0.08
    rho_s: float = 1.0

    def __post_init__(self) -> None:
        for name in ("m_phi", "m_rho", "alpha", "beta", "theta", "epsilon", "eta", "rho_s"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))

    @property
    def weight_f(self) -> float:
        return 1.0 / (4.0 * self.epsilon**2)

    @property
    def weight_g(self) -> float:
        return 1.0 / (4.0 * self.eta**2)

    def f(self, phi):
        q = phi * phi - 1.0
        return q * q

    def f_prime(self, phi):
        return 4.0 * phi * (phi * phi - 1.0)

    def g(self, rho):
        d = rho - self.rho_s
        return rho * rho * d * d

    def g_prime(self, rho):
        d = rho - self.rho_s
        return 2.0 * rho * d * (d + rho)

    def with_(self, **changes) -> "SurfactantSpec":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Pointwise potentials
# ---------------------------------------------------------------------------


def f_value(model: ModelSpec | SurfactantSpec, phi):
    """Potential density ``F`` evaluated pointwise."""
    if isinstance(model, SurfactantSpec):
        return model.f(phi)
    if model.kind is ModelKind.PHASE_FIELD_CRYSTAL:
        p2 = phi * phi
        return 0.25 * p2 * p2 - 0.5 * model.pfc_epsilon * p2
    if model.kind is ModelKind.LINEAR_TEST:
        return np.zeros_like(np.asarray(phi, dtype=float))
    q = phi * phi - 1.0
    return 0.25 * q * q


def f_prime(model: ModelSpec | SurfactantSpec, phi):
    """Derivative ``F'`` evaluated pointwise."""
    if isinstance(model, SurfactantSpec):
        return model.f_prime(phi)
    if model.kind is ModelKind.PHASE_FIELD_CRYSTAL:
        return phi * (phi * phi - model.pfc_epsilon)
    if model.kind is ModelKind.LINEAR_TEST:
        return np.zeros_like(np.asarray(phi, dtype=float))
    return phi * (phi * phi - 1.0)


def g_value(spec: SurfactantSpec, rho):
    return spec.g(rho)


def g_prime(spec: SurfactantSpec, rho):
    return spec.g_prime(rho)


# ---------------------------------------------------------------------------
# Operator symbols
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _scalar_symbols(model: ModelSpec, grid: Grid) -> tuple[Multiplier, Multiplier]:
    k2 = grid.k2
    m = model.mobility
    if model.kind is ModelKind.ALLEN_CAHN or model.kind is ModelKind.LINEAR_TEST:
        lsym, gsym = k2, np.full_like(k2, -m)
    elif model.kind is ModelKind.CAHN_HILLIARD:
        lsym, gsym = model.epsilon * k2, -m * k2
    else:
        lsym, gsym = (1.0 - k2) ** 2, -m * k2
    return Multiplier(grid, lsym), Multiplier(grid, gsym)


@lru_cache(maxsize=16)
def surfactant_symbols(spec: SurfactantSpec, grid: Grid) -> dict[str, Multiplier]:
    """``L`` and ``G`` symbols of the phi and rho equations."""
    k2 = grid.k2
    return {
        "l_phi": Multiplier(grid, k2 + spec.alpha * k2 * k2),
        "g_phi": Multiplier(grid, -spec.m_phi * k2),
        "l_rho": Multiplier(grid, spec.beta * k2),
        "g_rho": Multiplier(grid, -spec.m_rho * k2),
    }


def l_symbol(model: ModelSpec | SurfactantSpec, grid: Grid, field: str = "phi") -> Multiplier:
    if isinstance(model, SurfactantSpec):
        return surfactant_symbols(model, grid)[f"l_{field}"]
    return _scalar_symbols(model, grid)[0]


def g_symbol(model: ModelSpec | SurfactantSpec, grid: Grid, field: str = "phi") -> Multiplier:
    if isinstance(model, SurfactantSpec):
        return surfactant_symbols(model, grid)[f"g_{field}"]
    return _scalar_symbols(model, grid)[1]


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------


def e1(model: ModelSpec, grid: Grid, phi: np.ndarray) -> float:
    """Nonlinear energy ``lam * int F(phi)``."""
    lam = model.nonlinear_scale
    if lam == 0.0:
        grid.check(phi)
        return 0.0
    return lam * sp.integral(grid, f_value(model, phi))


def e_f(spec: SurfactantSpec, grid: Grid, phi: np.ndarray) -> float:
    """Unweighted ``int F(phi)`` of the surfactant model."""
    return sp.integral(grid, spec.f(phi))


def e_g(spec: SurfactantSpec, grid: Grid, rho: np.ndarray) -> float:
    """Unweighted ``int G(rho)`` of the surfactant model."""
    return sp.integral(grid, spec.g(rho))


def quadratic_energy(model: ModelSpec, grid: Grid, phi_hat: np.ndarray) -> float:
    """``1/2 (phi, L phi)`` from coefficients."""
    return 0.5 * sp.inner_hat(grid, phi_hat, phi_hat, l_symbol(model, grid).symbol)


def chemical_potential(model: ModelSpec, grid: Grid, phi: np.ndarray) -> np.ndarray:
    """Variational derivative ``L phi + lam F'(phi)``."""
    return sp.apply_multiplier(l_symbol(model, grid), phi) + model.nonlinear_scale * f_prime(model, phi)


def surfactant_gradient_terms(spec: SurfactantSpec, grid: Grid, phi_hat, rho_hat) -> float:
    """Quadratic and coupling part of the surfactant energy."""
    gx, gy = sp.gradient_hat(grid, phi_hat)
    g2 = gx * gx + gy * gy
    rho = sp.backward(grid, rho_hat)
    k2 = grid.k2
    grad_phi = sp.inner_hat(grid, phi_hat, phi_hat, k2)
    lap_phi = sp.inner_hat(grid, phi_hat, phi_hat, k2 * k2)
    grad_rho = sp.inner_hat(grid, rho_hat, rho_hat, k2)
    return (
        0.5 * grad_phi
        + 0.5 * spec.alpha * lap_phi
        + 0.5 * spec.beta * grad_rho
        - spec.theta * sp.inner(grid, g2, rho)
    )


def original_energy(model, grid: Grid, phi: np.ndarray, rho: np.ndarray | None = None) -> float:
    """Free energy of ``phi`` (and ``rho`` for the surfactant model)."""
    phi_hat = sp.forward(grid, phi)
    if isinstance(model, SurfactantSpec):
        if rho is None:
            raise InvalidArgumentError("the surfactant energy needs rho")
        return (
            surfactant_gradient_terms(model, grid, phi_hat, sp.forward(grid, rho))
            + model.weight_f * e_f(model, grid, phi)
            + model.weight_g * e_g(model, grid, rho)
        )
    return quadratic_energy(model, grid, phi_hat) + e1(model, grid, phi)
