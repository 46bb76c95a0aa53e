"""Fourier pseudospectral toolkit on a doubly periodic rectangle.

Fields are plain ``float64`` arrays of shape ``(nx, ny)``, row-major, with
axis 0 along ``x``.  Spectral coefficients use the real-to-complex half
spectrum of shape ``(nx, ny // 2 + 1)``; the discarded half is the Hermitian
mirror and carries no information for real data.

Conventions
-----------
* ``forward`` is unnormalised, ``backward`` carries the ``1 / (nx * ny)``
  factor, so ``backward(forward(f)) == f`` to roundoff.
* Wavenumbers are ``2 pi m / L`` with integer ``m`` in ``(-n/2, n/2]``.  The
  Nyquist mode is kept in every even symbol and zeroed in first derivatives.
* No dealiasing.  Nonlinear terms are formed pointwise in physical space.
* Integrals use the rectangle rule ``hx * hy * sum(f)``.

The FFT engine is pyFFTW (``FFTW_ESTIMATE`` plans, which are deterministic)
when it is importable and ``scipy.fft`` otherwise.  ``ESAV_FFT=scipy`` or
``ESAV_FFT=pyfftw`` forces one of them.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import InvalidArgumentError, SingularOperatorError

try:  # pragma: no cover - depends on the environment
    import pyfftw

    _HAVE_PYFFTW = True
except ImportError:  # pragma: no cover
    pyfftw = None
    _HAVE_PYFFTW = False


# ---------------------------------------------------------------------------
# FFT engines
# ---------------------------------------------------------------------------


class _ScipyEngine:
    name = "scipy"

    def forward(self, a: np.ndarray) -> np.ndarray:
        return sfft.rfft2(a)

    def backward(self, ah: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
        return sfft.irfft2(ah, s=shape)


class _FFTWEngine:
    """pyFFTW plans cached per thread and per shape."""

    name = "pyfftw"

    def __init__(self) -> None:
        self._local = threading.local()

    def _plans(self, shape: tuple[int, int]):
        cache = getattr(self._local, "plans", None)
        if cache is None:
            cache = self._local.plans = {}
        plans = cache.get(shape)
        if plans is None:
            real = pyfftw.empty_aligned(shape, dtype="float64")
            cplx = pyfftw.empty_aligned((shape[0], shape[1] // 2 + 1), dtype="complex128")
            fwd = pyfftw.FFTW(real, cplx, axes=(0, 1), flags=("FFTW_ESTIMATE",), threads=1)
            bwd = pyfftw.FFTW(
                cplx,
                real,
                axes=(0, 1),
                direction="FFTW_BACKWARD",
                flags=("FFTW_ESTIMATE", "FFTW_DESTROY_INPUT"),
                threads=1,
            )
            plans = cache[shape] = (real, cplx, fwd, bwd)
        return plans

    def forward(self, a: np.ndarray) -> np.ndarray:
        real, cplx, fwd, _ = self._plans(a.shape)
        real[...] = a
        fwd.execute()
        return cplx.copy()

    def backward(self, ah: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
        real, cplx, _, bwd = self._plans(shape)
        cplx[...] = ah
        bwd.execute()
        # FFTW leaves the c2r output unnormalised
        return real * (1.0 / (shape[0] * shape[1]))


def _select_engine(name: str | None = None):
    name = (name or os.environ.get("ESAV_FFT", "")).strip().lower()
    if name == "scipy":
        return _ScipyEngine()
    if name == "pyfftw":
        if not _HAVE_PYFFTW:
            raise InvalidArgumentError("ESAV_FFT=pyfftw requested but pyFFTW is not installed")
        return _FFTWEngine()
    if name:
        raise InvalidArgumentError(f"unknown FFT engine {name!r}; use 'scipy' or 'pyfftw'")
    return _FFTWEngine() if _HAVE_PYFFTW else _ScipyEngine()


_ENGINE = _select_engine()


def fft_engine() -> str:
    """Name of the active FFT engine."""
    return _ENGINE.name


def set_fft_engine(name: str) -> None:
    """Switch the FFT engine for the whole process (``'scipy'`` or ``'pyfftw'``)."""
    global _ENGINE
    _ENGINE = _select_engine(name)


# ---------------------------------------------------------------------------
# Grid and multipliers
# ---------------------------------------------------------------------------


def _signed_modes(n: int) -> np.ndarray:
    m = np.arange(n, dtype=float)
    m[m > n // 2] -= n
    return m


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, lx) x [0, ly)``."""

    nx: int
    ny: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise InvalidArgumentError(f"{name} must be an even integer >= 4, got {n!r}")
            object.__setattr__(self, name, int(n))
        for name in ("lx", "ly"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise InvalidArgumentError(f"{name} must be a positive finite length, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny // 2 + 1)

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.hx

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.hy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` of shape ``(nx, ny)``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def kx(self) -> np.ndarray:
        """Full set of x wavenumbers, length ``nx``."""
        return 2.0 * np.pi * _signed_modes(self.nx) / self.lx

    @cached_property
    def ky(self) -> np.ndarray:
        """Full set of y wavenumbers, length ``ny``."""
        return 2.0 * np.pi * _signed_modes(self.ny) / self.ly

    @cached_property
    def ky_half(self) -> np.ndarray:
        """Non-negative y wavenumbers kept in the half spectrum."""
        return 2.0 * np.pi * np.arange(self.ny // 2 + 1) / self.ly

    @cached_property
    def k2(self) -> np.ndarray:
        """``|k|^2`` on the half spectrum."""
        return self.kx[:, None] ** 2 + self.ky_half[None, :] ** 2

    @cached_property
    def ikx(self) -> np.ndarray:
        """Symbol of d/dx with the Nyquist row removed, shape ``(nx, 1)``."""
        k = self.kx.copy()
        k[self.nx // 2] = 0.0
        return (1j * k)[:, None]

    @cached_property
    def iky(self) -> np.ndarray:
        """Symbol of d/dy with the Nyquist column removed, shape ``(1, ny//2+1)``."""
        k = self.ky_half.copy()
        k[-1] = 0.0
        return (1j * k)[None, :]

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Column weights restoring the mirrored half of the spectrum."""
        w = np.full(self.ny // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    def check(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        if np.shape(f) != self.shape:
            raise InvalidArgumentError(f"{name} has shape {np.shape(f)}, grid expects {self.shape}")
        return f

    def check_hat(self, fh: np.ndarray, name: str = "coefficients") -> np.ndarray:
        if np.shape(fh) != self.spectral_shape:
            raise InvalidArgumentError(
                f"{name} has shape {np.shape(fh)}, grid expects {self.spectral_shape}"
            )
        return fh

    def describe(self) -> str:
        return f"{self.nx}x{self.ny} on [0,{self.lx:g}]x[0,{self.ly:g}]"


@dataclass(eq=False)
class Multiplier:
    """A Fourier multiplier: real symbol sampled on the half spectrum."""

    grid: Grid
    symbol: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.symbol = np.asarray(self.symbol, dtype=float)
        self.symbol = np.broadcast_to(self.symbol, self.grid.spectral_shape).copy()
        if not np.all(np.isfinite(self.symbol)):
            raise InvalidArgumentError("multiplier symbol must be finite")

    @classmethod
    def from_k2(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Multiplier":
        """Radial symbol given as a function of ``|k|^2``."""
        return cls(grid, fn(grid.k2))

    @classmethod
    def identity(cls, grid: Grid) -> "Multiplier":
        return cls(grid, np.ones(grid.spectral_shape))

    @classmethod
    def laplacian(cls, grid: Grid) -> "Multiplier":
        return cls(grid, -grid.k2)

    def __mul__(self, other):
        if isinstance(other, Multiplier):
            _same_grid(self.grid, other.grid)
            return Multiplier(self.grid, self.symbol * other.symbol)
        return Multiplier(self.grid, self.symbol * float(other))

    __rmul__ = __mul__

    def __add__(self, other: "Multiplier") -> "Multiplier":
        _same_grid(self.grid, other.grid)
        return Multiplier(self.grid, self.symbol + other.symbol)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise InvalidArgumentError(f"grid mismatch: {a.describe()} vs {b.describe()}")


# ---------------------------------------------------------------------------
# Transforms and operators
# ---------------------------------------------------------------------------


def forward(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Unnormalised forward transform to the half spectrum."""
    grid.check(f)
    return _ENGINE.forward(np.asarray(f, dtype=float))


def backward(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward`; returns a real field."""
    grid.check_hat(fh)
    return _ENGINE.backward(fh, grid.shape)


def apply_multiplier(m: Multiplier, f: np.ndarray) -> np.ndarray:
    return backward(m.grid, m.symbol * forward(m.grid, f))


def solve_shifted_hat(m: Multiplier, a: float, b: float, rhs_hat: np.ndarray) -> np.ndarray:
    """Coefficient-space version of :func:`solve_shifted`."""
    den = shifted_denominator(m, a, b)
    return rhs_hat / den


def shifted_denominator(m: Multiplier, a: float, b: float) -> np.ndarray:
    """Symbol of ``a I + b Op(m)``, checked for vanishing entries."""
    den = a + b * m.symbol
    scale = abs(a) + abs(b) * np.abs(m.symbol)
    bad = np.abs(den) <= 1e-14 * np.where(scale > 0, scale, 1.0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        k = (float(m.grid.kx[i]), float(m.grid.ky_half[j]))
        raise SingularOperatorError(
            f"a + b*symbol vanishes at wavenumber (kx, ky) = ({k[0]:g}, {k[1]:g})", wavenumber=k
        )
    return den


def solve_shifted(m: Multiplier, a: float, b: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(a I + b Op(m)) u = rhs`` by division in coefficient space."""
    return backward(m.grid, solve_shifted_hat(m, a, b, forward(m.grid, rhs)))


def gradient_hat(grid: Grid, fh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return backward(grid, grid.ikx * fh), backward(grid, grid.iky * fh)


def gradient(grid: Grid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return gradient_hat(grid, forward(grid, f))


def divergence_hat(grid: Grid, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    """Coefficients of ``d fx/dx + d fy/dy``."""
    return grid.ikx * forward(grid, fx) + grid.iky * forward(grid, fy)


def divergence(grid: Grid, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    return backward(grid, divergence_hat(grid, fx, fy))


def grad_sq(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Pointwise ``|grad f|^2`` from coefficients."""
    gx, gy = gradient_hat(grid, fh)
    return gx * gx + gy * gy


def var_coeff_div_grad(grid: Grid, rho: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``div(rho grad f)``: spectral derivatives, pointwise product."""
    grid.check(rho, "rho")
    gx, gy = gradient(grid, f)
    return divergence(grid, rho * gx, rho * gy)


def integral(grid: Grid, f: np.ndarray) -> float:
    grid.check(f)
    return grid.cell_area * float(np.sum(f))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    grid.check(f)
    grid.check(g)
    return grid.cell_area * float(np.vdot(f, g).real)


def inner_hat(grid: Grid, fh: np.ndarray, gh: np.ndarray, symbol: np.ndarray | None = None) -> float:
    """``inner(f, Op g)`` evaluated from coefficients via Parseval.

    With ``symbol=None`` the operator is the identity.
    """
    prod = (fh.conj() * gh).real
    if symbol is not None:
        prod = prod * symbol
    total = float(np.sum(prod @ grid.parseval_weights))
    return grid.cell_area * total / (grid.nx * grid.ny)


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    """Discrete ``sqrt(hx hy sum f^2)``."""
    return float(np.sqrt(inner(grid, f, f)))
