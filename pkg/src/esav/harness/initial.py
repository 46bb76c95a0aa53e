"""Initial data for the example problems and the seeded uniform generator.

Random fields come from SplitMix64: the ``i``-th draw of a stream with seed
``s`` is ``mix(s + (i + 1) * 0x9E3779B97F4A7C15)`` mod 2**64, so a whole field
is produced by one vectorised pass and the values depend only on the seed and
the draw index.  The top 53 bits give a double in ``[0, 1)`` which is mapped
to ``[-1, 1)``.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..spectral import Grid

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """Draws ``offset .. offset + n - 1`` of the SplitMix64 stream for ``seed``."""
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must fit in 64 unsigned bits, got {seed}", field="seed")
    idx = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def uniform(seed: int, shape: tuple[int, ...], offset: int = 0) -> np.ndarray:
    """Uniform values in ``[-1, 1)`` of the given shape, row-major draw order."""
    n = int(np.prod(shape))
    bits = splitmix64(seed, n, offset) >> np.uint64(11)
    u = bits.astype(np.float64) * (1.0 / 9007199254740992.0)
    return (2.0 * u - 1.0).reshape(shape)


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


def _example1(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    x, y = grid.mesh()
    return {"phi": 0.05 * np.sin(x) * np.sin(y)}


def two_bubbles(grid: Grid, epsilon: float = 0.01, radius: float = 0.19,
                centers=((0.3, 0.5), (0.7, 0.5))) -> np.ndarray:
    """``1 + sum_i -tanh((|x - x_i| - R0) / (sqrt(2) eps))``."""
    x, y = grid.mesh()
    phi = np.ones(grid.shape)
    for cx, cy in centers:
        d = np.hypot(x - cx, y - cy)
        phi -= np.tanh((d - radius) / (math.sqrt(2.0) * epsilon))
    return phi


def _example2(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    return {"phi": two_bubbles(grid)}


def _example3(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    return {"phi": 0.25 + 0.4 * uniform(seed, grid.shape)}


def crystallites(grid: Grid, phi_bar: float = 0.285, amp: float = 0.446, q: float = 0.66,
                 side: float = 40.0,
                 patches=((150.0, 150.0, math.pi / 4), (200.0, 250.0, 0.0),
                          (250.0, 150.0, -math.pi / 4))) -> np.ndarray:
    """Constant density ``phi_bar`` with hexagonal crystallites in square patches."""
    x, y = grid.mesh()
    phi = np.full(grid.shape, phi_bar)
    half = 0.5 * side
    for cx, cy, th in patches:
        mask = (np.abs(x - cx) <= half) & (np.abs(y - cy) <= half)
        xl = x * math.sin(th) + y * math.cos(th)
        yl = -x * math.cos(th) + y * math.sin(th)
        lattice = np.cos(q / math.sqrt(3.0) * yl) * np.cos(q * xl) - 0.5 * np.cos(
            2.0 * q / math.sqrt(3.0) * yl
        )
        phi = np.where(mask, phi_bar + amp * lattice, phi)
    return phi


def _example4(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    return {"phi": crystallites(grid)}


def _example5(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    u = uniform(seed, grid.shape)
    u -= u.mean()
    return {"phi": 0.07 + 0.07 * u}


def _example6(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    x, y = grid.mesh()
    return {
        "phi": 0.3 * np.cos(3 * x) + 0.5 * np.cos(y),
        "rho": 0.2 * np.cos(2 * x) + 0.25 * np.sin(y),
    }


def _example7(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    n = grid.nx * grid.ny
    return {
        "phi": 0.001 * uniform(seed, grid.shape),
        "rho": 0.2 + 0.001 * uniform(seed, grid.shape, offset=n),
    }


def _sin_x(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    x, _ = grid.mesh()
    return {"phi": np.sin(2 * math.pi * x / grid.lx)}


def _zero(grid: Grid, seed: int) -> dict[str, np.ndarray]:
    return {"phi": np.zeros(grid.shape)}


INITIAL_CONDITIONS: dict[str, Callable[[Grid, int], dict[str, np.ndarray]]] = {
    "example1": _example1,
    "example2": _example2,
    "example3": _example3,
    "example4": _example4,
    "example5": _example5,
    "example6": _example6,
    "example7": _example7,
    "sin-x": _sin_x,
    "zero": _zero,
}


def initial_condition(name: str, grid: Grid, seed: int = 0) -> dict[str, np.ndarray]:
    """Fields ``{'phi': ...}`` (plus ``'rho'`` for the surfactant data)."""
    try:
        make = INITIAL_CONDITIONS[name]
    except KeyError:
        raise ConfigError(
            f"unknown initial condition {name!r}; choose from {', '.join(INITIAL_CONDITIONS)}",
            field="initial",
        ) from None
    return make(grid, seed)
