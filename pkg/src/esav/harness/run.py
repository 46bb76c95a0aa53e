"""Drive one simulation: step, monitor invariants, record traces and snapshots."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .. import spectral as sp
from ..errors import InvariantViolation
from . import io
from .config import RunConfig
from .initial import initial_condition


@dataclass(frozen=True)
class Violation:
    kind: str  # "energy", "mass" or "mass_rho"
    step: int
    t: float
    detail: str


class InvariantMonitor:
    """Per-step modified-energy decay and (for conservative models) mass checks.

    Energy: ``E^{n+1} <= E^n + slack * (1 + |E^n|)``.
    Mass: ``|m^n - m^0| <= tol * (1 + |m^0|)``.
    """

    def __init__(self, energy0: float, masses0: dict[str, float], slack: float, tol: float,
                 check_mass: bool) -> None:
        self.energy = energy0
        self.masses0 = masses0
        self.slack = slack
        self.tol = tol
        self.check_mass = check_mass
        self.violations: list[Violation] = []
        self.max_energy_increase = -np.inf
        self.max_mass_drift = 0.0

    def update(self, step: int, t: float, energy: float, masses: dict[str, float]) -> None:
        rise = energy - self.energy
        self.max_energy_increase = max(self.max_energy_increase, rise / (1.0 + abs(self.energy)))
        if not np.isfinite(energy) or rise > self.slack * (1.0 + abs(self.energy)):
            self.violations.append(
                Violation("energy", step, t, f"modified energy rose from {self.energy:.17g} to {energy:.17g}")
            )
        self.energy = energy
        if not self.check_mass:
            return
        for name, m0 in self.masses0.items():
            drift = abs(masses[name] - m0) / (1.0 + abs(m0))
            self.max_mass_drift = max(self.max_mass_drift, drift)
            if not drift <= self.tol:
                self.violations.append(
                    Violation(name, step, t, f"{name} drifted by {drift:.3e} relative (tolerance {self.tol:g})")
                )


@dataclass
class RunResult:
    config: RunConfig
    state: object
    steps: int
    wall_time: float
    total_solves: int
    max_inner_iters: int
    trace: dict[str, np.ndarray]
    violations: list[Violation] = field(default_factory=list)
    trace_path: Path | None = None
    snapshot_paths: list[Path] = field(default_factory=list)
    max_ledger_residual: float = 0.0
    max_inner_residual: float = 0.0
    max_exponent_arg: float = 0.0
    checked: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def fields(self) -> dict[str, np.ndarray]:
        if hasattr(self.state, "rho"):
            return {"phi": self.state.phi, "rho": self.state.rho}
        return {"phi": self.state.phi}

    def summary(self) -> str:
        lines = [
            f"{self.config.example or 'run'}: {self.config.scheme}, {self.steps} steps of dt={self.config.dt:g} "
            f"to t={self.steps * self.config.dt:g} in {self.wall_time:.2f}s ({self.total_solves} solves)",
        ]
        if not self.checked:
            lines.append("invariant monitors disabled")
        elif self.ok:
            lines.append("invariant monitors passed")
        else:
            lines.append(f"{len(self.violations)} invariant violation(s); first: {self.violations[0].detail}"
                         f" at step {self.violations[0].step}")
        return "\n".join(lines)

    def raise_for_violations(self) -> None:
        if self.violations:
            v = self.violations[0]
            raise InvariantViolation(f"{len(self.violations)} violation(s); first at step {v.step}: {v.detail}")


def _aux_values(integrator, state) -> list[float]:
    return list(integrator.aux(state).values())


def _masses(grid, fields: dict[str, np.ndarray]) -> dict[str, float]:
    out = {"mass": sp.integral(grid, fields["phi"])}
    if "rho" in fields:
        out["mass_rho"] = sp.integral(grid, fields["rho"])
    return out


def run_simulation(
    cfg: RunConfig,
    out_dir: str | Path | None = None,
    *,
    fields: dict[str, np.ndarray] | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> RunResult:
    """Integrate ``cfg`` from t = 0 to ``n_steps * dt``.

    Trace rows are kept in memory every ``trace_every`` steps (plus the first
    and last).  With ``out_dir`` the trace CSV, the snapshots at the steps
    nearest to ``snapshot_times``, the effective config and a JSON summary
    are written there.  Monitor failures are collected, not raised.
    """
    grid = cfg.grid()
    integ = cfg.integrator()
    surf = cfg.is_surfactant
    if fields is None:
        fields = initial_condition(cfg.initial, grid, cfg.seed)
    state = integ.initial_state(fields)
    n = cfg.n_steps
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        io.write_config(out / "config.ini", cfg)

    snaps: dict[int, list[float]] = {}
    for t in cfg.snapshot_times:
        snaps.setdefault(min(n, max(0, round(t / cfg.dt))), []).append(t)
    snapshot_paths: list[Path] = []

    def snapshot(step: int, st) -> None:
        if out is None or step not in snaps:
            return
        for t in snaps[step]:
            for name, arr in integ.fields(st).items():
                snapshot_paths.append(io.write_snapshot(out / io.snapshot_name(name, t), grid, arr, step * cfg.dt))

    e0 = integ.modified_energy(state)
    m0 = _masses(grid, integ.fields(state))
    monitor = InvariantMonitor(e0, m0, cfg.energy_slack, cfg.mass_tol, integ.conserves_mass())
    writer = io.TraceWriter(out / "trace.csv" if out is not None else None, surf)

    def row(step, e_orig, e_mod, aux, masses, iters, solves):
        vals = [step * cfg.dt, e_orig, e_mod, *aux, masses["mass"]]
        if surf:
            vals.append(masses["mass_rho"])
        return tuple(vals + [iters, solves])

    total_solves = 0
    max_iters = 0
    max_ledger = 0.0
    max_inner = 0.0
    max_arg = 0.0
    t0 = time.perf_counter()
    try:
        writer.write(row(0, integ.original_energy(state), e0, _aux_values(integ, state), m0, 0, 0))
        snapshot(0, state)
        for k in range(1, n + 1):
            state, diag = integ.step(state)
            total_solves += diag.linear_solves_performed
            max_iters = max(max_iters, diag.inner_solver_iterations)
            max_arg = max(max_arg, diag.max_exponent_arg)
            if diag.ledger_residual is not None:
                max_ledger = max(max_ledger, diag.ledger_residual)
            if diag.inner_residual is not None:
                max_inner = max(max_inner, diag.inner_residual)
            masses = {"mass": diag.mass}
            if surf:
                masses["mass_rho"] = diag.mass_rho
            if cfg.checks:
                monitor.update(k, k * cfg.dt, diag.modified_energy, masses)
            if k % cfg.trace_every == 0 or k == n:
                writer.write(
                    row(k, diag.original_energy, diag.modified_energy, _aux_values(integ, state),
                        masses, diag.inner_solver_iterations, diag.linear_solves_performed)
                )
            snapshot(k, state)
            if progress is not None:
                progress(k, n)
    finally:
        writer.close()
    wall = time.perf_counter() - t0

    trace = {name: np.array([r[i] for r in writer.rows], dtype=float) for i, name in enumerate(writer.header)}
    result = RunResult(
        config=cfg,
        state=state,
        steps=n,
        wall_time=wall,
        total_solves=total_solves,
        max_inner_iters=max_iters,
        trace=trace,
        violations=monitor.violations,
        trace_path=writer.path,
        snapshot_paths=snapshot_paths,
        max_ledger_residual=max_ledger,
        max_inner_residual=max_inner,
        max_exponent_arg=max_arg,
        checked=cfg.checks,
    )
    if out is not None:
        summary = {
            "example": cfg.example,
            "scheme": cfg.scheme,
            "steps": n,
            "t_final": n * cfg.dt,
            "wall_time_s": wall,
            "total_solves": total_solves,
            "max_inner_iters": max_iters,
            "checks": cfg.checks,
            "max_relative_energy_increase": float(monitor.max_energy_increase),
            "max_relative_mass_drift": monitor.max_mass_drift,
            "violations": [v.__dict__ for v in monitor.violations[:20]],
            "violation_count": len(monitor.violations),
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return result


def integrate(cfg: RunConfig, dt: float | None = None,
              fields: dict[str, np.ndarray] | None = None) -> tuple[object, float, int]:
    """Bare time loop without monitors or traces.

    Returns ``(final state, wall time, total solves)``.
    """
    run_cfg = cfg if dt is None else cfg.with_(dt=dt)
    grid = run_cfg.grid()
    integ = run_cfg.integrator()
    if fields is None:
        fields = initial_condition(run_cfg.initial, grid, run_cfg.seed)
    state = integ.initial_state(fields)
    solves = 0
    step = integ.step
    t0 = time.perf_counter()
    for _ in range(run_cfg.n_steps):
        state, diag = step(state)
        solves += diag.linear_solves_performed
    return state, time.perf_counter() - t0, solves
