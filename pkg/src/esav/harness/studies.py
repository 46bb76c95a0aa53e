"""Convergence ladders, SAV against E-SAV comparisons and energy ladders.

Reference solutions at tiny time steps are expensive (millions of steps), so
they are cached on disk as snapshot files keyed by a hash of every field that
affects the numerical solution plus :data:`ALGORITHM_VERSION`.  The cache
lives in ``$ESAV_CACHE_DIR`` (default ``~/.cache/esav``); set
``ESAV_CACHE_DIR=off`` to disable it.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import models
from .. import spectral as sp
from ..errors import ConfigError, InvariantViolation
from . import io
from .config import RunConfig
from .initial import initial_condition
from .run import RunResult, integrate, run_simulation

#: Bump whenever a scheme change alters results beyond roundoff.
ALGORITHM_VERSION = 2

_PAIRS = {"esav1": "sav1", "sav1": "esav1", "esav-cn": "sav-cn", "sav-cn": "esav-cn"}


# ---------------------------------------------------------------------------
# workers
# ---------------------------------------------------------------------------


def max_workers(jobs: int) -> int:
    """Worker count: ``ESAV_THREADS`` if set, else the CPU count, never more than ``jobs``."""
    env = os.environ.get("ESAV_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"ESAV_THREADS must be an integer, got {env!r}", field="ESAV_THREADS") from None
        if cap < 1:
            raise ConfigError("ESAV_THREADS must be >= 1", field="ESAV_THREADS")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, jobs))


def _map(fn, items: list, workers: int | None = None) -> list:
    workers = max_workers(len(items)) if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# reference solutions
# ---------------------------------------------------------------------------


def cache_dir() -> Path | None:
    env = os.environ.get("ESAV_CACHE_DIR", "").strip()
    if env.lower() == "off":
        return None
    return Path(env).expanduser() if env else Path.home() / ".cache" / "esav"


def reference_key(cfg: RunConfig) -> str:
    payload = {"version": ALGORITHM_VERSION, **cfg.physics_key()}
    blob = json.dumps(payload, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def _field_names(cfg: RunConfig) -> tuple[str, ...]:
    return ("phi", "rho") if cfg.is_surfactant else ("phi",)


def reference_solution(cfg: RunConfig, reference_dt: float, use_cache: bool = True) -> dict[str, np.ndarray]:
    """Final fields of ``cfg`` integrated with ``reference_dt`` (cached)."""
    ref_cfg = cfg.with_(dt=reference_dt)
    _require_integral(ref_cfg)
    where = cache_dir() if use_cache else None
    key = reference_key(ref_cfg)
    paths = {n: where / f"{key}.{n}.snap" for n in _field_names(cfg)} if where else {}
    if paths and all(p.exists() for p in paths.values()):
        return {n: io.read_snapshot(p)[1] for n, p in paths.items()}
    state, _, _ = integrate(ref_cfg)
    out = {"phi": state.phi}
    if cfg.is_surfactant:
        out["rho"] = state.rho
    if paths:
        grid = ref_cfg.grid()
        for n, p in paths.items():
            io.write_snapshot(p, grid, out[n], ref_cfg.n_steps * reference_dt)
        meta = where / f"{key}.json"
        meta.write_text(json.dumps(ref_cfg.physics_key(), indent=2, default=repr) + "\n", encoding="utf-8")
    return out


def exact_linear_solution(cfg: RunConfig) -> dict[str, np.ndarray]:
    """``exp(t G L)`` applied to the initial datum of a linear-test config."""
    if cfg.model != "linear-test":
        raise ConfigError("an exact solution is only available for the linear-test model", field="model")
    grid = cfg.grid()
    model = cfg.model_spec()
    phi0 = initial_condition(cfg.initial, grid, cfg.seed)["phi"]
    gl = models.g_symbol(model, grid).symbol * models.l_symbol(model, grid).symbol
    t = cfg.n_steps * cfg.dt
    return {"phi": sp.backward(grid, np.exp(t * gl) * sp.forward(grid, phi0))}


def _require_integral(cfg: RunConfig) -> None:
    ratio = cfg.t_final / cfg.dt
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ConfigError(
            f"t_final = {cfg.t_final:g} is not a whole number of steps of dt = {cfg.dt:g}", field="dt"
        )


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------


def rates(dts, errors) -> list[float | None]:
    """``ln(e_i / e_{i+1}) / ln(dt_i / dt_{i+1})`` with ``None`` in the first row."""
    out: list[float | None] = [None]
    for i in range(1, len(dts)):
        e0, e1 = errors[i - 1], errors[i]
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(dts[i - 1] / dts[i]))
        else:
            out.append(float("nan"))
    return out


@dataclass
class ConvergenceReport:
    scheme: str
    dts: list[float]
    errors: dict[str, list[float]]
    rates: dict[str, list[float | None]]
    reference_dt: float | None
    wall_times: list[float] = field(default_factory=list)
    solves: list[int] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when no ladder run tripped an invariant monitor."""
        return not self.violations

    def rows(self) -> list[tuple]:
        names = list(self.errors)
        return [
            (dt, *[self.errors[n][i] for n in names], *[self.rates[n][i] for n in names])
            for i, dt in enumerate(self.dts)
        ]

    def table(self) -> str:
        names = list(self.errors)
        head = f"{'dt':>10}" + "".join(f"{'error_' + n:>14}{'rate_' + n:>10}" for n in names)
        lines = [f"{self.scheme} (reference dt = {self.reference_dt if self.reference_dt else 'exact'})", head]
        for i, dt in enumerate(self.dts):
            cells = ""
            for n in names:
                r = self.rates[n][i]
                cells += f"{self.errors[n][i]:>14.4e}{'---' if r is None else f'{r:.4f}':>10}"
            lines.append(f"{dt:>10.3g}{cells}")
        return "\n".join(lines)


def _ladder_job(args):
    cfg, dt = args
    run_cfg = cfg.with_(dt=dt, snapshot_times=())
    res = run_simulation(run_cfg.with_(trace_every=run_cfg.n_steps))
    return res.fields, res.wall_time, res.total_solves, res.violations


def convergence_study(
    cfg: RunConfig,
    ladder=None,
    reference_dt: float | None = None,
    *,
    out_csv: str | Path | None = None,
    use_cache: bool = True,
    workers: int | None = None,
) -> ConvergenceReport:
    """Errors at ``t_final`` against a reference run, for each ``dt`` in ``ladder``.

    The reference uses the same scheme at ``reference_dt``.  For the
    linear-test model ``reference_dt=None`` compares with the exact solution.
    Ladder and reference default to the config's ``ladder`` and ``reference_dt``.
    """
    ladder = list(cfg.ladder if ladder is None else ladder)
    if not ladder:
        raise ConfigError("empty time-step ladder", field="ladder")
    reference_dt = cfg.reference_dt if reference_dt is None else reference_dt
    for dt in ladder:
        _require_integral(cfg.with_(dt=dt))
    if reference_dt is None:
        ref = exact_linear_solution(cfg)
    else:
        ref = reference_solution(cfg, reference_dt, use_cache=use_cache)
    grid = cfg.grid()
    results = _map(_ladder_job, [(cfg, dt) for dt in ladder], workers)
    errors = {n: [sp.l2_norm(grid, res[0][n] - ref[n]) for res in results] for n in ref}
    report = ConvergenceReport(
        scheme=cfg.scheme,
        dts=ladder,
        errors=errors,
        rates={n: rates(ladder, errors[n]) for n in errors},
        reference_dt=reference_dt,
        wall_times=[res[1] for res in results],
        solves=[res[2] for res in results],
        steps=[cfg.with_(dt=dt).n_steps for dt in ladder],
        violations=[(dt, v) for dt, res in zip(ladder, results) for v in res[3]],
    )
    if out_csv is not None:
        io.write_convergence(out_csv, report)
    return report


@dataclass
class Comparison:
    esav: ConvergenceReport
    sav: ConvergenceReport

    def solves_per_step(self) -> tuple[list[float], list[float]]:
        """Average constant-coefficient solves per step for E-SAV and SAV."""
        def per(rep: ConvergenceReport) -> list[float]:
            return [s / n for s, n in zip(rep.solves, rep.steps)]

        return per(self.esav), per(self.sav)

    def table(self) -> str:
        lines = [f"{'dt':>10}{'err E-SAV':>14}{'err SAV':>14}{'wall E-SAV':>12}{'wall SAV':>12}"
                 f"{'solves E-SAV':>14}{'solves SAV':>12}"]
        for i, dt in enumerate(self.esav.dts):
            lines.append(
                f"{dt:>10.3g}{self.esav.errors['phi'][i]:>14.4e}{self.sav.errors['phi'][i]:>14.4e}"
                f"{self.esav.wall_times[i]:>12.3f}{self.sav.wall_times[i]:>12.3f}"
                f"{self.esav.solves[i]:>14d}{self.sav.solves[i]:>12d}"
            )
        return "\n".join(lines)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["dt,error_esav,error_sav,wall_esav,wall_sav,solves_esav,solves_sav"]
        for i, dt in enumerate(self.esav.dts):
            lines.append(",".join(io.fmt(v) for v in (
                dt, self.esav.errors["phi"][i], self.sav.errors["phi"][i],
                self.esav.wall_times[i], self.sav.wall_times[i],
                self.esav.solves[i], self.sav.solves[i])))
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
        return path


def compare_sav_esav(
    cfg: RunConfig,
    ladder=None,
    reference_dt: float | None = None,
    *,
    out_dir: str | Path | None = None,
    use_cache: bool = True,
    workers: int | None = None,
) -> Comparison:
    """Run the E-SAV scheme of ``cfg`` and its SAV counterpart of the same order.

    Raises :class:`InvariantViolation` unless E-SAV performed fewer linear
    solves than SAV at every ladder entry.
    """
    if cfg.scheme not in _PAIRS:
        raise ConfigError(f"scheme {cfg.scheme!r} has no SAV/E-SAV counterpart", field="scheme")
    esav_scheme = cfg.scheme if cfg.scheme.startswith("esav") else _PAIRS[cfg.scheme]
    sav_scheme = _PAIRS[esav_scheme]
    esav_cfg = cfg.with_(scheme=esav_scheme, c=None)
    sav_cfg = cfg.with_(scheme=sav_scheme, c=None)
    out = Path(out_dir) if out_dir is not None else None
    kw = dict(ladder=ladder, reference_dt=reference_dt, use_cache=use_cache, workers=workers)
    rep_e = convergence_study(esav_cfg, out_csv=out / f"convergence_{esav_scheme}.csv" if out else None, **kw)
    rep_s = convergence_study(sav_cfg, out_csv=out / f"convergence_{sav_scheme}.csv" if out else None, **kw)
    comp = Comparison(rep_e, rep_s)
    if out is not None:
        comp.write_csv(out / "comparison.csv")
        io.write_config(out / "config.ini", esav_cfg)
    for i, dt in enumerate(rep_e.dts):
        if not rep_e.solves[i] < rep_s.solves[i]:
            raise InvariantViolation(
                f"E-SAV used {rep_e.solves[i]} solves vs {rep_s.solves[i]} for SAV at dt={dt:g}"
            )
    return comp


# ---------------------------------------------------------------------------
# energy ladder
# ---------------------------------------------------------------------------


def _energy_job(args):
    cfg, out = args
    return run_simulation(cfg, out)


def energy_ladder(
    cfg: RunConfig,
    dts=None,
    *,
    out_dir: str | Path | None = None,
    workers: int | None = None,
) -> dict[float, RunResult]:
    """Run ``cfg`` at each ``dt`` with monitors on; one trace CSV per ``dt``.

    Snapshots are not written.  Results are returned even when a monitor
    fails; check :attr:`RunResult.ok`.
    """
    dts = list(cfg.energy_dts if dts is None else dts)
    if not dts:
        raise ConfigError("empty time-step set", field="energy_dts")
    out = Path(out_dir) if out_dir is not None else None
    jobs = [
        (cfg.with_(dt=dt, snapshot_times=(), checks=True), out / f"dt_{dt:g}" if out else None)
        for dt in dts
    ]
    results = _map(_energy_job, jobs, workers)
    return dict(zip(dts, results))
