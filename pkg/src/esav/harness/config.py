"""Run configuration and the catalogue of example presets.

A :class:`RunConfig` is a flat, immutable record so that it maps one-to-one
onto the ``key = value`` config files read by the command line front end and
echoed next to every run's output.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

from ..errors import ConfigError, EsavError
from ..models import ModelSpec, SurfactantSpec, ModelKind
from ..schemes import SCHEMES, Integrator, SolverConfig
from ..spectral import Grid

TWO_PI = 2.0 * math.pi

MODELS = ("allen-cahn", "cahn-hilliard", "pfc", "linear-test", "surfactant")

# relative tolerance when deciding whether t_final / dt is an integer
_STEP_ROUNDING = 1e-9


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation.

    Surfactant parameters are ignored by the scalar models and vice versa;
    ``epsilon`` is shared.  ``c`` is the E-SAV scale or the SAV shift (``None``
    selects the scheme default).  ``ladder``, ``reference_dt`` and
    ``energy_dts`` are only read by the study drivers.
    """

    example: str | None = None
    model: str = "allen-cahn"
    scheme: str = "esav1"
    initial: str = "example1"
    nx: int = 128
    ny: int = 128
    lx: float = TWO_PI
    ly: float = TWO_PI
    epsilon: float = 0.1
    mobility: float = 1.0
    pfc_epsilon: float = 0.25
    m_phi: float = 2.5e-4
    m_rho: float = 2.5e-4
    alpha: float = 2.5e-4
    beta: float = 1.0
    theta: float = 0.3
    eta: float = 0.08
    rho_s: float = 1.0
    dt: float = 1.6e-4
    t_final: float = 0.032
    c: float | None = None
    seed: int = 0
    snapshot_times: tuple[float, ...] = ()
    trace_every: int = 1
    checks: bool = True
    solver_tol: float = 1e-11
    solver_max_iters: int = 200
    energy_slack: float = 1e-8
    mass_tol: float = 1e-12
    ladder: tuple[float, ...] = ()
    reference_dt: float | None = None
    energy_dts: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        self.validate()

    # -- validation -------------------------------------------------------

    def validate(self) -> None:
        def bad(name: str, why: str):
            raise ConfigError(f"{name}: {why}", field=name)

        if self.model not in MODELS:
            bad("model", f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.scheme not in SCHEMES:
            bad("scheme", f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if (self.model == "surfactant") != (self.scheme == "mesav1"):
            bad("scheme", f"scheme {self.scheme!r} cannot integrate the {self.model} model")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                bad(name, f"must be an even integer >= 4, got {n}")
        positive = ("lx", "ly", "epsilon", "mobility", "m_phi", "m_rho", "beta", "eta", "solver_tol")
        for name in positive:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                bad(name, f"must be positive, got {v!r}")
        for name in ("alpha", "theta", "pfc_epsilon", "rho_s", "energy_slack", "mass_tol"):
            v = getattr(self, name)
            if not math.isfinite(v) or (name in ("alpha", "energy_slack", "mass_tol") and v < 0):
                bad(name, f"invalid value {v!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            bad("dt", f"must be positive, got {self.dt!r}")
        if not (math.isfinite(self.t_final) and self.t_final > 0):
            bad("t_final", f"must be positive, got {self.t_final!r}")
        if self.t_final < self.dt * (1 - _STEP_ROUNDING):
            bad("dt", f"dt = {self.dt:g} exceeds t_final = {self.t_final:g}")
        if self.c is not None and not math.isfinite(self.c):
            bad("c", f"must be finite, got {self.c!r}")
        if self.c is not None and self.scheme.startswith("esav") and self.c <= 0:
            bad("c", f"the E-SAV scale must be positive, got {self.c!r}")
        if not 0 <= self.seed < 2**64:
            bad("seed", f"must fit in 64 unsigned bits, got {self.seed}")
        for t in self.snapshot_times:
            if not 0 <= t <= self.t_final:
                bad("snapshot_times", f"time {t:g} is outside [0, {self.t_final:g}]")
        if self.trace_every < 1:
            bad("trace_every", f"must be >= 1, got {self.trace_every}")
        if self.solver_max_iters < 1:
            bad("solver_max_iters", f"must be >= 1, got {self.solver_max_iters}")
        for name in ("ladder", "energy_dts"):
            if any(not (math.isfinite(v) and v > 0) for v in getattr(self, name)):
                bad(name, "entries must be positive")
        if self.reference_dt is not None and not self.reference_dt > 0:
            bad("reference_dt", f"must be positive, got {self.reference_dt!r}")

    # -- derived objects --------------------------------------------------

    @property
    def is_surfactant(self) -> bool:
        return self.model == "surfactant"

    @property
    def n_steps(self) -> int:
        """Number of uniform steps; ``t_final / dt`` rounded up unless it is an integer."""
        ratio = self.t_final / self.dt
        near = round(ratio)
        if near >= 1 and abs(ratio - near) <= _STEP_ROUNDING * ratio:
            return int(near)
        return max(1, math.ceil(ratio))

    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly)

    def model_spec(self) -> ModelSpec | SurfactantSpec:
        if self.is_surfactant:
            return SurfactantSpec(
                m_phi=self.m_phi,
                m_rho=self.m_rho,
                alpha=self.alpha,
                beta=self.beta,
                theta=self.theta,
                epsilon=self.epsilon,
                eta=self.eta,
                rho_s=self.rho_s,
            )
        return ModelSpec(
            ModelKind(self.model),
            mobility=self.mobility,
            epsilon=self.epsilon,
            pfc_epsilon=self.pfc_epsilon,
        )

    def solver(self) -> SolverConfig:
        return SolverConfig(tol=self.solver_tol, max_iters=self.solver_max_iters)

    def integrator(self, dt: float | None = None) -> Integrator:
        return Integrator(
            self.scheme,
            self.model_spec(),
            self.grid(),
            self.dt if dt is None else dt,
            c=self.c,
            solver=self.solver(),
        )

    # -- conversion -------------------------------------------------------

    def with_(self, **changes) -> "RunConfig":
        """Copy with ``changes``; preset snapshot times past a new ``t_final`` are dropped."""
        if "t_final" in changes and "snapshot_times" not in changes:
            t_end = changes["t_final"]
            changes["snapshot_times"] = tuple(t for t in self.snapshot_times if t <= t_end)
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def physics_key(self) -> dict:
        """Fields that determine the numerical solution (output options removed)."""
        d = self.to_dict()
        for name in ("example", "snapshot_times", "trace_every", "checks", "energy_slack",
                     "mass_tol", "ladder", "reference_dt", "energy_dts"):
            d.pop(name)
        return d

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def _coerce(name: str, typ: str, raw: str):
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    try:
        if typ == "int":
            return int(text, 0)
        if typ == "float":
            return float(text)
        if typ == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ == "optfloat":
            return None if text.lower() in ("", "none", "default") else float(text)
        if typ == "optstr":
            return None if text.lower() in ("", "none") else text
        if typ == "floats":
            parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
            return tuple(float(p) for p in parts)
        return text
    except ValueError:
        raise ConfigError(f"{name}: cannot read {raw.strip()!r} as {typ}", field=name) from None


_TYPES = {
    "example": "optstr",
    "model": "str",
    "scheme": "str",
    "initial": "str",
    "nx": "int",
    "ny": "int",
    "seed": "int",
    "trace_every": "int",
    "solver_max_iters": "int",
    "checks": "bool",
    "c": "optfloat",
    "reference_dt": "optfloat",
    "snapshot_times": "floats",
    "ladder": "floats",
    "energy_dts": "floats",
}


def coerce_value(name: str, raw: str):
    """Parse the text form of field ``name``; unknown names are errors."""
    if name not in RunConfig.field_names():
        raise ConfigError(f"unknown key {name!r}", field=name)
    return _coerce(name, _TYPES.get(name, "float"), raw)


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def apply_overrides(cfg: RunConfig, pairs: dict[str, str]) -> RunConfig:
    """Apply text ``key -> value`` pairs; ``example`` resets to that preset first."""
    pairs = dict(pairs)
    if "example" in pairs:
        name = coerce_value("example", pairs.pop("example"))
        if name is not None:
            cfg = preset(name)
    values = {k: coerce_value(k, v) for k, v in pairs.items()}
    try:
        return cfg.with_(**values)
    except EsavError:
        raise
    except (TypeError, ValueError) as exc:  # pragma: no cover - defensive
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

TABLE1_LADDER = (1.6e-4, 8e-5, 4e-5, 2e-5, 1e-5)
TABLE3_LADDER = (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4)


@dataclass(frozen=True)
class Preset:
    description: str
    config: RunConfig = field(repr=False)


def _presets() -> dict[str, Preset]:
    ex1 = RunConfig(
        example="example1",
        model="allen-cahn",
        scheme="esav1",
        initial="example1",
        epsilon=0.1,
        mobility=1.0,
        dt=1.6e-4,
        t_final=0.032,
        ladder=TABLE1_LADDER,
        reference_dt=1e-8,
    )
    ex1_ch = ex1.with_(example="example1-ch", model="cahn-hilliard", scheme="esav-cn", mobility=0.1)
    ex2 = RunConfig(
        example="example2",
        model="allen-cahn",
        scheme="esav1",
        initial="example2",
        nx=256,
        ny=256,
        lx=1.0,
        ly=1.0,
        epsilon=0.01,
        mobility=1.0,
        dt=1e-3,
        t_final=6.0,
        trace_every=10,
        snapshot_times=(0.0, 0.02, 0.5, 1.5, 4.0, 5.6),
        energy_dts=(1e-3, 1e-2, 0.1, 1.0, 2.0),
    )
    ex3 = RunConfig(
        example="example3",
        model="cahn-hilliard",
        scheme="esav1",
        initial="example3",
        nx=256,
        ny=256,
        epsilon=0.02,
        mobility=0.1,
        dt=0.01,
        t_final=20.0,
        trace_every=10,
        snapshot_times=(0.02, 0.5, 3.0, 20.0),
    )
    ex4 = RunConfig(
        example="example4",
        model="pfc",
        scheme="esav1",
        initial="example4",
        nx=512,
        ny=512,
        lx=800.0,
        ly=800.0,
        mobility=1.0,
        pfc_epsilon=0.25,
        dt=0.1,
        t_final=1200.0,
        trace_every=10,
        snapshot_times=(0.0, 150.0, 400.0, 600.0, 900.0, 1200.0),
        energy_dts=(0.01, 0.1, 1.0),
    )
    ex4r = ex4.with_(
        example="example4-reduced",
        nx=256,
        ny=256,
        lx=400.0,
        ly=400.0,
        t_final=300.0,
        snapshot_times=(0.0, 150.0, 300.0),
    )
    ex5 = RunConfig(
        example="example5",
        model="pfc",
        scheme="esav1",
        initial="example5",
        nx=256,
        ny=256,
        lx=128.0,
        ly=128.0,
        mobility=1.0,
        pfc_epsilon=0.025,
        dt=0.1,
        t_final=6000.0,
        trace_every=100,
        snapshot_times=(200.0, 500.0, 1200.0, 6000.0),
    )
    ex6 = RunConfig(
        example="example6",
        model="surfactant",
        scheme="mesav1",
        initial="example6",
        epsilon=0.05,
        eta=0.08,
        dt=1e-2,
        t_final=0.1,
        ladder=TABLE3_LADDER,
        reference_dt=1e-5,
    )
    ex7 = ex6.with_(
        example="example7",
        initial="example7",
        epsilon=0.02,
        eta=0.005,
        dt=0.1,
        t_final=2000.0,
        trace_every=10,
        snapshot_times=(1.0, 10.0, 20.0, 50.0, 100.0, 200.0, 400.0, 1000.0, 1500.0, 2000.0),
        ladder=(),
        reference_dt=None,
    )
    ex7s = ex7.with_(example="example7-short", t_final=100.0, snapshot_times=(1.0, 10.0, 20.0, 50.0, 100.0))
    return {
        "example1": Preset("Allen-Cahn, 0.05 sin x sin y, first-order convergence ladder", ex1),
        "example1-ch": Preset("Cahn-Hilliard on the same datum, Crank-Nicolson ladder", ex1_ch),
        "example2": Preset("Allen-Cahn, two kissing bubbles on the unit square", ex2),
        "example3": Preset("Cahn-Hilliard spinodal decomposition, 256^2, to t = 20", ex3),
        "example4": Preset("phase field crystal growth, [0,800]^2, 512^2, to t = 1200 (long)", ex4),
        "example4-reduced": Preset("phase field crystal growth, [0,400]^2, 256^2, to t = 300", ex4r),
        "example5": Preset("phase field crystal from a noisy state, [0,128]^2, to t = 6000 (long)", ex5),
        "example6": Preset("fluid-surfactant system, smooth datum, first-order ladder", ex6),
        "example7": Preset("fluid-surfactant spinodal decomposition, to t = 2000 (long)", ex7),
        "example7-short": Preset("fluid-surfactant spinodal decomposition, to t = 100", ex7s),
    }


PRESETS: dict[str, Preset] = _presets()


def preset(name: str) -> RunConfig:
    try:
        return PRESETS[name].config
    except KeyError:
        raise ConfigError(
            f"unknown example {name!r}; choose from {', '.join(PRESETS)}", field="example"
        ) from None
