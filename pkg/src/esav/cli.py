"""Command line front end.

Verbs: ``run``, ``convergence``, ``compare``, ``energy-ladder`` and
``list-examples``.  A run is described by an optional ``--example`` preset,
an optional INI-style ``--config`` file, the explicit flags and finally any
``key=value`` overrides, applied in that order.  The effective config is
written to the output directory.

Exit status is 0 only if every requested run finished and every invariant
monitor passed; otherwise it is the ``exit_code`` of the error raised
(see :mod:`esav.errors`), 2 for usage errors and 1 for anything unexpected.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, EsavError, InvariantViolation
from .harness import io
from .harness.config import PRESETS, RunConfig, coerce_value, preset
from .harness.run import run_simulation
from .harness.studies import compare_sav_esav, convergence_study, energy_ladder

VERBS = ("run", "convergence", "compare", "energy-ladder", "list-examples")


def parse_config(path: str | Path | None = None, overrides: dict[str, str] | None = None,
                 base: RunConfig | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from a file and text overrides.

    Values in the file replace those of ``base`` (or of the preset named by the
    file's ``example`` key); ``overrides`` are applied last.  Errors carry the
    offending field and, for file values, the line number.
    """
    cfg = base if base is not None else RunConfig()
    lines: dict[str, int] = {}
    if path is not None:
        pairs, lines = io.read_config_pairs(path)
        if "example" in pairs:
            name = coerce_value("example", pairs.pop("example"))
            if name is not None:
                if base is not None and base.example not in (None, name):
                    raise ConfigError(
                        f"{path}:{lines.get('example')}: example {name!r} conflicts with {base.example!r}",
                        field="example",
                        line=lines.get("example"),
                    )
                cfg = preset(name)
        cfg = _apply(cfg, pairs, lines, str(path))
    if overrides:
        cfg = _apply(cfg, overrides, {}, None)
    return cfg


def _apply(cfg: RunConfig, pairs: dict[str, str], lines: dict[str, int], source: str | None) -> RunConfig:
    values = {}
    for key, raw in pairs.items():
        try:
            values[key] = coerce_value(key, raw)
        except ConfigError as exc:
            raise _located(exc, key, lines, source) from None
    try:
        return cfg.with_(**values)
    except ConfigError as exc:
        raise _located(exc, exc.field, lines, source) from None


def _located(exc: ConfigError, key: str | None, lines: dict[str, int], source: str | None) -> ConfigError:
    line = lines.get(key) if key else None
    where = f"{source}:{line}: " if source and line else (f"{source}: " if source else "")
    return ConfigError(f"{where}{exc}", field=key, line=line)


def _split_overrides(items: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        out[key.strip().replace("-", "_")] = value
    return out


def _floats(text: str) -> tuple[float, ...]:
    return coerce_value("ladder", text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI-style file of key = value lines")
    common.add_argument("--example", metavar="ID", help="start from a preset (see list-examples)")
    common.add_argument("--scheme", metavar="ID", help="esav1, esav-cn, sav1, sav-cn or mesav1")
    common.add_argument("--dt", type=float, metavar="X", help="time step")
    common.add_argument("--t-final", type=float, metavar="X", help="final time")
    common.add_argument("--seed", type=int, metavar="N", help="64-bit seed for random data")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--no-checks", action="store_true", help="disable the invariant monitors")
    common.add_argument("overrides", nargs="*", metavar="KEY=VALUE", help="config overrides")

    parser = argparse.ArgumentParser(prog="esav", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")
    sub.add_parser("run", parents=[common], help="integrate one configuration")
    for name, text in (("convergence", "time-step convergence ladder"),
                       ("compare", "E-SAV against SAV on a convergence ladder")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--ladder", type=_floats, metavar="DT,DT,...", help="time steps")
        p.add_argument("--reference-dt", type=float, metavar="X", help="reference time step")
    p = sub.add_parser("energy-ladder", parents=[common], help="energy traces for several time steps")
    p.add_argument("--dts", type=_floats, metavar="DT,DT,...", help="time steps")
    sub.add_parser("list-examples", help="show the example presets")
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    """Effective config: preset, then file, then flags, then overrides."""
    base = preset(args.example) if args.example else None
    cfg = parse_config(args.config, None, base)
    flags = {}
    if args.scheme is not None:
        flags["scheme"] = args.scheme
    if args.dt is not None:
        flags["dt"] = args.dt
    if args.t_final is not None:
        flags["t_final"] = args.t_final
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.no_checks:
        flags["checks"] = False
    if flags:
        cfg = cfg.with_(**flags)
    overrides = _split_overrides(args.overrides)
    if overrides:
        cfg = parse_config(None, overrides, cfg)
    return cfg


def _out_dir(args, cfg: RunConfig, verb: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path("esav-out") / f"{cfg.example or 'run'}-{cfg.scheme}-{verb}"


def _report_violations(violations, checks: bool) -> int:
    if not checks or not violations:
        return 0
    dt, v = violations[0]
    print(f"invariant check failed ({len(violations)} violation(s)); first at dt={dt:g}, step {v.step}: {v.detail}",
          file=sys.stderr)
    return InvariantViolation.exit_code


def _cmd_run(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg, "run")
    res = run_simulation(cfg, out)
    print(res.summary())
    print(f"output written to {out}")
    return _report_violations([(cfg.dt, v) for v in res.violations], cfg.checks)


def _cmd_convergence(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg, "convergence")
    io.write_config(out / "config.ini", cfg)
    rep = convergence_study(cfg, args.ladder, args.reference_dt, out_csv=out / "convergence.csv")
    print(rep.table())
    print(f"output written to {out}")
    return _report_violations(rep.violations, cfg.checks)


def _cmd_compare(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg, "compare")
    comp = compare_sav_esav(cfg, args.ladder, args.reference_dt, out_dir=out)
    print(comp.esav.table())
    print(comp.sav.table())
    print(comp.table())
    print(f"output written to {out}")
    return _report_violations(comp.esav.violations + comp.sav.violations, cfg.checks)


def _cmd_energy_ladder(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg, "energy-ladder")
    io.write_config(out / "config.ini", cfg)
    results = energy_ladder(cfg, args.dts, out_dir=out)
    bad = []
    for dt, res in results.items():
        e = res.trace["E_modified"]
        print(f"dt={dt:<8g} steps={res.steps:<8d} E: {e[0]:.10g} -> {e[-1]:.10g}  "
              f"{'ok' if res.ok else 'FAILED'}")
        bad += [(dt, v) for v in res.violations]
    print(f"output written to {out}")
    return _report_violations(bad, True)


def _cmd_list() -> int:
    width = max(len(k) for k in PRESETS)
    for name, p in PRESETS.items():
        c = p.config
        print(f"{name:<{width}}  {c.model:<13} {c.scheme:<8} {c.nx}x{c.ny}  dt={c.dt:g}  T={c.t_final:g}  "
              f"{p.description}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "list-examples":
        return _cmd_list()
    try:
        cfg = resolve(args)
        handler = {
            "run": _cmd_run,
            "convergence": _cmd_convergence,
            "compare": _cmd_compare,
            "energy-ladder": _cmd_energy_ladder,
        }[args.verb]
        return handler(args, cfg)
    except EsavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
