"""Trace and convergence CSV files, binary snapshots and config echoes."""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InvalidArgumentError
from ..spectral import Grid

SNAPSHOT_MAGIC = "ESAVSNAP"
SNAPSHOT_VERSION = "v1"


def fmt(x) -> str:
    """Shortest text that keeps 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def trace_header(surfactant: bool) -> list[str]:
    if surfactant:
        return ["t", "E_original", "E_modified", "s_r", "s_q", "mass", "mass_rho",
                "inner_iters", "solves"]
    return ["t", "E_original", "E_modified", "s_r", "mass", "inner_iters", "solves"]


class TraceWriter:
    """Streams trace rows to a CSV file (or just keeps them when ``path`` is None)."""

    def __init__(self, path: str | os.PathLike | None, surfactant: bool) -> None:
        self.header = trace_header(surfactant)
        self.rows: list[tuple] = []
        self.path = Path(path) if path is not None else None
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="ascii", newline="\n")
            self._fh.write(",".join(self.header) + "\n")

    def write(self, row: tuple) -> None:
        if len(row) != len(self.header):
            raise InvalidArgumentError(f"trace row has {len(row)} entries, expected {len(self.header)}")
        self.rows.append(row)
        if self._fh is not None:
            self._fh.write(",".join(fmt(v) for v in row) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Columns of a trace CSV keyed by header name."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name]) for name in data.dtype.names}


def write_convergence(path: str | os.PathLike, report) -> Path:
    """Write ``dt,error_phi[,error_rho],rate_phi[,rate_rho]``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(report.errors)
    header = ["dt"] + [f"error_{n}" for n in names] + [f"rate_{n}" for n in names]
    lines = [",".join(header)]
    for i, dt in enumerate(report.dts):
        cols = [fmt(dt)]
        cols += [fmt(report.errors[n][i]) for n in names]
        cols += [fmt(report.rates[n][i]) for n in names]
        lines.append(",".join(cols))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def write_snapshot(path: str | os.PathLike, grid: Grid, field: np.ndarray, time: float) -> Path:
    """Header line ``ESAVSNAP v1 nx ny lx ly time`` then little-endian float64, row-major."""
    field = grid.check(np.asarray(field, dtype=float), "snapshot field")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = (
        f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} {grid.nx} {grid.ny} "
        f"{fmt(grid.lx)} {fmt(grid.ly)} {fmt(time)}\n"
    )
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field, dtype="<f8").tobytes())
    os.replace(tmp, path)
    return path


def read_snapshot(path: str | os.PathLike) -> tuple[Grid, np.ndarray, float]:
    with open(path, "rb") as fh:
        line = fh.readline().decode("ascii", errors="replace")
        parts = line.split()
        if len(parts) != 7 or parts[0] != SNAPSHOT_MAGIC or parts[1] != SNAPSHOT_VERSION:
            raise InvalidArgumentError(f"{path}: not an {SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} file")
        nx, ny = int(parts[2]), int(parts[3])
        grid = Grid(nx, ny, float(parts[4]), float(parts[5]))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != nx * ny:
        raise InvalidArgumentError(f"{path}: expected {nx * ny} values, found {data.size}")
    return grid, data.reshape(nx, ny).astype(float), float(parts[6])


def snapshot_name(field: str, time: float) -> str:
    return f"{field}_t{time:.6g}.snap"


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_SECTION = "run"


def write_config(path: str | os.PathLike, cfg) -> Path:
    """Echo the effective config as a ``[run]`` section of ``key = value`` lines."""
    from .config import format_value

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"[{_SECTION}]"]
    for key, value in cfg.to_dict().items():
        lines.append(f"{key} = {format_value(value)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


_KEY_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*[=:]")


def read_config_pairs(path: str | os.PathLike) -> tuple[dict[str, str], dict[str, int]]:
    """Raw ``key -> value`` text pairs and the line each key was found on.

    Sections are optional; ``[run]`` (or none) is accepted, any other section
    name is an error.  Duplicate keys are errors.
    """
    import configparser

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None

    raw_lines = text.splitlines()
    first = next((ln.strip() for ln in raw_lines if ln.strip() and ln.strip()[0] not in "#;"), "")
    offset = 0
    if not first.startswith("["):
        text = f"[{_SECTION}]\n" + text
        offset = 1

    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno - offset}: duplicate key {exc.option!r}",
            field=exc.option,
            line=exc.lineno - offset,
        ) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - offset if exc.errors else None
        raise ConfigError(f"{path}:{lineno}: cannot parse line", line=lineno) from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        lineno = lineno - offset if lineno else None
        raise ConfigError(f"{path}:{lineno}: {exc.message}", line=lineno) from None

    extra = [s for s in parser.sections() if s != _SECTION]
    if extra:
        raise ConfigError(f"{path}: unexpected section [{extra[0]}]; use [{_SECTION}]")

    lines: dict[str, int] = {}
    for no, ln in enumerate(raw_lines, start=1):
        m = _KEY_LINE.match(ln)
        if m and m.group(1) not in lines:
            lines[m.group(1)] = no
    pairs = dict(parser.items(_SECTION)) if parser.has_section(_SECTION) else {}
    return pairs, lines
