"""TOML run configuration and tabular (CSV / JSON) report I/O.

A config is a small TOML document; every number is in reduced units
(hbar = eps0 = 1, lengths in a unit l0 of your choice)::

    [geometry]
    w = 1.0            # half width; omit with single_plane = true
    z_a = 1.0
    single_plane = false
    [geometry.plate1]
    r0 = 1.0
    rho = 1.0
    [geometry.plate2]
    r0 = 1.0
    rho = 1.0
    perfect_conductor = false

    [particle]
    alpha0 = 1.0
    omega_a = 1.0
    mu_xx = 1.0
    mu_yy = 1.0
    mu_zz = 1.0

    [motion]
    v = 1.0

    [numerics]
    rel_tol = 1e-9
    max_evals = 1000000
    n_points = 33

    [output]
    format = "csv"     # or "json"
    path = "out.csv"   # stdout when absent

    [sweep]            # only read by the sweep command
    param = "z_a"
    from = 0.2
    to = 1.8
    steps = 17
    spacing = "lin"
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import tomli

from .forces import ForceReport, MotionSpec
from .quadrature import QuadratureSpec
from .units import (
    CavityGeometry,
    InternalDissipationModel,
    ParticleModel,
    ReflectionModel,
    ValidationError,
)


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


SWEEP_PARAMS = ("z_a", "w", "v", "rho1", "rho2", "r0")

_SCHEMA: dict[str, dict[str, Any]] = {
    "geometry": {"w": float, "z_a": float, "single_plane": bool, "plate1": dict, "plate2": dict},
    "plate": {"r0": float, "rho": float, "perfect_conductor": bool},
    "particle": {"alpha0": float, "omega_a": float, "mu_xx": float, "mu_yy": float, "mu_zz": float},
    "motion": {"v": float},
    "numerics": {"rel_tol": float, "max_evals": int, "n_points": int},
    "output": {"format": str, "path": str},
    "sweep": {"param": str, "from": float, "to": float, "steps": int, "spacing": str},
}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    steps: int
    spacing: str = "lin"

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep parameter {self.param!r}; "
                              f"choose from {', '.join(SWEEP_PARAMS)}")
        if self.steps < 1:
            raise ConfigError("sweep steps must be >= 1")
        if self.spacing not in ("lin", "log"):
            raise ConfigError(f"spacing must be 'lin' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and min(self.start, self.stop) <= 0:
            raise ConfigError("log spacing needs positive end points")

    def values(self) -> list[float]:
        if self.steps == 1:
            return [float(self.start)]
        if self.spacing == "log":
            return _geomspace(self.start, self.stop, self.steps)
        return [self.start + (self.stop - self.start) * i / (self.steps - 1)
                for i in range(self.steps)]


def _geomspace(a, b, n):
    la, lb = math.log(a), math.log(b)
    return [math.exp(la + (lb - la) * i / (n - 1)) for i in range(n)]


@dataclass(frozen=True)
class RunConfig:
    geometry: CavityGeometry
    particle: ParticleModel
    motion: MotionSpec
    rel_tol: float = 1e-9
    max_evals: int = 1_000_000
    n_points: int = 33
    output_format: str = "csv"
    output_path: str | None = None
    sweep: SweepSpec | None = None

    def quad_spec(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol, max_evals=self.max_evals)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def default_config(kind: str = "cavity") -> RunConfig:
    """Reduced-unit defaults: alpha0 = rho = mu = v = 1."""
    plate = ReflectionModel(1.0, 1.0)
    if kind == "single":
        geom = CavityGeometry.plane(0.5, plate)
    else:
        geom = CavityGeometry(1.0, 1.0, plate, plate)
    particle = ParticleModel(dissipation=InternalDissipationModel.isotropic(1.0))
    return RunConfig(geom, particle, MotionSpec(1.0))


def _check_keys(section: str, data: dict, schema_key: str | None = None):
    schema = _SCHEMA[schema_key or section]
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a table")
    for key, value in data.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        kind = schema[key]
        ok = (isinstance(value, bool) if kind is bool
              else isinstance(value, dict) if kind is dict
              else isinstance(value, str) if kind is str
              else isinstance(value, int) and not isinstance(value, bool) if kind is int
              else isinstance(value, (int, float)) and not isinstance(value, bool))
        if not ok:
            raise ConfigError(f"{section}.{key} must be of type {kind.__name__}, got {value!r}")


def _plate(section, data):
    _check_keys(section, data, "plate")
    return ReflectionModel(r0=float(data.get("r0", 1.0)), rho=float(data.get("rho", 0.0)),
                           perfect_conductor=data.get("perfect_conductor", False))


def parse_config(data: dict) -> RunConfig:
    """Build a RunConfig from an already-parsed TOML mapping."""
    for section in data:
        if section not in _SCHEMA or section == "plate":
            raise ConfigError(f"unknown section [{section}]")
    for section, values in data.items():
        _check_keys(section, values)
    try:
        g = data.get("geometry", {})
        if "z_a" not in g:
            raise ConfigError("geometry.z_a is required")
        plate1 = _plate("geometry.plate1", g.get("plate1", {}))
        if g.get("single_plane", False):
            if "plate2" in g or "w" in g:
                raise ConfigError("single_plane geometry takes neither w nor plate2")
            geom = CavityGeometry.plane(float(g["z_a"]), plate1)
        else:
            if "w" not in g:
                raise ConfigError("geometry.w is required unless single_plane = true")
            plate2 = _plate("geometry.plate2", g.get("plate2", {}))
            geom = CavityGeometry(float(g["w"]), float(g["z_a"]), plate1, plate2)
        p = data.get("particle", {})
        mu = tuple(float(p.get(k, 0.0)) for k in ("mu_xx", "mu_yy", "mu_zz"))
        particle = ParticleModel(float(p.get("alpha0", 1.0)), float(p.get("omega_a", 1.0)),
                                 InternalDissipationModel(mu))
        motion = MotionSpec(float(data.get("motion", {}).get("v", 1.0)))
        n = data.get("numerics", {})
        out = data.get("output", {})
        fmt = out.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output.format must be 'csv' or 'json', got {fmt!r}")
        sweep = None
        if "sweep" in data:
            s = data["sweep"]
            missing = [k for k in ("param", "from", "to", "steps") if k not in s]
            if missing:
                raise ConfigError(f"[sweep] is missing {', '.join(missing)}")
            sweep = SweepSpec(s["param"], float(s["from"]), float(s["to"]), s["steps"],
                              s.get("spacing", "lin"))
        cfg = RunConfig(geom, particle, motion,
                        rel_tol=float(n.get("rel_tol", 1e-9)),
                        max_evals=n.get("max_evals", 1_000_000),
                        n_points=n.get("n_points", 33),
                        output_format=fmt, output_path=out.get("path"), sweep=sweep)
        cfg.quad_spec()
        if cfg.n_points < 3:
            raise ConfigError("numerics.n_points must be >= 3")
    except ValidationError:
        raise
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return parse_config(data)


# ---------------------------------------------------------------------------
# report tables

REPORT_COLUMNS = ("z_a", "w", "v", "f_int", "f_rad", "f_int_add", "f_rad_add",
                  "eta_int", "eta_rad", "rad_sigma_term", "rad_spin_term")
_FIELD_OF = {"f_int_add": "f_int_additive", "f_rad_add": "f_rad_additive"}


def report_row(rep: ForceReport) -> dict[str, float | None]:
    return {col: getattr(rep, _FIELD_OF.get(col, col)) for col in REPORT_COLUMNS}


def report_from_row(row: dict[str, Any]) -> ForceReport:
    kw = {}
    for col in REPORT_COLUMNS:
        val = row[col]
        kw[_FIELD_OF.get(col, col)] = None if val in (None, "") else float(val)
    return ForceReport(**kw)


def _fmt(x):
    if x is None:
        return ""
    return "%.17g" % x


def write_table(columns: Sequence[str], rows: Iterable[dict], fmt: str, stream) -> None:
    """CSV with 17 significant digits, or JSON with the same keys."""
    rows = list(rows)
    if fmt == "json":
        json.dump([{c: r[c] for c in columns} for r in rows], stream, indent=1)
        stream.write("\n")
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r[c]) if not isinstance(r[c], str) else r[c] for c in columns])


def read_table(text: str, fmt: str) -> list[dict]:
    if fmt == "json":
        return json.loads(text)
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: (None if v == "" else float(v)) for k, v in r.items()} for r in rows]


def write_reports(reports: Iterable[ForceReport], fmt: str, stream) -> None:
    write_table(REPORT_COLUMNS, (report_row(r) for r in reports), fmt, stream)


def read_reports(text: str, fmt: str) -> list[ForceReport]:
    return [report_from_row(r) for r in read_table(text, fmt)]
