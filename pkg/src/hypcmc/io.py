"""Run configuration (flat key = value text) and artifact writers: OBJ meshes, CSV tables, JSON summaries."""
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .exhaustion import BoundaryTrace, ExhaustionConfig
from .operator import embed_graph
from .solver import SolverConfig

__all__ = [
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "serialize_config",
    "export_mesh",
    "write_obj",
    "write_report_csv",
    "write_summary",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "k",
    "alpha_max",
    "newton_iters",
    "residual_inf",
    "inf_u",
    "sup_u",
    "sup_grad_B1",
    "cauchy_delta_B2",
    "oracle_mc_max_err",
)

# config key -> (attribute, parser); order is the serialization order
_KEYS = {
    "model.theta": ("theta", float),
    "model.H": ("H", float),
    "boundary.kind": ("boundary_kind", str),
    "boundary.params": ("boundary_params", lambda s: tuple(float(x) for x in s.split(",") if x.strip())),
    "grid.n_alpha": ("n_alpha", int),
    "grid.n_beta": ("n_beta", int),
    "exhaustion.k_max": ("k_max", int),
    "exhaustion.cauchy_tol": ("cauchy_tol", float),
    "solver.tol": ("tol", float),
    "solver.max_newton": ("max_newton", int),
    "solver.dH": ("dH", float),
    "output.dir": ("output_dir", str),
}
_REQUIRED = ("model.H", "boundary.kind")


@dataclass(frozen=True)
class RunConfig:
    H: float
    boundary_kind: str
    boundary_params: tuple = ()
    theta: float = 0.0
    n_alpha: int = 64
    n_beta: int = 128
    k_max: int = 5
    cauchy_tol: float = 1e-6
    tol: float = 1e-9
    max_newton: int = 50
    dH: float = 0.1
    output_dir: str = "out"

    def __post_init__(self):
        if not math.isfinite(self.H) or abs(self.H) >= 1:
            raise ConfigError(
                f"model.H = {self.H!r}: complete CMC Killing graphs with this construction require |H| < 1",
                key="model.H",
            )
        if not math.isfinite(self.theta):
            raise ConfigError("model.theta must be finite", key="model.theta")
        for key, val in (("grid.n_alpha", self.n_alpha), ("grid.n_beta", self.n_beta)):
            if val < 16:
                raise ConfigError(f"{key} = {val}: grid counts must be at least 16", key=key)
        if self.n_beta % 2:
            raise ConfigError("grid.n_beta must be even", key="grid.n_beta")
        if self.k_max < 3:
            raise ConfigError(f"exhaustion.k_max = {self.k_max}: must be at least 3", key="exhaustion.k_max")
        for key, val in (("exhaustion.cauchy_tol", self.cauchy_tol), ("solver.tol", self.tol), ("solver.dH", self.dH)):
            if not val > 0:
                raise ConfigError(f"{key} must be positive", key=key)
        if self.max_newton < 1:
            raise ConfigError("solver.max_newton must be positive", key="solver.max_newton")
        try:
            self.trace()
        except ValueError as exc:
            raise ConfigError(f"boundary: {exc}", key="boundary.params") from None

    def trace(self):
        params = self.boundary_params
        if self.boundary_kind == "constant" and not params:
            params = (0.0,)
        return BoundaryTrace(self.boundary_kind, params)

    def solver_config(self):
        return SolverConfig(tol=self.tol, max_newton=self.max_newton, dH=self.dH)

    def exhaustion_config(self, **kw):
        return ExhaustionConfig(k_max=self.k_max, cauchy_tol=self.cauchy_tol, solver=self.solver_config(), **kw)

    def as_dict(self):
        return {key: getattr(self, attr) for key, (attr, _) in _KEYS.items()}


def parse_config_text(text, source="<config>"):
    values, seen = {}, set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", key=key, line=lineno)
        seen.add(key)
        attr, conv = _KEYS[key]
        try:
            values[attr] = conv(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for {key}", key=key, line=lineno) from None
    for key in _REQUIRED:
        if _KEYS[key][0] not in values:
            raise ConfigError(f"{source}: missing required key {key!r}", key=key)
    return RunConfig(**values)


def parse_config(path):
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def _fmt(v):
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg):
    return "".join(f"{key} = {_fmt(val)}\n" for key, val in cfg.as_dict().items())


# ---------------------------------------------------------------------------


def _open(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", encoding="utf-8", newline="\n")


def _num(x):
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.12e}"


def write_obj(mesh, path):
    with _open(path) as fh:
        for x, y, z in np.asarray(mesh.vertices, float):
            fh.write(f"v {x:.15e} {y:.15e} {z:.15e}\n")
        for a, b, c in np.asarray(mesh.faces) + 1:
            fh.write(f"f {a} {b} {c}\n")
    return Path(path)


def export_mesh(u, path):
    """ASCII OBJ of the graph of u: pole first, then rings outward, beta increasing within a ring."""
    if not np.all(np.isfinite(u.u)):
        raise ValueError("cannot export a non-finite field")
    return write_obj(embed_graph(u), path)


def write_report_csv(report, path):
    with _open(path) as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for s in report.steps:
            row = [
                str(s.k),
                _num(s.alpha_k),
                str(s.report.newton_iterations),
                _num(s.report.final_residual),
                _num(s.inf_u),
                _num(s.sup_u),
                _num(s.sup_grad_B1),
                _num(s.cauchy_delta_B2),
                _num(s.oracle_mc_max_err),
            ]
            fh.write(",".join(row) + "\n")
    return Path(path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj if obj is None or isinstance(obj, str) else str(obj)


def write_summary(record, path):
    with _open(path) as fh:
        json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return Path(path)

