"""Run configuration: strict JSON parsing with defaults filled in.

Every section is optional; unknown keys anywhere are errors.  The resolved
configuration (``RunConfig.to_dict``) lists every default explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import ADVECTION_FORMS, FORCE_DEFAULTS, SCHEMES, ForceModel
from .errors import ValidationError
from .grid import SUPPORT_MODES, BodyGrid
from .presets import INITIAL_DEFAULTS, resolve_params

SUITES = (
    "christoffel_symmetry",
    "metric_compat",
    "first_variation",
    "motion_residual",
    "energy_conservation",
    "flux_balance",
)

DEFAULT_TOLERANCES = {
    "christoffel_symmetry": 0.0,
    "metric_compat": 1e-4,
    "first_variation": 1e-6,
    "motion_residual": 1e-4,
    "energy_conservation": 1e-6,
    "flux_balance": 1e-4,
    "analytic": 1e-8,
}

FORCE_KINDS = ("zero", "constant_density", "spatial_bump", "tabulated")


@dataclass
class GridConfig:
    x_min: float = 0.0
    x_max: float = 1.0
    n_nodes: int = 201
    eps_emb: float = 1e-8
    band_width: int = 1


@dataclass
class TimeConfig:
    t_end: float = 1.0
    dt: float = 1e-3
    scheme: str = "rk4"
    advection_form: str = "pointwise"


@dataclass
class InitialConfig:
    preset: str | None = "rest"
    params: dict = field(default_factory=dict)
    phi: list | None = None
    v: list | None = None


@dataclass
class ForceConfig:
    kind: str = "zero"
    params: dict = field(default_factory=dict)
    force_coefficient: float = 1.0


@dataclass
class OutputsConfig:
    directory: str = "out"
    snapshot_every: int = 10
    formats: list = field(default_factory=lambda: ["csv"])


@dataclass
class VerifyConfig:
    suites: list = field(default_factory=lambda: list(SUITES))
    trials: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    force: ForceConfig = field(default_factory=ForceConfig)
    boundary_mode: str = "free"
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def body_grid(self) -> BodyGrid:
        return BodyGrid(self.grid.x_min, self.grid.x_max, self.grid.n_nodes)

    def force_model(self) -> ForceModel:
        f = self.force
        if f.kind == "zero":
            return ForceModel(coefficient=f.force_coefficient)
        if f.kind == "tabulated":
            return ForceModel("tabulated", "tabulated", {}, f.force_coefficient,
                              np.asarray(f.params["times"], dtype=float),
                              np.asarray(f.params["values"], dtype=float))
        return ForceModel("preset", f.kind, dict(f.params), f.force_coefficient)


# parsing helpers ----------------------------------------------------------------

def _section(raw, path: str, allowed) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValidationError(path, "must be an object")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ValidationError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return raw


def _number(d: dict, key: str, path: str, default, *, positive=False, integer=False, minimum=None):
    val = d.get(key, default)
    full = f"{path}.{key}"
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(full, f"must be a number, got {val!r}")
    if integer:
        if int(val) != val:
            raise ValidationError(full, f"must be an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
    if not math.isfinite(val):
        raise ValidationError(full, "must be finite")
    if positive and not val > 0:
        raise ValidationError(full, f"must be positive, got {val!r}")
    if minimum is not None and val < minimum:
        raise ValidationError(full, f"must be >= {minimum}, got {val!r}")
    return val


def _choice(d: dict, key: str, path: str, default, options):
    val = d.get(key, default)
    if val not in options:
        raise ValidationError(f"{path}.{key}" if path else key, f"must be one of {list(options)}, got {val!r}")
    return val


def _float_params(raw, path: str, allowed: dict) -> dict:
    raw = _section(raw, path, allowed)
    return {k: _number(raw, k, path, None) for k in raw}


def parse_config(raw: dict) -> RunConfig:
    top = _section(raw, "", ("grid", "time", "initial", "force", "boundary_mode", "outputs", "verify"))

    g = _section(top.get("grid"), "grid", ("x_min", "x_max", "n_nodes", "eps_emb", "band_width"))
    grid = GridConfig(
        x_min=_number(g, "x_min", "grid", 0.0),
        x_max=_number(g, "x_max", "grid", 1.0),
        n_nodes=_number(g, "n_nodes", "grid", 201, integer=True, minimum=3),
        eps_emb=_number(g, "eps_emb", "grid", 1e-8, positive=True),
        band_width=_number(g, "band_width", "grid", 1, integer=True, minimum=1),
    )
    if not grid.x_max > grid.x_min:
        raise ValidationError("grid.x_max", "must exceed grid.x_min")
    if 2 * grid.band_width >= grid.n_nodes:
        raise ValidationError("grid.band_width", "pinned bands cover the whole grid")

    t = _section(top.get("time"), "time", ("t_end", "dt", "scheme", "advection_form"))
    time = TimeConfig(
        t_end=_number(t, "t_end", "time", 1.0, positive=True),
        dt=_number(t, "dt", "time", 1e-3, positive=True),
        scheme=_choice(t, "scheme", "time", "rk4", SCHEMES),
        advection_form=_choice(t, "advection_form", "time", "pointwise", ADVECTION_FORMS),
    )

    boundary_mode = _choice(top, "boundary_mode", "", "free", SUPPORT_MODES)

    i = _section(top.get("initial"), "initial", ("preset", "params", "phi", "v"))
    if "phi" in i or "v" in i:
        if "preset" in i or "params" in i:
            raise ValidationError("initial", "give either a preset or tabulated phi and v, not both")
        arrays = {}
        for key in ("phi", "v"):
            arr = np.asarray(i.get(key), dtype=float) if i.get(key) is not None else None
            if arr is None or arr.shape != (grid.n_nodes,) or not np.all(np.isfinite(arr)):
                raise ValidationError(f"initial.{key}", f"must be {grid.n_nodes} finite numbers")
            arrays[key] = arr.tolist()
        initial = InitialConfig(preset=None, params={}, phi=arrays["phi"], v=arrays["v"])
    else:
        name = _choice(i, "preset", "initial", "rest", tuple(INITIAL_DEFAULTS))
        params = _float_params(i.get("params"), "initial.params", INITIAL_DEFAULTS[name])
        initial = InitialConfig(preset=name, params=resolve_params(name, params))

    f = _section(top.get("force"), "force", ("kind", "params", "force_coefficient"))
    kind = _choice(f, "kind", "force", "zero", FORCE_KINDS)
    coefficient = _number(f, "force_coefficient", "force", 1.0)
    if kind == "tabulated":
        p = _section(f.get("params"), "force.params", ("times", "values"))
        try:
            times = np.asarray(p["times"], dtype=float)
            values = np.asarray(p["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as err:
            raise ValidationError("force.params", f"tabulated force needs numeric times and values ({err})")
        if times.ndim != 1 or values.shape != (times.size, grid.n_nodes):
            raise ValidationError("force.params.values", f"need one row of {grid.n_nodes} values per time")
        if np.any(np.diff(times) <= 0) or not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValidationError("force.params.times", "must be finite and strictly increasing")
        params = {"times": times.tolist(), "values": values.tolist()}
    else:
        params = _float_params(f.get("params"), "force.params", FORCE_DEFAULTS[kind])
        params = {**FORCE_DEFAULTS[kind], **params}
    force = ForceConfig(kind=kind, params=params, force_coefficient=coefficient)

    o = _section(top.get("outputs"), "outputs", ("directory", "snapshot_every", "formats"))
    directory = o.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        raise ValidationError("outputs.directory", "must be a non-empty string")
    formats = o.get("formats", ["csv"])
    if not isinstance(formats, list) or any(fm not in ("csv", "npz") for fm in formats):
        raise ValidationError("outputs.formats", "must be a list drawn from ['csv', 'npz']")
    outputs = OutputsConfig(directory=directory,
                            snapshot_every=_number(o, "snapshot_every", "outputs", 10, integer=True, minimum=1),
                            formats=list(formats))

    v = _section(top.get("verify"), "verify", ("suites", "trials", "seed", "tolerances"))
    suites = v.get("suites", list(SUITES))
    if not isinstance(suites, list) or not suites:
        raise ValidationError("verify.suites", "must be a non-empty list")
    for s in suites:
        if s not in SUITES:
            raise ValidationError("verify.suites", f"unknown suite {s!r}")
    tol_raw = _section(v.get("tolerances"), "verify.tolerances", DEFAULT_TOLERANCES)
    tolerances = dict(DEFAULT_TOLERANCES)
    for k in tol_raw:
        tolerances[k] = _number(tol_raw, k, "verify.tolerances", None, minimum=0.0)
    verify = VerifyConfig(suites=list(suites),
                          trials=_number(v, "trials", "verify", 20, integer=True, minimum=1),
                          seed=_number(v, "seed", "verify", 0, integer=True),
                          tolerances=tolerances)

    return RunConfig(grid, time, initial, force, boundary_mode, outputs, verify)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ValidationError("config", f"cannot read {path}: {err}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError("config", f"invalid JSON: {err}") from err
    return parse_config(raw)
