"""Built-in initial conditions and their closed-form flows.

All presets start from the identity configuration ``phi(x) = x``.

* ``rest``: zero velocity.
* ``translation``: ``v = velocity``; the flow is ``x + velocity * t``.
* ``scaling``: ``v = rate * x``; the flow is ``x * (1 + 3 * rate * t)^(1/3)``
  (``u^3`` is linear in t along ``u'' = -2 u'^2 / u``).  A negative rate
  compresses the body and collapses it at ``t = -1 / (3 * rate)``.
* ``gaussian_bump``: ``v = amplitude * exp(-((x - center) / width)^2)``,
  pinned to zero on the boundary band in compact mode.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .grid import COMPACT, BodyGrid, Configuration, DEFAULT_EPS_EMB, Section
from .dynamics import State, gaussian

INITIAL_DEFAULTS: dict[str, dict] = {
    "rest": {},
    "translation": {"velocity": 0.5},
    "scaling": {"rate": 1.0 / 3.0},
    "gaussian_bump": {"amplitude": 0.002, "center": 0.5, "width": 0.1},
}

ANALYTIC_CASES = ("rest", "translation", "scaling")


def resolve_params(name: str, params: dict | None) -> dict:
    if name not in INITIAL_DEFAULTS:
        raise ValidationError("initial.preset", f"unknown preset {name!r}")
    params = dict(params or {})
    unknown = set(params) - set(INITIAL_DEFAULTS[name])
    if unknown:
        raise ValidationError("initial.params", f"unknown parameters {sorted(unknown)} for {name!r}")
    return {**INITIAL_DEFAULTS[name], **params}


def initial_velocity(name: str, x: np.ndarray, params: dict) -> np.ndarray:
    if name == "rest":
        return np.zeros_like(x)
    if name == "translation":
        return np.full_like(x, params["velocity"])
    if name == "scaling":
        return params["rate"] * x
    return params["amplitude"] * gaussian(x, params["center"], params["width"])


def initial_state(grid: BodyGrid, name: str, params: dict | None = None, boundary_mode: str = "free",
                  band_width: int = 1, eps_emb: float = DEFAULT_EPS_EMB) -> State:
    params = resolve_params(name, params)
    x = grid.nodes
    v = initial_velocity(name, x, params)
    phi = Configuration.from_values(grid, x, eps_emb)
    if boundary_mode == COMPACT:
        if name in ("translation", "scaling") and np.any(v != 0):
            raise ValidationError("boundary_mode", f"preset {name!r} needs free mode (nonzero boundary velocity)")
        return State(0.0, phi, Section.pinned(grid, v, band_width))
    return State(0.0, phi, Section.from_values(grid, v, boundary_mode, band_width))


def exact_configuration(name: str, params: dict | None, x: np.ndarray, t: float) -> np.ndarray:
    """Closed-form configuration at time ``t`` for the force-free analytic presets."""
    params = resolve_params(name, params)
    if name == "rest":
        return np.array(x, dtype=float)
    if name == "translation":
        return x + params["velocity"] * t
    if name == "scaling":
        return x * np.cbrt(1.0 + 3.0 * params["rate"] * t)
    raise ValidationError("initial.preset", f"{name!r} has no closed-form solution")


def exact_velocity(name: str, params: dict | None, x: np.ndarray, t: float) -> np.ndarray:
    params = resolve_params(name, params)
    if name == "rest":
        return np.zeros_like(x)
    if name == "translation":
        return np.full_like(x, params["velocity"])
    if name == "scaling":
        r = params["rate"]
        return x * r * (1.0 + 3.0 * r * t) ** (-2.0 / 3.0)
    raise ValidationError("initial.preset", f"{name!r} has no closed-form solution")
