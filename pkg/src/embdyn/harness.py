"""Verification suites and convergence studies built on the closed-form oracles.

Each suite returns a plain dict (name, residual, tolerance, order, passed,
details) so reports serialize straight to JSON.  Observed orders are
``log2`` of the ratio between successive refinement levels.
"""

from __future__ import annotations

import math
import time as _time

import numpy as np

from . import __version__
from .config import RunConfig
from .connection import (
    PathOnQ,
    Segment,
    christoffel_values,
    covariant_derivative_along,
)
from .dynamics import ForceModel, simulate
from .errors import ValidationError
from .grid import COMPACT, BodyGrid, d1, pin_band, trapz
from .metric import metric_values
from .presets import ANALYTIC_CASES, exact_configuration, initial_state
from .variation import (
    dE_ds_fd,
    first_variation_rhs,
    make_variation,
    motion_residual,
    random_field,
    safe_delta,
)

MIN_ORDER = 1.7


def observed_orders(errors) -> list[float | None]:
    out = []
    for e0, e1 in zip(errors[:-1], errors[1:]):
        out.append(math.log2(e0 / e1) if e0 > 0 and e1 > 0 else None)
    return out


def _result(name, residual, tolerance, order=None, passed=None, **details):
    if passed is None:
        passed = residual <= tolerance
    return {
        "name": name,
        "residual": float(residual),
        "tolerance": float(tolerance),
        "order": None if order is None else float(order),
        "passed": bool(passed),
        "details": details,
    }


# reference paths -----------------------------------------------------------------

def _u(t):
    return np.cbrt(1.0 + t)


def reference_paths(n_nodes: int, steps: int) -> dict[str, PathOnQ]:
    """Six paths on the body (0, 1) over t in [0, 1].

    Two geodesics (translation, scaling), two smooth non-geodesics and two
    piecewise paths with a velocity jump at t = 1/2.  ``steps`` time
    intervals overall; piecewise paths use ``steps // 2`` per segment.
    """
    g = BodyGrid(0.0, 1.0, n_nodes)
    half = steps // 2
    return {
        "translation": PathOnQ.from_function(g, lambda t, x: x + 0.5 * t, [0, 1], steps),
        "scaling": PathOnQ.from_function(g, lambda t, x: x * _u(t), [0, 1], steps),
        "quadratic": PathOnQ.from_function(g, lambda t, x: x + t ** 2, [0, 1], steps),
        "wobble": PathOnQ.from_function(
            g, lambda t, x: x + 0.2 * np.sin(np.pi * x) * np.sin(2.0 * t), [0, 1], steps),
        "kinked_translation": PathOnQ.from_function(
            g, [lambda t, x: x + 0.5 * t, lambda t, x: x + 0.25 + (t - 0.5)], [0, 0.5, 1], half),
        "kinked_scaling": PathOnQ.from_function(
            g, [lambda t, x: x * _u(t),
                lambda t, x: x * _u(0.5) + 0.2 * (t - 0.5) * np.sin(np.pi * x)], [0, 0.5, 1], half),
    }


def first_variation_study(levels: int = 4, n0: int = 51, steps0: int = 160, s0: float = 0.02,
                          fields: int = 10, seed: int = 0) -> dict:
    """|dE_ds_fd - first_variation_rhs| under joint halving of s_h, h and dt.

    Fields alternate between proper and non-proper (all compactly supported
    in space).  Returns per-level maxima over the whole suite and per path.
    """
    per_path: dict[str, list[float]] = {}
    suite = []
    ladder = []
    for lev in range(levels):
        n = (n0 - 1) * 2 ** lev + 1
        steps = steps0 * 2 ** lev
        s_h = s0 / 2 ** lev
        ladder.append({"n_nodes": n, "steps": steps, "s_h": s_h})
        worst_level = 0.0
        for name, path in reference_paths(n, steps).items():
            rng = np.random.default_rng(seed)
            worst = 0.0
            for i in range(fields):
                V = random_field(path, rng, proper=(i % 2 == 0))
                var = make_variation(path, V, max(safe_delta(path, V), 2.0 * s_h))
                err = abs(dE_ds_fd(var, s_h) - first_variation_rhs(path, V))
                worst = max(worst, err)
            per_path.setdefault(name, []).append(worst)
            worst_level = max(worst_level, worst)
        suite.append(worst_level)
    return {"levels": ladder, "suite_max": suite, "per_path": per_path, "orders": observed_orders(suite)}


def s_h_richardson(n_nodes: int = 101, steps: int = 320, s0: float = 0.04, halvings: int = 3,
                   fields: int = 10, seed: int = 0) -> dict:
    """Order of the central difference in s alone, on a fixed grid.

    Uses successive differences D(s) - D(s/2); their ratio is 4 for an
    O(s^2) error whatever the discretization error is.
    """
    orders = []
    for name, path in reference_paths(n_nodes, steps).items():
        rng = np.random.default_rng(seed)
        for i in range(fields):
            V = random_field(path, rng, proper=(i % 2 == 0))
            var = make_variation(path, V, max(safe_delta(path, V), 2.0 * s0))
            d = [dE_ds_fd(var, s0 / 2 ** j) for j in range(halvings + 1)]
            diffs = [abs(a - b) for a, b in zip(d[:-1], d[1:])]
            if diffs[-2] > 1e-13 and diffs[-1] > 1e-14:
                orders.append(math.log2(diffs[-2] / diffs[-1]))
    return {"orders": orders, "min": min(orders) if orders else None, "max": max(orders) if orders else None}


# individual checks ------------------------------------------------------------------

def christoffel_symmetry_check(grid: BodyGrid, seed: int = 0, trials: int = 20) -> dict:
    rng = np.random.default_rng(seed)
    x = grid.nodes
    xi = (x - grid.x_min) / (grid.x_max - grid.x_min)
    worst_sym = 0.0
    worst_lin = 0.0
    for _ in range(trials):
        amp, a = 0.5 * np.tanh(rng.standard_normal()), rng.standard_normal()
        # phi_x = 1 + amp * cos(pi xi) >= 1/2
        phi = x + amp * (grid.x_max - grid.x_min) / np.pi * np.sin(np.pi * xi)
        h = rng.standard_normal(grid.n_nodes)
        k = rng.standard_normal(grid.n_nodes)
        g_hk = christoffel_values(phi, h, k, grid.h)
        g_kh = christoffel_values(phi, k, h, grid.h)
        worst_sym = max(worst_sym, float(np.max(np.abs(g_hk - g_kh))))
        lin = christoffel_values(phi, a * h, k, grid.h) - a * g_hk
        worst_lin = max(worst_lin, float(np.max(np.abs(lin)) / (abs(a) * np.max(np.abs(g_hk)))))
    return {"symmetry": worst_sym, "bilinearity": worst_lin}


def _metric_compat_path(grid: BodyGrid, t_end: float, steps: int):
    L = grid.x_max - grid.x_min
    path = PathOnQ.from_function(
        grid, lambda t, x: x + 0.2 * L * np.sin(np.pi * (x - grid.x_min) / L) * np.sin(2.0 * t) / np.pi,
        [0.0, t_end], steps, boundary_mode=COMPACT)
    return path


def metric_compat_residual(grid: BodyGrid, t_end: float, steps: int) -> float:
    """max over knots of |d/dt g(V, W) - g(V', W) - g(V, W')| for compact V, W."""
    path = _metric_compat_path(grid, t_end, steps)
    lo, L = grid.x_min, grid.x_max - grid.x_min
    w = lambda x: np.sin(np.pi * (x - lo) / L) ** 2
    V = path.sample(lambda t, x: w(x) * np.cos(t) * (1.0 + 0.5 * np.sin(2 * np.pi * (x - lo) / L)))
    W = path.sample(lambda t, x: w(x) * (1.0 + t) * np.sin(3 * np.pi * (x - lo) / L))
    dV = covariant_derivative_along(path, V)
    dW = covariant_derivative_along(path, W)
    seg = path.segments[0]
    v, wv, dv, dw = V.segments[0], W.segments[0], dV.segments[0], dW.segments[0]
    m = metric_values(seg.values, v, wv, grid.h)
    lhs = d1(m, seg.dt)
    rhs = metric_values(seg.values, dv, wv, grid.h) + metric_values(seg.values, v, dw, grid.h)
    return float(np.max(np.abs(lhs - rhs)))


def energy_drift(grid: BodyGrid, dt: float, t_end: float = 1.0, scheme: str = "rk4", band_width: int = 1,
                 params: dict | None = None, advection_form: str = "pointwise") -> float:
    """Relative kinetic-energy drift of a compact Gaussian-bump velocity, zero force."""
    init = initial_state(grid, "gaussian_bump", params, COMPACT, band_width)
    traj = simulate(init, ForceModel.zero(), t_end, dt, scheme, advection_form=advection_form)
    return float(np.max(np.abs(traj.drift)) / traj.kinetic[0])


def ddt4(values: np.ndarray, dt: float) -> np.ndarray:
    """Time derivative of a sampled series: fourth-order central inside,
    second order on the two knots nearest each end."""
    k = np.asarray(values, dtype=float)
    out = d1(k, dt)
    if k.size >= 5:
        out[2:-2] = (-k[4:] + 8.0 * k[3:-1] - 8.0 * k[1:-3] + k[:-4]) / (12.0 * dt)
    return out


def flux_balance_residual(grid: BodyGrid, dt: float, t_end: float = 1.0, t_start: float = 0.1,
                          scheme: str = "rk4", rate: float = 1.0 / 3.0) -> float:
    """int over [t_start, t_end] of |d/dt kinetic + flux| on the free scaling geodesic."""
    init = initial_state(grid, "scaling", {"rate": rate}, "free")
    traj = simulate(init, ForceModel.zero(), t_end, dt, scheme)
    balance = np.abs(ddt4(traj.kinetic, traj.dt) + traj.flux)
    mask = traj.times >= t_start - 1e-12
    return float(trapz(balance[mask], traj.dt))


def forced_trajectory(grid: BodyGrid, dt: float, t_end: float = 1.0, force: ForceModel | None = None,
                      scheme: str = "rk4", band_width: int = 1):
    force = force or ForceModel.preset("spatial_bump")
    init = initial_state(grid, "rest", None, COMPACT, band_width)
    return simulate(init, force, t_end, dt, scheme), force


def perturbed_path(path: PathOnQ, amplitude: float = 0.01, center: float | None = None,
                   width: float | None = None) -> PathOnQ:
    """Add amplitude * sin(pi tau) * gaussian(x) to every sample (not a solution any more)."""
    g = path.grid
    L = g.x_max - g.x_min
    center = g.x_min + 0.4 * L if center is None else center
    width = 0.1 * L if width is None else width
    x = g.nodes
    bump = pin_band(np.exp(-(((x - center) / width) ** 2)), path.band_width)
    a, b = path.a, path.b
    segs = []
    for seg in path.segments:
        tau = (seg.times - a) / (b - a)
        segs.append(Segment(seg.t0, seg.dt, seg.values + amplitude * np.sin(np.pi * tau)[:, None] * bump))
    return PathOnQ(g, segs, path.boundary_mode, path.band_width, path.eps_emb)


# suites ----------------------------------------------------------------------------

def _levels(cfg: RunConfig, count: int = 2):
    base = cfg.body_grid()
    out = []
    grid, dt = base, cfg.time.dt
    for _ in range(count):
        out.append((grid, dt))
        grid, dt = grid.refine(), dt / 2
    return out


def suite_christoffel_symmetry(cfg: RunConfig) -> dict:
    tol = cfg.verify.tolerances["christoffel_symmetry"]
    r = christoffel_symmetry_check(cfg.body_grid(), cfg.verify.seed, cfg.verify.trials)
    return _result("christoffel_symmetry", r["symmetry"], tol, bilinearity=r["bilinearity"])


def suite_metric_compat(cfg: RunConfig) -> dict:
    tol = cfg.verify.tolerances["metric_compat"]
    res = []
    for grid, dt in _levels(cfg):
        steps = max(4, int(round(cfg.time.t_end / dt)))
        res.append(metric_compat_residual(grid, cfg.time.t_end, steps))
    order = observed_orders(res)[0]
    passed = res[0] <= tol and order is not None and order >= MIN_ORDER
    return _result("metric_compat", res[0], tol, order, passed, levels=res)


def suite_first_variation(cfg: RunConfig) -> dict:
    tol = cfg.verify.tolerances["first_variation"]
    study = first_variation_study(seed=cfg.verify.seed)
    order = study["orders"][-1]
    residual = study["suite_max"][-1]
    passed = residual <= tol and order is not None and abs(order - 2.0) <= 0.3
    return _result("first_variation", residual, tol, order, passed,
                   levels=study["levels"], suite_max=study["suite_max"], per_path=study["per_path"])


def suite_motion_residual(cfg: RunConfig) -> dict:
    tol = cfg.verify.tolerances["motion_residual"]
    force = cfg.force_model()
    if force.is_zero:
        force = ForceModel.preset("spatial_bump")
    res = []
    perturbed = None
    for grid, dt in _levels(cfg):
        traj, _ = forced_trajectory(grid, dt, cfg.time.t_end, force, cfg.time.scheme, cfg.grid.band_width)
        path = traj.to_path()
        res.append(motion_residual(path, force, cfg.verify.trials, cfg.verify.seed))
        if perturbed is None:
            perturbed = motion_residual(perturbed_path(path), force, cfg.verify.trials, cfg.verify.seed)
    order = observed_orders(res)[0]
    separation = perturbed / res[0] if res[0] > 0 else math.inf
    passed = res[0] <= tol and order is not None and order >= MIN_ORDER and separation >= 1e3
    return _result("motion_residual", res[0], tol, order, passed, levels=res,
                   perturbed=perturbed, separation=separation)


def suite_energy_conservation(cfg: RunConfig) -> dict:
    tol = cfg.verify.tolerances["energy_conservation"]
    res = [energy_drift(grid, dt, cfg.time.t_end, cfg.time.scheme, cfg.grid.band_width)
           for grid, dt in _levels(cfg)]
    order = observed_orders(res)[0]
    passed = res[0] <= tol and order is not None and order >= MIN_ORDER
    return _result("energy_conservation", res[0], tol, order, passed, levels=res)


def suite_flux_balance(cfg: RunConfig) -> dict:
    tol = cfg.verify.tolerances["flux_balance"]
    res = [flux_balance_residual(grid, dt, cfg.time.t_end, scheme=cfg.time.scheme) for grid, dt in _levels(cfg)]
    order = observed_orders(res)[0]
    passed = res[0] <= tol and order is not None and order >= MIN_ORDER
    return _result("flux_balance", res[0], tol, order, passed, levels=res)


SUITE_RUNNERS = {
    "christoffel_symmetry": suite_christoffel_symmetry,
    "metric_compat": suite_metric_compat,
    "first_variation": suite_first_variation,
    "motion_residual": suite_motion_residual,
    "energy_conservation": suite_energy_conservation,
    "flux_balance": suite_flux_balance,
}


def run_verify(cfg: RunConfig) -> dict:
    results = []
    for name in cfg.verify.suites:
        if name not in SUITE_RUNNERS:
            raise ValidationError("verify.suites", f"unknown suite {name!r}")
        t0 = _time.perf_counter()
        r = SUITE_RUNNERS[name](cfg)
        r["details"]["seconds"] = round(_time.perf_counter() - t0, 3)
        results.append(r)
    return {
        "version": __version__,
        "passed": all(r["passed"] for r in results),
        "suites": results,
    }


# convergence against closed-form geodesics ------------------------------------------------

def run_convergence(cfg: RunConfig, levels: int) -> list[dict]:
    """Halve h and dt ``levels - 1`` times; error is the max deviation at t_end."""
    case = cfg.initial.preset
    if case not in ("translation", "scaling"):
        raise ValidationError("initial.preset", f"convergence needs an analytic case (translation, scaling), got {case!r}")
    if not cfg.force_model().is_zero:
        raise ValidationError("force.kind", "convergence against closed forms needs zero force")
    if levels < 1:
        raise ValidationError("levels", f"must be >= 1, got {levels!r}")
    rows = []
    grid, dt = cfg.body_grid(), cfg.time.dt
    prev = None
    for lev in range(levels):
        init = initial_state(grid, case, cfg.initial.params, cfg.boundary_mode, cfg.grid.band_width,
                             cfg.grid.eps_emb)
        traj = simulate(init, ForceModel.zero(), cfg.time.t_end, dt, cfg.time.scheme,
                        advection_form=cfg.time.advection_form)
        exact = exact_configuration(case, cfg.initial.params, grid.nodes, traj.times[-1])
        err = float(np.max(np.abs(traj.phi[-1] - exact)))
        order = math.log2(prev / err) if prev is not None and prev > 0 and err > 0 else None
        rows.append({"level": lev, "h": grid.h, "dt": traj.dt, "error": err, "order": order})
        prev = err
        grid, dt = grid.refine(), dt / 2
    return rows


def analytic_error(cfg: RunConfig, traj) -> dict | None:
    """Deviation of the final snapshot from the closed form, when one applies."""
    case = cfg.initial.preset
    if case not in ANALYTIC_CASES or not cfg.force_model().is_zero:
        return None
    if case != "rest" and cfg.boundary_mode == COMPACT:
        return None
    exact = exact_configuration(case, cfg.initial.params, traj.grid.nodes, traj.times[-1])
    err = float(np.max(np.abs(traj.phi[-1] - exact)))
    tol = cfg.verify.tolerances["analytic"]
    return {"case": case, "error": err, "tolerance": tol, "passed": err <= tol}
