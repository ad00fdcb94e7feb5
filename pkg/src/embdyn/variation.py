"""Variations of paths, the first variation of the energy, and the motion test.

Variations are additive, ``gamma_bar(t, s) = gamma(t) + s * V(t)``, so the
variational field is ``V`` itself.  For a variation whose field is
compactly supported in space,

    dE/ds|0 = - int g(V, acc) dt
              - sum_i g(V(t_i), gamma_dot(t_i+) - gamma_dot(t_i-))
              - g(V(a), gamma_dot(a)) + g(V(b), gamma_dot(b))

and a path solves ``acc = X`` exactly when ``dE/ds|0 = -int g(V, X) dt``
for every proper variation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import KnotField, PathOnQ, Segment, acceleration
from .errors import EmbeddingError, ValidationError
from .grid import pin_band, trapz
from .metric import metric_values, path_energy


@dataclass(frozen=True, eq=False)
class Variation:
    base: PathOnQ
    field: KnotField
    delta: float
    proper: bool

    def at(self, s: float) -> PathOnQ:
        """The varied path gamma + s * V."""
        p = self.base
        segs = [Segment(seg.t0, seg.dt, seg.values + s * v)
                for seg, v in zip(p.segments, self.field.segments)]
        return PathOnQ(p.grid, segs, p.boundary_mode, p.band_width, p.eps_emb)


def _check_field(path: PathOnQ, V: KnotField):
    if len(V.segments) != len(path.segments) or any(
            v.shape != s.values.shape for v, s in zip(V.segments, path.segments)):
        raise ValidationError("V", "knot field does not match the path's segments")
    for k in range(len(V.segments) - 1):
        left, right = V.segments[k][-1], V.segments[k + 1][0]
        if np.max(np.abs(left - right)) > 1e-12 * (1.0 + np.max(np.abs(left))):
            raise ValidationError("V", f"variational field is discontinuous at knot {path.knots[k + 1]!r}")


def make_variation(path: PathOnQ, V: KnotField, delta: float) -> Variation:
    _check_field(path, V)
    if not delta > 0:
        raise ValidationError("delta", f"must be positive, got {delta!r}")
    proper = bool(np.all(V.first == 0.0) and np.all(V.last == 0.0))
    var = Variation(path, V, float(delta), proper)
    for s in (delta, -delta, 0.5 * delta, -0.5 * delta, 0.0):
        try:
            var.at(s)
        except EmbeddingError as err:
            raise ValidationError("delta", f"varied path leaves the embeddings at s={s!r}: {err}") from err
    return var


def variational_field(var: Variation) -> KnotField:
    return var.field


def dE_ds_fd(var: Variation, s_h: float) -> float:
    """Central difference of the path energy in the variation parameter."""
    if not 0 < s_h <= 0.5 * var.delta:
        raise ValidationError("s_h", f"must lie in (0, delta/2], got {s_h!r} with delta={var.delta!r}")
    return (path_energy(var.at(s_h)) - path_energy(var.at(-s_h))) / (2.0 * s_h)


def first_variation_terms(path: PathOnQ, V: KnotField) -> dict[str, float]:
    """The bulk, jump and boundary contributions to the first variation."""
    _check_field(path, V)
    h = path.grid.h
    acc = acceleration(path)
    vel = path.velocities()
    bulk = 0.0
    for seg, v, a in zip(path.segments, V.segments, acc.segments):
        bulk -= float(trapz(metric_values(seg.values, v, a, h), seg.dt))
    jumps = 0.0
    for k in range(len(path.segments) - 1):
        phi = path.segments[k + 1].values[0]
        jump = vel.segments[k + 1][0] - vel.segments[k][-1]
        jumps -= float(metric_values(phi, V.segments[k + 1][0], jump, h))
    first, last = path.segments[0], path.segments[-1]
    boundary = (float(metric_values(last.values[-1], V.last, vel.last, h))
                - float(metric_values(first.values[0], V.first, vel.first, h)))
    return {"bulk": bulk, "jumps": jumps, "boundary": boundary}


def first_variation_rhs(path: PathOnQ, V: KnotField) -> float:
    terms = first_variation_terms(path, V)
    return terms["bulk"] + terms["jumps"] + terms["boundary"]


# random proper fields and the motion residual ---------------------------------------

def spatial_window(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """sin^2 bump supported on [lo, hi], zero outside."""
    xi = (x - lo) / (hi - lo)
    return np.where((xi > 0) & (xi < 1), np.sin(np.pi * xi) ** 2, 0.0)


def random_field(path: PathOnQ, rng: np.random.Generator, proper: bool = True,
                 n_time: int = 2, n_space: int = 3, band_width: int | None = None) -> KnotField:
    """Pseudo-random field, compactly supported in space, with max |V| = 1.

    The spatial profile is a sin^2 window (vanishing on the pinned band)
    times a random sine series.  In time it is a random sine series on
    [a, b] when ``proper``, otherwise a random cosine series that does not
    vanish at the end times.
    """
    grid = path.grid
    band = path.band_width if band_width is None else band_width
    lo = grid.x_min + band * grid.h
    hi = grid.x_max - band * grid.h
    a, b = path.a, path.b
    ct = rng.standard_normal(n_time)
    cx = rng.standard_normal(n_space)
    if not proper:
        ct = ct + np.sign(ct) * 0.5

    def f(t, x):
        tau = (t - a) / (b - a)
        xi = (x - lo) / (hi - lo)
        k = np.arange(1, n_time + 1)
        m = np.arange(1, n_space + 1)
        if proper:
            time_part = np.sin(np.pi * k * tau[..., None]) @ ct
        else:
            time_part = np.cos(np.pi * (k - 1) * tau[..., None] / 2.0) @ ct
        space_part = spatial_window(x, lo, hi) * (np.sin(np.pi * m * xi[..., None]) @ cx)
        return time_part * space_part

    V = path.sample(f)
    vals = [pin_band(s, band) for s in V.segments]
    if proper:
        # sin(k pi) is only zero to roundoff; properness is checked exactly
        vals[0][0] = 0.0
        vals[-1][-1] = 0.0
    scale = max(float(np.max(np.abs(s))) for s in vals)
    return KnotField(tuple(s / scale for s in vals))


def safe_delta(path: PathOnQ, V: KnotField, fraction: float = 0.25) -> float:
    """A variation size that keeps every varied sample an embedding."""
    h = path.grid.h
    min_px = min(float(np.min(np.abs(np.diff(s.values, axis=1)))) / h for s in path.segments)
    worst_vx = max(float(np.max(np.abs(np.diff(v, axis=1)))) / h for v in V.segments)
    return fraction * min_px / max(worst_vx, 1e-300)


def field_norm(path: PathOnQ, V: KnotField) -> float:
    """sqrt(int g(V, V) dt) over the path."""
    h = path.grid.h
    total = 0.0
    for seg, v in zip(path.segments, V.segments):
        total += float(trapz(metric_values(seg.values, v, v, h), seg.dt))
    return float(np.sqrt(total))


def force_work(path: PathOnQ, V: KnotField, X: KnotField) -> float:
    """int g(V, X) dt."""
    h = path.grid.h
    return sum(float(trapz(metric_values(seg.values, v, x, h), seg.dt))
               for seg, v, x in zip(path.segments, V.segments, X.segments))


def motion_residuals(path: PathOnQ, force, trials: int, seed: int, s_h: float = 1e-5) -> np.ndarray:
    """Normalized |dE/ds + int g(V, X) dt| for ``trials`` random proper fields."""
    if trials < 1:
        raise ValidationError("trials", f"must be >= 1, got {trials!r}")
    rng = np.random.default_rng(seed)
    X = force.along(path)
    out = []
    for _ in range(trials):
        V = random_field(path, rng, proper=True, band_width=max(path.band_width, 1))
        delta = min(safe_delta(path, V), 1.0)
        var = make_variation(path, V, delta)
        lhs = dE_ds_fd(var, min(s_h, 0.5 * delta))
        out.append(abs(lhs + force_work(path, V, X)) / field_norm(path, V))
    return np.array(out)


def motion_residual(path: PathOnQ, force, trials: int, seed: int, s_h: float = 1e-5) -> float:
    return float(np.max(motion_residuals(path, force, trials, seed, s_h)))
