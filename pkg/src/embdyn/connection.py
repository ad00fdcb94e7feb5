"""Paths in the space of embeddings and the Levi-Civita data along them.

In the interval model the Christoffel symbol of the weak metric is

    Gamma(phi; h, k) = -(h * k_x + k * h_x) / phi_x

and the covariant derivative of a field V along a path gamma is
``V_t - Gamma(gamma; V, gamma_t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmbeddingError, SingularStateError, ValidationError
from .grid import (
    COMPACT,
    DEFAULT_EPS_EMB,
    FREE,
    SUPPORT_MODES,
    BodyGrid,
    Configuration,
    ScalarField,
    Section,
    check_same_grid,
    d1,
    pin_band,
    require_embedding,
)
from .metric import metric_values


@dataclass(frozen=True, eq=False)
class Segment:
    """Uniform time knots ``t0 + j*dt`` with one configuration row per knot."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[0] < 3:
            raise ValidationError("segment.values", f"need >= 3 knots of 2-d data, got shape {vals.shape}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError("segment.dt", f"must be positive, got {self.dt!r}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("segment.values", "contains non-finite entries")

    @property
    def n_knots(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_knots) * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n_knots - 1) * self.dt


@dataclass(frozen=True, eq=False)
class KnotField:
    """A section per time knot, stored segment by segment.

    Shared knots between segments appear twice (last row of the left
    segment, first row of the right one), which lets one-sided quantities
    such as velocities differ across a knot.
    """

    segments: tuple

    def __post_init__(self):
        segs = []
        for s in self.segments:
            a = np.array(s, dtype=float)
            a.setflags(write=False)
            segs.append(a)
        object.__setattr__(self, "segments", tuple(segs))

    def __add__(self, other: "KnotField") -> "KnotField":
        return KnotField(tuple(a + b for a, b in zip(self.segments, other.segments)))

    def __sub__(self, other: "KnotField") -> "KnotField":
        return KnotField(tuple(a - b for a, b in zip(self.segments, other.segments)))

    def __mul__(self, c: float) -> "KnotField":
        return KnotField(tuple(c * a for a in self.segments))

    __rmul__ = __mul__

    def __neg__(self) -> "KnotField":
        return KnotField(tuple(-a for a in self.segments))

    @property
    def first(self) -> np.ndarray:
        return self.segments[0][0]

    @property
    def last(self) -> np.ndarray:
        return self.segments[-1][-1]

    def stacked(self) -> np.ndarray:
        """Rows for every distinct knot; the right-hand value is kept at shared knots."""
        parts = [s[:-1] for s in self.segments[:-1]] + [self.segments[-1]]
        return np.concatenate(parts, axis=0)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(s))) for s in self.segments)


class PathOnQ:
    """A piecewise smooth curve of embeddings sampled on time knots.

    Segment boundaries are the declared knots where one-sided velocities may
    differ.  Every sample must be an embedding.
    """

    def __init__(self, grid: BodyGrid, segments: Sequence[Segment], boundary_mode: str = FREE,
                 band_width: int = 1, eps_emb: float = DEFAULT_EPS_EMB):
        if boundary_mode not in SUPPORT_MODES:
            raise ValidationError("boundary_mode", f"unknown mode {boundary_mode!r}")
        if not segments:
            raise ValidationError("segments", "a path needs at least one segment")
        self.grid = grid
        self.segments = tuple(segments)
        self.boundary_mode = boundary_mode
        self.band_width = band_width
        self.eps_emb = eps_emb
        self._validate()

    def _validate(self):
        n = self.grid.n_nodes
        for k, seg in enumerate(self.segments):
            if seg.values.shape[1] != n:
                raise ValidationError(f"segments[{k}]", f"expected {n} nodes, got {seg.values.shape[1]}")
            slopes = np.diff(seg.values, axis=1) / self.grid.h
            mins = np.min(np.abs(slopes), axis=1)
            ok = (np.all(slopes > 0, axis=1) | np.all(slopes < 0, axis=1)) & (mins >= self.eps_emb)
            if not np.all(ok):
                j = int(np.argmin(ok))
                raise EmbeddingError(f"path sample at t={seg.times[j]:.17g} is not an embedding")
        for k in range(len(self.segments) - 1):
            left, right = self.segments[k], self.segments[k + 1]
            if not math.isclose(left.t_end, right.t0, rel_tol=1e-12, abs_tol=1e-12):
                raise ValidationError(f"segments[{k + 1}].t0", f"does not abut previous segment ({left.t_end!r})")
            scale = 1.0 + float(np.max(np.abs(left.values[-1])))
            if np.max(np.abs(left.values[-1] - right.values[0])) > 1e-12 * scale:
                raise ValidationError(f"segments[{k + 1}]", "path is discontinuous at a knot")

    # construction -----------------------------------------------------------

    @classmethod
    def from_function(cls, grid: BodyGrid, f: Callable | Sequence[Callable], knots: Sequence[float],
                      steps: int | Sequence[int], **kwargs) -> "PathOnQ":
        """Sample ``f(t, x)`` on segments ``[knots[i], knots[i+1]]``.

        ``f`` may be one callable for the whole path or one per segment;
        ``steps`` is the number of time intervals per segment.
        """
        n_seg = len(knots) - 1
        funcs = list(f) if isinstance(f, (list, tuple)) else [f] * n_seg
        steps = list(steps) if isinstance(steps, (list, tuple)) else [steps] * n_seg
        if len(funcs) != n_seg or len(steps) != n_seg:
            raise ValidationError("knots", "need one function and one step count per segment")
        x = grid.nodes
        segs = []
        for i in range(n_seg):
            a, b = float(knots[i]), float(knots[i + 1])
            dt = (b - a) / steps[i]
            t = a + np.arange(steps[i] + 1) * dt
            vals = np.broadcast_to(funcs[i](t[:, None], x[None, :]), (t.size, x.size))
            segs.append(Segment(a, dt, vals))
        return cls(grid, segs, **kwargs)

    def sample(self, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> KnotField:
        """Evaluate ``f(t, x)`` on the knots, pinning the band in compact mode."""
        x = self.grid.nodes
        out = []
        for seg in self.segments:
            vals = np.broadcast_to(f(seg.times[:, None], x[None, :]), seg.values.shape)
            if self.boundary_mode == COMPACT:
                vals = pin_band(vals, self.band_width)
            out.append(np.array(vals, dtype=float))
        return KnotField(tuple(out))

    # accessors ----------------------------------------------------------------

    @property
    def a(self) -> float:
        return self.segments[0].t0

    @property
    def b(self) -> float:
        return self.segments[-1].t_end

    @property
    def knots(self) -> list[float]:
        """Segment boundaries a = t_0 < t_1 < ... < t_k = b."""
        return [s.t0 for s in self.segments] + [self.b]

    def positions(self) -> KnotField:
        return KnotField(tuple(s.values for s in self.segments))

    def velocities(self) -> KnotField:
        return KnotField(tuple(d1(s.values, s.dt, axis=0) for s in self.segments))

    def configuration(self, seg_index: int, row: int) -> Configuration:
        return Configuration(ScalarField(self.grid, self.segments[seg_index].values[row]), self.eps_emb)

    def section(self, values) -> Section:
        if self.boundary_mode == COMPACT:
            return Section.pinned(self.grid, values, self.band_width)
        return Section.from_values(self.grid, values, FREE, self.band_width)

    def locate(self, t: float) -> list[tuple[int, int]]:
        """All (segment, row) pairs whose knot time equals ``t``."""
        hits = []
        for k, seg in enumerate(self.segments):
            j = int(round((t - seg.t0) / seg.dt))
            if 0 <= j < seg.n_knots and math.isclose(seg.t0 + j * seg.dt, t, rel_tol=1e-12, abs_tol=1e-12):
                hits.append((k, j))
        if not hits:
            raise ValidationError("t", f"{t!r} is not a knot of the path")
        return hits

    def reversed(self) -> "PathOnQ":
        """The same curve traversed backwards, re-parametrized on [a, b]."""
        a, b = self.a, self.b
        segs = []
        for seg in reversed(self.segments):
            segs.append(Segment(a + b - seg.t_end, seg.dt, seg.values[::-1]))
        return PathOnQ(self.grid, segs, self.boundary_mode, self.band_width, self.eps_emb)


# Christoffel symbols and covariant derivatives -----------------------------------

def christoffel_values(phi: np.ndarray, h: np.ndarray, k: np.ndarray, dx: float) -> np.ndarray:
    return -(h * d1(k, dx) + k * d1(h, dx)) / d1(phi, dx)


def christoffel(phi: Configuration, h: Section, k: Section) -> ScalarField:
    check_same_grid(phi, h, k)
    require_embedding(phi)
    return ScalarField(phi.grid, christoffel_values(phi.values, h.values, k.values, phi.grid.h))


def velocity(path: PathOnQ, t: float, side: str | None = None) -> Section:
    """Velocity at knot ``t``.

    At a shared segment boundary ``side`` picks the right (``"right"``) or
    left (``"left"``) derivative; the default is right, except at the final
    time where only the left derivative exists.
    """
    hits = path.locate(t)
    vel = path.velocities()
    if side is None:
        side = "right" if len(hits) == 1 or hits[-1][1] == 0 else "left"
        k, j = hits[-1]
    elif side == "left":
        k, j = hits[0]
        if j == 0 and k == 0:
            raise ValidationError("side", "no left derivative at the initial time")
    elif side == "right":
        k, j = hits[-1]
        if k == len(path.segments) - 1 and j == path.segments[k].n_knots - 1:
            raise ValidationError("side", "no right derivative at the final time")
    else:
        raise ValidationError("side", f"expected 'left' or 'right', got {side!r}")
    return path.section(vel.segments[k][j])


def one_sided_velocities(path: PathOnQ, t: float) -> tuple[Section, Section]:
    """(left, right) derivatives at an interior segment boundary."""
    return velocity(path, t, "left"), velocity(path, t, "right")


def _check_shapes(path: PathOnQ, field: KnotField):
    if len(field.segments) != len(path.segments) or any(
            f.shape != s.values.shape for f, s in zip(field.segments, path.segments)):
        raise ValidationError("V", "knot field does not match the path's segments")


def covariant_derivative_along(path: PathOnQ, V: KnotField) -> KnotField:
    _check_shapes(path, V)
    h = path.grid.h
    out = []
    for seg, v, w in zip(path.segments, V.segments, path.velocities().segments):
        dv = d1(v, seg.dt, axis=0) - christoffel_values(seg.values, v, w, h)
        if path.boundary_mode == COMPACT:
            dv = pin_band(dv, path.band_width)
        out.append(dv)
    return KnotField(tuple(out))


def d2_time(values: np.ndarray, dt: float) -> np.ndarray:
    """Second time derivative along axis 0, second order at every knot.

    Central differences inside; four-point one-sided stencils at the ends
    (three-knot segments fall back to their single central value).
    """
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dt ** 2
    if v.shape[0] >= 4:
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / dt ** 2
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / dt ** 2
    else:
        out[0] = out[-1] = out[1]
    return out


def acceleration(path: PathOnQ) -> KnotField:
    """gamma_tt - Gamma(gamma; gamma_t, gamma_t), with gamma_tt from a direct second difference.

    Differencing the velocities again would lose an order at the knots next
    to each segment end.
    """
    h = path.grid.h
    out = []
    for seg, w in zip(path.segments, path.velocities().segments):
        acc = d2_time(seg.values, seg.dt) - christoffel_values(seg.values, w, w, h)
        if path.boundary_mode == COMPACT:
            acc = pin_band(acc, path.band_width)
        out.append(acc)
    return KnotField(tuple(out))


def geodesic_residual(path: PathOnQ, norm: str = "metric") -> float:
    """Largest norm of the acceleration over the interior knots of each segment.

    ``norm="metric"`` uses the metric at the current configuration,
    ``norm="sup"`` the maximum absolute value.
    """
    acc = acceleration(path)
    worst = 0.0
    for seg, a in zip(path.segments, acc.segments):
        inner, pos = a[1:-1], seg.values[1:-1]
        if norm == "metric":
            vals = np.sqrt(np.maximum(metric_values(pos, inner, inner, path.grid.h), 0.0))
        elif norm == "sup":
            vals = np.max(np.abs(inner), axis=1)
        else:
            raise ValidationError("norm", f"unknown norm {norm!r}")
        worst = max(worst, float(np.max(vals)))
    return worst


def _transport_rate(V, phi, w, dx, band):
    rate = christoffel_values(phi, V, w, dx)
    if band:
        rate = pin_band(rate, band)
    return rate


def parallel_transport(path: PathOnQ, V0: Section) -> KnotField:
    """Solve V_t = Gamma(gamma; V, gamma_t) along the path with RK4.

    Half-step configurations and velocities come from cubic Hermite
    interpolation between neighbouring knots.  A compact ``V0`` stays pinned
    on its band.
    """
    check_same_grid(path, V0)
    dx = path.grid.h
    band = V0.band_width if V0.support_mode == COMPACT else 0
    vel = path.velocities()
    V = np.array(V0.values, dtype=float)
    out = []
    for seg, w in zip(path.segments, vel.segments):
        dt = seg.dt
        rows = [V.copy()]
        for j in range(seg.n_knots - 1):
            p0, p1, w0, w1 = seg.values[j], seg.values[j + 1], w[j], w[j + 1]
            pm = 0.5 * (p0 + p1) + dt / 8.0 * (w0 - w1)
            wm = 1.5 / dt * (p1 - p0) - 0.25 * (w0 + w1)
            t_mid = seg.t0 + (j + 0.5) * dt
            slope = np.abs(d1(pm, dx))
            if np.min(slope) < path.eps_emb:
                raise SingularStateError("interpolated configuration left the embeddings",
                                         node=int(np.argmin(slope)), time=t_mid)
            k1 = _transport_rate(V, p0, w0, dx, band)
            k2 = _transport_rate(V + 0.5 * dt * k1, pm, wm, dx, band)
            k3 = _transport_rate(V + 0.5 * dt * k2, pm, wm, dx, band)
            k4 = _transport_rate(V + dt * k3, p1, w1, dx, band)
            V = V + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            rows.append(V.copy())
        out.append(np.array(rows))
    return KnotField(tuple(out))
