"""Uniform body grid, sampled fields and the basic discrete calculus.

The body is an open interval represented by a closed uniform grid.  Spatial
derivatives are second-order (central inside, one-sided at the two ends) and
integrals use the composite trapezoid rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EmbeddingError, GridMismatchError, ValidationError

DEFAULT_EPS_EMB = 1e-8

COMPACT = "compact"
FREE = "free"
SUPPORT_MODES = (COMPACT, FREE)


@dataclass(frozen=True)
class BodyGrid:
    x_min: float
    x_max: float
    n_nodes: int

    def __post_init__(self):
        if not math.isfinite(self.x_min):
            raise ValidationError("x_min", f"must be finite, got {self.x_min!r}")
        if not math.isfinite(self.x_max):
            raise ValidationError("x_max", f"must be finite, got {self.x_max!r}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise ValidationError("n_nodes", f"must be an integer >= 3, got {self.n_nodes!r}")
        if not self.x_max > self.x_min:
            raise ValidationError("x_max", f"must exceed x_min ({self.x_max!r} <= {self.x_min!r})")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_nodes) * self.h

    def refine(self) -> "BodyGrid":
        """Grid with half the spacing over the same interval."""
        return BodyGrid(self.x_min, self.x_max, 2 * (self.n_nodes - 1) + 1)


def make_grid(x_min: float, x_max: float, n_nodes: int) -> BodyGrid:
    return BodyGrid(float(x_min), float(x_max), n_nodes)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: BodyGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n_nodes,):
            raise ValidationError(
                "values", f"expected shape ({self.grid.n_nodes},), got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("values", "contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: BodyGrid, f: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(grid, np.broadcast_to(f(grid.nodes), (grid.n_nodes,)))

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class Configuration:
    """An embedding of the body, stored as nodal values.

    Construction does not enforce the embedding property; use
    :func:`is_embedding` or :func:`require_embedding`.
    """

    field: ScalarField
    eps_emb: float = DEFAULT_EPS_EMB

    def __post_init__(self):
        if not (self.eps_emb > 0 and math.isfinite(self.eps_emb)):
            raise ValidationError("eps_emb", f"must be positive, got {self.eps_emb!r}")

    @classmethod
    def from_values(cls, grid: BodyGrid, values, eps_emb: float = DEFAULT_EPS_EMB) -> "Configuration":
        return cls(ScalarField(grid, values), eps_emb)

    @property
    def grid(self) -> BodyGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True, eq=False)
class Section:
    """Tangent data over a configuration.

    In ``compact`` mode the first and last ``band_width`` nodes must be
    exactly zero; this is the discrete stand-in for compact support.
    """

    field: ScalarField
    support_mode: str = FREE
    band_width: int = 1

    def __post_init__(self):
        if self.support_mode not in SUPPORT_MODES:
            raise ValidationError("support_mode", f"unknown mode {self.support_mode!r}")
        if int(self.band_width) != self.band_width or self.band_width < 1:
            raise ValidationError("band_width", f"must be an integer >= 1, got {self.band_width!r}")
        if 2 * self.band_width >= self.field.grid.n_nodes:
            raise ValidationError("band_width", "pinned bands cover the whole grid")
        if self.support_mode == COMPACT:
            b = self.band_width
            v = self.field.values
            if np.any(v[:b] != 0.0) or np.any(v[-b:] != 0.0):
                raise ValidationError("values", "compact section is nonzero on the pinned band")

    @classmethod
    def from_values(cls, grid: BodyGrid, values, support_mode: str = FREE,
                    band_width: int = 1) -> "Section":
        return cls(ScalarField(grid, values), support_mode, band_width)

    @classmethod
    def pinned(cls, grid: BodyGrid, values, band_width: int = 1) -> "Section":
        """Compact section built by zeroing the boundary band of ``values``."""
        return cls(ScalarField(grid, pin_band(values, band_width)), COMPACT, band_width)

    @property
    def grid(self) -> BodyGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def with_values(self, values) -> "Section":
        if self.support_mode == COMPACT:
            values = pin_band(values, self.band_width)
        return Section(ScalarField(self.grid, values), self.support_mode, self.band_width)


def pin_band(values, band_width: int) -> np.ndarray:
    """Copy of ``values`` with the last axis zeroed on both boundary bands."""
    out = np.array(values, dtype=float)
    out[..., :band_width] = 0.0
    out[..., -band_width:] = 0.0
    return out


# ---------------------------------------------------------------------------
# array kernels (operate on the last axis, or the given axis)

def d1(values: np.ndarray, step: float, axis: int = -1) -> np.ndarray:
    """Second-order first derivative: central inside, one-sided at the ends."""
    return np.gradient(values, step, axis=axis, edge_order=2)


def trapz(values: np.ndarray, step: float, axis: int = -1) -> np.ndarray:
    return np.trapezoid(values, dx=step, axis=axis)


def min_slope(phi: np.ndarray, h: float) -> tuple[float, int, bool]:
    """Smallest |consecutive difference|/h, its index, and sign consistency."""
    slopes = np.diff(phi) / h
    i = int(np.argmin(np.abs(slopes)))
    monotone = bool(np.all(slopes > 0) or np.all(slopes < 0))
    return float(abs(slopes[i])), i, monotone


# ---------------------------------------------------------------------------
# typed operations

def check_same_grid(*items) -> BodyGrid:
    grid = items[0].grid
    for it in items[1:]:
        if it.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {it.grid}")
    return grid


def diff_x(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, d1(f.values, f.grid.h))


def integrate(f: ScalarField) -> float:
    return float(trapz(f.values, f.grid.h))


def is_embedding(phi: Configuration) -> bool:
    vals = phi.values
    if not np.all(np.isfinite(vals)):
        return False
    smallest, _, monotone = min_slope(vals, phi.grid.h)
    return monotone and smallest >= phi.eps_emb


def require_embedding(phi: Configuration) -> None:
    if not is_embedding(phi):
        smallest, i, monotone = min_slope(phi.values, phi.grid.h)
        why = "not monotone" if not monotone else f"|slope| {smallest:.3g} < eps_emb {phi.eps_emb:.3g}"
        raise EmbeddingError(f"configuration is not an embedding near node {i}: {why}")
