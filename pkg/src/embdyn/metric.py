"""The weak L2 metric on embeddings, kinetic and path energy, flat/sharp maps.

For a configuration ``phi`` of an interval body in the real line the metric is

    g(phi)(s1, s2) = integral of s1 * s2 * |phi_x| dx

and a force enters through a pointwise density ``sigma`` paired against the
same volume density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Configuration,
    ScalarField,
    Section,
    check_same_grid,
    d1,
    require_embedding,
    trapz,
)


@dataclass(frozen=True, eq=False)
class CovectorDensity:
    """Pointwise density of a covector; pairs with sections by integration."""

    field: ScalarField

    @property
    def grid(self):
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def pair(self, s: Section) -> float:
        check_same_grid(self, s)
        return float(trapz(self.values * s.values, self.grid.h))


# array kernels --------------------------------------------------------------

def volume_values(phi: np.ndarray, h: float) -> np.ndarray:
    """|phi_x| along the last axis."""
    return np.abs(d1(phi, h))


def metric_values(phi: np.ndarray, s1: np.ndarray, s2: np.ndarray, h: float) -> np.ndarray:
    """Metric pairing along the last axis; broadcasts over leading (time) axes."""
    return trapz(s1 * s2 * volume_values(phi, h), h)


# typed operations -------------------------------------------------------------

def _checked(phi: Configuration, *sections) -> float:
    check_same_grid(phi, *sections)
    require_embedding(phi)
    return phi.grid.h


def volume_density(phi: Configuration) -> ScalarField:
    h = _checked(phi)
    return ScalarField(phi.grid, volume_values(phi.values, h))


def metric(phi: Configuration, s1: Section, s2: Section) -> float:
    h = _checked(phi, s1, s2)
    return float(metric_values(phi.values, s1.values, s2.values, h))


def kinetic(phi: Configuration, v: Section) -> float:
    return 0.5 * metric(phi, v, v)


def flat(phi: Configuration, s: Section) -> CovectorDensity:
    h = _checked(phi, s)
    return CovectorDensity(ScalarField(phi.grid, s.values * volume_values(phi.values, h)))


def sharp(phi: Configuration, lam: CovectorDensity, support_mode: str = "free",
          band_width: int = 1) -> Section:
    h = _checked(phi, lam)
    vals = lam.values / volume_values(phi.values, h)
    if support_mode == "compact":
        return Section.pinned(phi.grid, vals, band_width)
    return Section.from_values(phi.grid, vals, support_mode, band_width)


def force_pairing(sigma: CovectorDensity, phi: Configuration, s: Section) -> float:
    """Admissible force given by a density: integral of sigma * s * |phi_x|."""
    h = _checked(phi, sigma, s)
    return float(metric_values(phi.values, sigma.values, s.values, h))


def path_energy(path) -> float:
    """Energy 1/2 * int g(gamma_dot, gamma_dot) dt, summed over the path's segments.

    Velocities are time differences of the sampled configurations, one-sided
    at segment ends, and the time integral is the trapezoid rule per segment.
    """
    total = 0.0
    for seg, vel in zip(path.segments, path.velocities().segments):
        dens = metric_values(seg.values, vel, vel, path.grid.h)
        total += 0.5 * float(trapz(dens, seg.dt))
    return total
