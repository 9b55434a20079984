"""Potentials, physical constants and spatial grids.

Everything downstream works in whatever units the constants carry; the
defaults are natural units hbar = m = 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, PreconditionError


class PotentialKind(enum.Enum):
    FREE = "free"
    HARMONIC = "harmonic"
    LINEAR = "linear"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar and mass; both strictly positive."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise PreconditionError("hbar and mass must be positive")

    def wavenumber(self, energy: float) -> float:
        """k = sqrt(2 m E) / hbar for E >= 0."""
        if energy < 0:
            raise PreconditionError("wavenumber defined for E >= 0 only")
        return float(np.sqrt(2.0 * self.mass * energy) / self.hbar)


NATURAL_UNITS = PhysicalConstants()


@dataclass(frozen=True)
class PotentialSpec:
    """A 1-D potential V(x) on a closed domain [x_min, x_max].

    kind selects the shape:
      FREE       V = 0
      HARMONIC   V = stiffness * x**2 / 2
      LINEAR     V = slope * x + offset
      TABULATED  cubic interpolation of strictly increasing (x, V) samples
    """

    kind: PotentialKind
    x_min: float
    x_max: float
    stiffness: float = 1.0
    slope: float = 1.0
    offset: float = 0.0
    table_x: np.ndarray | None = field(default=None, repr=False)
    table_v: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ConfigError("potential domain requires x_max > x_min")
        if self.kind is PotentialKind.TABULATED:
            x, v = self.table_x, self.table_v
            if x is None or v is None or len(x) != len(v) or len(x) < 4:
                raise ConfigError("tabulated potential needs >= 4 (x, V) samples")
            if np.any(np.diff(x) <= 0):
                raise ConfigError("tabulated x samples must be strictly increasing")
            if x[0] > self.x_min or x[-1] < self.x_max:
                raise ConfigError("tabulated samples must cover [x_min, x_max]")
            if not np.all(np.isfinite(v)):
                raise ConfigError("tabulated V samples must be finite")

    def __call__(self, x):
        """Evaluate V(x); x may be a scalar or array within the domain."""
        xa = np.asarray(x, dtype=float)
        if np.any(xa < self.x_min - 1e-12) or np.any(xa > self.x_max + 1e-12):
            raise DomainError("potential evaluated outside its domain")
        if self.kind is PotentialKind.FREE:
            out = np.zeros_like(xa)
        elif self.kind is PotentialKind.HARMONIC:
            out = 0.5 * self.stiffness * xa * xa
        elif self.kind is PotentialKind.LINEAR:
            out = self.slope * xa + self.offset
        else:
            out = self._spline(xa)
        return out if out.ndim else float(out)

    @property
    def _spline(self):
        from scipy.interpolate import CubicSpline

        spl = self.__dict__.get("_spline_cache")
        if spl is None:
            spl = CubicSpline(self.table_x, self.table_v)
            self.__dict__["_spline_cache"] = spl
        return spl


def free_potential(x_min: float, x_max: float) -> PotentialSpec:
    return PotentialSpec(PotentialKind.FREE, x_min, x_max)


def harmonic_potential(x_min: float, x_max: float, stiffness: float = 1.0) -> PotentialSpec:
    return PotentialSpec(PotentialKind.HARMONIC, x_min, x_max, stiffness=stiffness)


def linear_potential(x_min: float, x_max: float, slope: float = 1.0, offset: float = 0.0) -> PotentialSpec:
    return PotentialSpec(PotentialKind.LINEAR, x_min, x_max, slope=slope, offset=offset)


def tabulated_potential(x: np.ndarray, v: np.ndarray) -> PotentialSpec:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return PotentialSpec(
        PotentialKind.TABULATED, float(x[0]), float(x[-1]), table_x=x, table_v=v
    )


def load_tabulated_csv(path) -> PotentialSpec:
    """Read a two-column (x, V) CSV with one header line."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError(f"{path}: expected two columns x,V")
    return tabulated_potential(data[:, 0], data[:, 1])


def make_grid(x_min: float, x_max: float, points: int = 4001) -> np.ndarray:
    """Uniform grid with `points` samples on [x_min, x_max]."""
    if points < 2:
        raise ConfigError("grid needs at least 2 points")
    if not x_max > x_min:
        raise ConfigError("grid requires x_max > x_min")
    return np.linspace(float(x_min), float(x_max), int(points))
