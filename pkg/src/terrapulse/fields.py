"""Grid specifications and the 2D complex field container shared by solvers."""

import warnings
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Rectangular marching grid: range x in [0, x_max], height z in [0, z_max].

    ``n_x`` counts steps (columns = n_x + 1), ``n_z`` counts intervals
    (rows = n_z + 1).  The aspect ratio z_max/x_max is recorded; paraxial
    validity assumes it is small.
    """

    x_max: float
    z_max: float
    dx: float
    dz: float

    def __post_init__(self):
        for name in ("x_max", "z_max", "dx", "dz"):
            if getattr(self, name) <= 0.0:
                raise GridError(f"{name} must be positive")
        if self.paraxial_ratio > 0.2:
            warnings.warn(
                f"aspect ratio z_max/x_max = {self.paraxial_ratio:.3g} > 0.2 "
                "strains the narrow-angle approximation", stacklevel=2)

    @property
    def n_x(self):
        return int(round(self.x_max / self.dx))

    @property
    def n_z(self):
        return int(round(self.z_max / self.dz))

    @property
    def paraxial_ratio(self):
        return self.z_max / self.x_max

    @property
    def x(self):
        return np.arange(self.n_x + 1) * self.dx

    @property
    def z(self):
        return np.arange(self.n_z + 1) * self.dz


@dataclass
class ComplexField2D:
    """Complex attenuation field u(x, z) sampled column-by-column.

    ``values[i, j]`` is the field at range ``x0 + i*dx`` and height
    ``z_ground[i] + j*dz`` above the local grid reference; ``z_ground``
    carries the per-column terrain shift applied during marching.
    """

    values: np.ndarray
    dx: float
    dz: float
    k: float
    x0: float = 0.0
    z_ground: np.ndarray = None
    x_indices: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2:
            raise GridError("field values must be 2D (x outer, z inner)")
        n_cols = self.values.shape[0]
        if self.z_ground is None:
            self.z_ground = np.zeros(n_cols)
        self.z_ground = np.asarray(self.z_ground, dtype=float)
        if self.z_ground.shape != (n_cols,):
            raise GridError("z_ground must have one entry per column")
        if self.x_indices is None:
            self.x_indices = np.arange(n_cols)
        self.x_indices = np.asarray(self.x_indices, dtype=int)

    @property
    def n_cols(self):
        return self.values.shape[0]

    @property
    def n_rows(self):
        return self.values.shape[1]

    @property
    def x(self):
        return self.x0 + self.x_indices * self.dx

    def z_absolute(self, col):
        """Absolute heights of the samples in column ``col``."""
        return self.z_ground[col] + np.arange(self.n_rows) * self.dz

    def column(self, col):
        return self.values[col]

    def assert_finite(self):
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")
