"""Terrain height profiles h(x): file ingestion, synthetic generation,
smooth slope evaluation and the spherical-earth bulge correction.

Profiles are cubic splines, so the slope consumed by the ground boundary
condition is continuous.  All profiles are immutable after construction.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

EARTH_RADIUS = 6.371e6
SLOPE_CAP = 0.3  # paraxial smooth-terrain guard (about 17 degrees)


class TerrainError(ValueError):
    pass


def earth_bulge(x, extent, effective_radius):
    """Parabolic height correction x (X - x) / (2 R*) for a range X.

    The equivalent radius R* (4/3 earth radius for standard refraction)
    folds sphericity and mean atmospheric bending into a terrain term.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-9) or np.any(x > extent + 1e-9):
        raise TerrainError("bulge evaluated outside [0, X]")
    out = x * (extent - x) / (2.0 * effective_radius)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TerrainProfile:
    """Smooth ground height h(x) over [x_min, x_max]."""

    x: np.ndarray
    h: np.ndarray
    bulge_extent: float = None
    bulge_radius: float = None
    metadata: dict = field(default_factory=dict)
    _spline: CubicSpline = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if x.size < 4:
            raise TerrainError(f"need at least 4 samples, got {x.size}")
        if np.any(~np.isfinite(x)) or np.any(~np.isfinite(h)):
            raise TerrainError("terrain contains non-finite entries")
        if np.any(np.diff(x) <= 0.0):
            raise TerrainError("terrain x-samples must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "_spline",
                           CubicSpline(x, h, bc_type="natural"))
        max_slope = float(np.abs(self.slope(
            np.linspace(x[0], x[-1], max(4 * x.size, 256)))).max())
        self.metadata.setdefault("max_slope", max_slope)
        if max_slope > 2.0 * SLOPE_CAP:
            raise TerrainError(
                f"terrain slope {max_slope:.3f} exceeds twice the paraxial cap")
        if max_slope > SLOPE_CAP:
            warnings.warn(f"terrain slope {max_slope:.3f} above paraxial cap "
                          f"{SLOPE_CAP}", stacklevel=2)

    @property
    def x_min(self):
        return float(self.x[0])

    @property
    def x_max(self):
        return float(self.x[-1])

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_min - 1e-9) or np.any(x > self.x_max + 1e-9):
            raise TerrainError("position outside terrain domain")
        return x

    def height(self, x):
        x = self._check_domain(x)
        out = self._spline(x)
        if self.bulge_extent is not None:
            out = out + earth_bulge(np.clip(x, 0.0, self.bulge_extent),
                                    self.bulge_extent, self.bulge_radius)
        return float(out) if out.ndim == 0 else out

    def slope(self, x):
        """Analytic derivative of the spline (plus bulge slope if enabled)."""
        x = self._check_domain(x)
        out = self._spline(x, 1)
        if self.bulge_extent is not None:
            out = out + (self.bulge_extent - 2.0 * np.asarray(x, dtype=float)) \
                / (2.0 * self.bulge_radius)
        return float(out) if out.ndim == 0 else out

    def with_bulge(self, extent=None, radius_factor=4.0 / 3.0):
        """Return a copy with the spherical-earth correction enabled."""
        extent = self.x_max if extent is None else float(extent)
        return TerrainProfile(self.x, self.h, bulge_extent=extent,
                              bulge_radius=radius_factor * EARTH_RADIUS,
                              metadata=dict(self.metadata))


def flat_terrain(extent, height=0.0, n=8):
    x = np.linspace(0.0, extent, n)
    return TerrainProfile(x, np.full(n, float(height)))


def load_terrain(path):
    """Read a two-column text profile (x_m, h_m).

    Lines starting with ``#`` are ignored; columns may be separated by commas
    or whitespace.  x must be strictly increasing.
    """
    xs, hs = [], []
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise TerrainError(f"{path}:{ln}: expected two columns")
            try:
                xs.append(float(parts[0]))
                hs.append(float(parts[1]))
            except ValueError as exc:
                raise TerrainError(f"{path}:{ln}: {exc}") from None
    profile = TerrainProfile(np.array(xs), np.array(hs))
    profile.metadata["source"] = str(path)
    return profile


def synthetic_terrain(seed, n_bumps, amp, corr_length, extent):
    """Deterministic sum of Gaussian bumps, gentle enough for the solvers.

    Bump centers and signed amplitudes are drawn from a seeded generator;
    each bump is a * exp(-(x - c)^2 / L^2), whose single-bump slope peaks at
    a * sqrt(2/e) / L.  The realized maximum slope lands in the metadata.
    """
    if amp < 0.0 or corr_length <= 0.0:
        raise TerrainError("amplitude must be >= 0 and corr_length > 0")
    if amp / corr_length > SLOPE_CAP:
        raise TerrainError(
            f"amp/corr_length = {amp / corr_length:.3f} exceeds slope cap")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.15 * extent, 0.85 * extent, size=n_bumps)
    signs = rng.choice([-1.0, 1.0], size=n_bumps)
    dx = corr_length / 8.0
    x = np.arange(0.0, extent + dx, dx)
    h = np.zeros_like(x)
    for c, s in zip(centers, signs):
        h += s * amp * np.exp(-((x - c) / corr_length) ** 2)
    profile = TerrainProfile(x, h)
    profile.metadata.update({
        "seed": seed,
        "n_bumps": n_bumps,
        "single_bump_slope_bound": amp * math.sqrt(2.0 / math.e) / corr_length,
    })
    return profile
