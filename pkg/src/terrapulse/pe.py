"""Monochromatic parabolic-equation marching solver.

The attenuation field u(x, z) of a wave factored as u * exp(i(kx - wt))
obeys 2ik u_x + u_zz = 0 above the ground.  Marching uses the six-point
implicit (Crank-Nicolson) scheme, closed at the ground by the impedance
condition u_z + ik*(impedance bracket)*u = 0 and at the artificial top by a
nonlocal transparent condition that lets radiation leave without reflection.

Terrain is handled by integer-cell column shifting: the grid reference
follows h(x) in whole-cell jumps (exact index moves, no smoothing), the
residual slope entering only through the boundary bracket.  Shifts are not
applied to the top tenth of the column so the transparent boundary always
sees a fixed reference level.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .fields import ComplexField2D, GridSpec
from .media import SoilModel, impedance_factor
from .terrain import TerrainProfile, flat_terrain
from .tridiag import solve as tri_solve


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianBeamSpec:
    """Skew Gaussian beam source: axis height z0, waist w0, front radius rho0
    (None for a collimated front) and small elevation angle beta."""

    z0: float
    w0: float
    rho0: float = None
    beta: float = 0.0

    def __post_init__(self):
        if self.w0 <= 0.0:
            raise SolverError("beam width w0 must be positive")
        if abs(self.beta) > 0.3:
            raise SolverError("elevation angle outside the narrow-angle range")

    def x0(self, k):
        """Complex beam parameter (1/rho0 + 2i/(k w0^2))^(-1)."""
        inv = 2.0j / (k * self.w0 ** 2)
        if self.rho0 is not None:
            inv = inv + 1.0 / self.rho0
        x0 = 1.0 / inv
        if not np.isfinite(x0) or x0 == 0.0:
            raise SolverError("degenerate beam parameter")
        return x0

    def eikonal0(self, z):
        """Initial complex eikonal at x = 0 excluding the 1/w0^2 decay.

        Phase/c of the source profile: (z - z0)^2/(2 rho0) + beta (z - z0);
        the Gaussian amplitude profile exp(-(z-z0)^2/w0^2) sits on top.
        """
        z = np.asarray(z, dtype=float)
        curv = 0.0 if self.rho0 is None else (z - self.z0) ** 2 / (2.0 * self.rho0)
        return curv + self.beta * (z - self.z0)

    def amplitude0(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(-((z - self.z0) / self.w0) ** 2)


def gaussian_exact(beam, k, x, z):
    """Exact beam field at range x and heights z (free space).

    Evaluates sqrt(x0/(x+x0)) exp{ik[(z-z0-beta x)^2/(2(x+x0))
    + beta (z-z0) - beta^2 x/2]}.
    """
    z = np.asarray(z, dtype=float)
    x0 = beam.x0(k)
    shifted = z - beam.z0 - beam.beta * x
    phase = (shifted ** 2 / (2.0 * (x + x0))
             + beam.beta * (z - beam.z0) - 0.5 * beam.beta ** 2 * x)
    return np.sqrt(x0 / (x + x0)) * np.exp(1j * k * phase)


def gaussian_initial(beam, k, z):
    """Source column: the exact beam profile evaluated at x = 0."""
    return gaussian_exact(beam, k, 0.0, z)


class TransparentTopBoundary:
    """Nonlocal closure at the top from the half-line radiation condition.

    The vertical derivative at the boundary equals a convolution of the
    range-derivative history with the 1/sqrt(x - xi) kernel; exact
    integration of the kernel against a piecewise-constant history gives
    weights w_m = 2 (sqrt(m+1) - sqrt(m)) sqrt(dx).  The relation is
    collocated at the half level z_max - dz/2, where both the centered
    difference and the two-point average of the top unknowns are
    second-order accurate.
    """

    def __init__(self, k, dx, dz, n_steps):
        # Branch with decaying, outgoing modes above the boundary.
        self.coef = (-1.0 + 1.0j) * math.sqrt(k / math.pi)
        self.dx = dx
        self.dz = dz
        m = np.arange(n_steps + 1, dtype=float)
        self.weights = 2.0 * (np.sqrt(m + 1.0) - np.sqrt(m)) * math.sqrt(dx)
        self.slopes = np.zeros(n_steps, dtype=complex)
        self.count = 0

    def closure(self, u_top_prev, u_below_prev):
        """Row coefficients (lower, diag, rhs) closing the two top unknowns."""
        n = self.count
        hist = 0.0 + 0.0j
        if n > 0:
            hist = np.dot(self.slopes[:n], self.weights[n:0:-1])
        c, w0 = self.coef, self.weights[0]
        u_half_prev = 0.5 * (u_top_prev + u_below_prev)
        lower = -1.0 / self.dz - 0.5 * c * w0 / self.dx
        diag = 1.0 / self.dz - 0.5 * c * w0 / self.dx
        rhs = c * (hist - w0 * u_half_prev / self.dx)
        return lower, diag, rhs

    def record(self, u_half_prev, u_half_new):
        self.slopes[self.count] = (u_half_new - u_half_prev) / self.dx
        self.count += 1


@dataclass
class PEScenario:
    """Inputs of one monochromatic marching run."""

    grid: GridSpec
    beam: GaussianBeamSpec
    k: float
    soil: SoilModel = None
    terrain: TerrainProfile = None
    bottom_bc: str = "impedance"   # impedance | neumann | dirichlet
    top_bc: str = "transparent"    # transparent | dirichlet

    def __post_init__(self):
        if self.k <= 0.0:
            raise SolverError("wavenumber must be positive")
        if self.bottom_bc == "impedance" and self.soil is None:
            raise SolverError("impedance boundary needs a soil model")
        if self.bottom_bc not in ("impedance", "neumann", "dirichlet"):
            raise SolverError(f"unknown bottom boundary {self.bottom_bc!r}")
        if self.top_bc not in ("transparent", "dirichlet"):
            raise SolverError(f"unknown top boundary {self.top_bc!r}")


@dataclass
class PEResult:
    field: ComplexField2D
    energy: np.ndarray
    z_ground: np.ndarray
    wall_time: float


def energy_flux(u_column, dz, surface_row=0):
    """Trapezoid quadrature of |u|^2 above the surface row (units m)."""
    mag = np.abs(np.asarray(u_column)[surface_row:]) ** 2
    return float(np.trapezoid(mag, dx=dz))


class PEMarcher:
    """Stateful column-by-column marcher for one wavenumber.

    Single-threaded by design (the transparent boundary carries history);
    run independent instances for concurrent wavenumbers.
    """

    def __init__(self, scenario, initial=None):
        scn = scenario
        self.scn = scn
        grid, k = scn.grid, scn.k
        self.k = k
        self.dx, self.dz = grid.dx, grid.dz
        self.n_rows = grid.n_z + 1
        self.n_steps = grid.n_x
        self.terrain = scn.terrain if scn.terrain is not None \
            else flat_terrain(grid.x_max)
        x_nodes = grid.x
        self.heights = np.asarray(self.terrain.height(x_nodes), dtype=float)
        self.slopes = np.asarray(self.terrain.slope(x_nodes), dtype=float)
        self.z_ground = float(self.heights[0])
        self.freeze_row = int(0.9 * self.n_rows)

        # Crank-Nicolson interior coefficients, constant along the march.
        self.sc = 1j * self.dx / (2.0 * k * self.dz ** 2)
        self.lower = np.full(self.n_rows - 1, -0.5 * self.sc, dtype=complex)
        self.upper = np.full(self.n_rows - 1, -0.5 * self.sc, dtype=complex)
        self.diag = np.full(self.n_rows, 1.0 + self.sc, dtype=complex)

        self.imp_factor = impedance_factor(scn.soil, k) \
            if scn.bottom_bc == "impedance" else 0.0
        self.top = TransparentTopBoundary(k, self.dx, self.dz, self.n_steps) \
            if scn.top_bc == "transparent" else None

        z_abs = self.z_ground + np.arange(self.n_rows) * self.dz
        if initial is None:
            initial = gaussian_initial(scn.beam, k, z_abs)
        self.u = np.asarray(initial, dtype=complex).copy()
        if self.u.shape != (self.n_rows,):
            raise SolverError("initial column has wrong length")
        self.n = 0

    def _bottom_rows(self, rhs, x_next_idx):
        """Close the bottom; returns (diag0, upper0, rhs0) after eliminating
        the second superdiagonal entry of the one-sided derivative."""
        bc = self.scn.bottom_bc
        if bc == "dirichlet":
            return 1.0 + 0.0j, 0.0 + 0.0j, 0.0 + 0.0j
        delta = 0.0 + 0.0j
        if bc == "impedance":
            delta = self.imp_factor - self.slopes[x_next_idx]
        a = 2.0j * self.k * delta * self.dz - 3.0
        # row0: a u0 + 4 u1 - u2 = 0, minus (-1/c1) * interior row 1
        c1 = -0.5 * self.sc
        factor = -1.0 / c1
        diag0 = a - factor * (-0.5 * self.sc)
        upper0 = 4.0 - factor * (1.0 + self.sc)
        rhs0 = -factor * rhs[1]
        return diag0, upper0, rhs0

    def step(self):
        """Advance one range step; returns the new column."""
        if self.n >= self.n_steps:
            raise SolverError("march already complete")
        u = self.u
        rhs = np.empty(self.n_rows, dtype=complex)
        rhs[1:-1] = u[1:-1] + 0.5 * self.sc * (u[2:] - 2.0 * u[1:-1] + u[:-2])

        diag = self.diag.copy()
        lower = self.lower.copy()
        upper = self.upper.copy()

        d0, up0, r0 = self._bottom_rows(rhs, self.n + 1)
        diag[0], upper[0], rhs[0] = d0, up0, r0

        if self.top is not None:
            lowM, dM, rM = self.top.closure(u[-1], u[-2])
        else:
            lowM, dM, rM = 0.0 + 0.0j, 1.0 + 0.0j, 0.0 + 0.0j
        lower[-1], diag[-1], rhs[-1] = lowM, dM, rM

        new = tri_solve(lower, diag, upper, rhs)
        if self.top is not None:
            self.top.record(0.5 * (u[-1] + u[-2]),
                            0.5 * (new[-1] + new[-2]))

        # Integer-cell terrain following below the frozen top band.
        target = self.heights[self.n + 1]
        shift = int(round((target - self.z_ground) / self.dz))
        if shift != 0:
            self._apply_shift(new, shift)
            self.z_ground += shift * self.dz
        self.u = new
        self.n += 1
        return self.u

    def _apply_shift(self, col, shift):
        jf = self.freeze_row
        if abs(shift) >= jf:
            raise SolverError("terrain shift exceeds the column")
        if shift > 0:
            col[:jf - shift] = col[shift:jf]
            # rows entering from the frozen band keep their old values
        else:
            p = -shift
            col[p:jf] = col[:jf - p].copy()
            # newly exposed ground cells: linear extrapolation downward
            base = col[p]
            grad = col[p + 1] - col[p]
            for j in range(p - 1, -1, -1):
                col[j] = base - grad * (p - j)


def solve_pe(scenario, keep_columns="all", initial=None):
    """March the full range; returns a :class:`PEResult`.

    ``keep_columns`` is ``"all"``, an integer stride, or an array of column
    indices to retain in the output field.
    """
    t0 = time.perf_counter()
    marcher = PEMarcher(scenario, initial=initial)
    n_cols = marcher.n_steps + 1
    if isinstance(keep_columns, str) and keep_columns == "all":
        kept = np.arange(n_cols)
    elif np.isscalar(keep_columns):
        kept = np.arange(0, n_cols, int(keep_columns))
        if kept[-1] != n_cols - 1:
            kept = np.append(kept, n_cols - 1)
    else:
        kept = np.asarray(sorted(set(int(i) for i in keep_columns)))
        if np.any(kept < 0) or np.any(kept >= n_cols):
            raise SolverError("kept column index out of range")
    keep_mask = np.zeros(n_cols, dtype=bool)
    keep_mask[kept] = True

    values = np.empty((len(kept), marcher.n_rows), dtype=complex)
    z_ground_kept = np.empty(len(kept))
    z_ground_all = np.empty(n_cols)
    energy = np.empty(n_cols)
    pos = 0
    if keep_mask[0]:
        values[pos] = marcher.u
        z_ground_kept[pos] = marcher.z_ground
        pos += 1
    energy[0] = energy_flux(marcher.u, marcher.dz)
    z_ground_all[0] = marcher.z_ground
    for n in range(1, n_cols):
        col = marcher.step()
        energy[n] = energy_flux(col, marcher.dz)
        z_ground_all[n] = marcher.z_ground
        if keep_mask[n]:
            values[pos] = col
            z_ground_kept[pos] = marcher.z_ground
            pos += 1
    field = ComplexField2D(values=values, dx=scenario.grid.dx,
                           dz=scenario.grid.dz, k=scenario.k,
                           z_ground=z_ground_kept, x_indices=kept)
    field.assert_finite()
    return PEResult(field=field, energy=energy, z_ground=z_ground_all,
                    wall_time=time.perf_counter() - t0)
