"""Time-domain parabolic-equation solver in the traveling frame s = ct - x.

The real transient P(x, z, s) obeys 2 P_xs = P_zz ahead of the ground, with

* a six-point box scheme (second order, absolutely stable) marched in a
  zigzag: outer loop over range columns, inner ascending loop over delay
  rows, each solving one tridiagonal system over height;
* a nonlocal ground condition whose memory kernel N(s) encodes the
  conductive soil's dispersion,
    P_z + h' P_s = c_eps [P_s - integral_0^s P_eta(eta) N(s - eta) d eta],
  discretized by product integration (exact kernel mass per delay cell), so
  the perfect-conductor limit degenerates cleanly to a Neumann condition;
* a nonlocal transparent top condition, double convolution of the mixed
  derivative history with 1/sqrt((x - xi)(s - eta)), collocated at the half
  level below the top row, with per-column precontraction of the delay
  convolution so each step costs O(n + l) rather than O(n * l).

Causality P(x, z, 0) = 0 is preserved exactly by the marching order.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i1e

from .fields import GridSpec
from .media import SoilModel, kernel_params
from .pe import GaussianBeamSpec, SolverError
from .signal import PulseSpec, envelope_from_samples, waveform
from .terrain import TerrainProfile, flat_terrain
from .tridiag import TridiagonalFactorization


@dataclass
class ImpedanceKernel:
    """Sampled ground memory kernel N(s) and its exact cell masses."""

    ds: float
    samples: np.ndarray        # N at s_j = j ds, length n_cells + 1
    cell_mass: np.ndarray      # integral of N over [j ds, (j+1) ds]
    r: float
    q: float
    epsilon: float

    @property
    def total_mass(self):
        return float(self.cell_mass.sum())


def _scaled_kernel_tables(theta, xi_max, points_per_decade=512):
    """Dimensionless kernel tables on a log grid.

    With xi = r s and theta = q/r, the kernel is r * Ntilde(xi) where
    Ntilde(xi) = e^{-xi} [theta J(xi) + 1 - theta] and
    J(xi) = integral_0^xi e^{(1-theta) tau} I1(theta tau) dtau / tau.
    G = e^{-xi} J is accumulated with an exponential-decay recursion and the
    scaled Bessel i1e, so neither large xi nor stiff rates overflow.
    Returns (xi, Ntilde, Mtilde) with Mtilde the cumulative mass.
    """
    xi_lo = 1e-8
    n_dec = max(math.log10(max(xi_max, 10.0 * xi_lo) / xi_lo), 1.0)
    n_pts = int(n_dec * points_per_decade) + 1
    xi = np.concatenate(([0.0], np.geomspace(xi_lo, max(xi_max, 1e-6), n_pts)))

    def core(tau):
        # e^{tau} i1e(theta tau)/tau, continuous value theta/2 at tau = 0
        tau = np.asarray(tau, dtype=float)
        safe = np.maximum(tau, 1e-300)
        return np.where(tau > 1e-12, i1e(theta * safe) / safe, theta / 2.0)

    c = core(xi)
    G = np.empty_like(xi)
    G[0] = 0.0
    dxi = np.diff(xi)
    fade = np.exp(-dxi)
    # exact integral of e^{-(xi_{j+1}-tau)} against a linear core per cell;
    # plain trapezoid would overshoot badly once cells outgrow the decay
    w_right = 1.0 - fade
    with np.errstate(divide="ignore", invalid="ignore"):
        w_slope = np.where(dxi > 1e-12,
                           (1.0 - (1.0 + dxi) * fade) / dxi, 0.5 * dxi)
    local = c[1:] * w_right + (c[:-1] - c[1:]) * w_slope
    for j in range(len(dxi)):
        G[j + 1] = G[j] * fade[j] + local[j]
    n_t = theta * G + (1.0 - theta) * np.exp(-xi)
    m_t = np.concatenate(([0.0],
                          np.cumsum(0.5 * dxi * (n_t[:-1] + n_t[1:]))))
    return xi, n_t, m_t


def impedance_kernel(soil, ds, n_cells):
    """Ground memory kernel sampled on the delay grid.

    Cell masses are exact integrals of N over each delay cell (product
    integration), so the convolution closure degenerates correctly in the
    perfect-conductor limit where N collapses far below the grid scale.
    """
    p = kernel_params(soil)
    r, q = p.r, p.q
    if q == 0.0:
        return ImpedanceKernel(ds=ds, samples=np.zeros(n_cells + 1),
                               cell_mass=np.zeros(n_cells),
                               r=r, q=q, epsilon=soil.epsilon)
    theta = q / r
    xi_max = r * ds * n_cells
    xi, n_t, m_t = _scaled_kernel_tables(theta, xi_max)
    s_edges = np.arange(n_cells + 1) * ds
    xi_edges = r * s_edges
    mass_cum = np.interp(xi_edges, xi, m_t)
    samples = r * np.interp(xi_edges, xi, n_t)
    samples[0] = r - q          # exact switch-on value
    return ImpedanceKernel(ds=ds, samples=samples,
                           cell_mass=np.diff(mass_cum), r=r, q=q,
                           epsilon=soil.epsilon)


def kernel_normalization(soil, window=12000.0, ds=1.0):
    """Integral of N over [0, window]; tends to 1 for conducting soil."""
    n = int(round(window / ds))
    kern = impedance_kernel(soil, ds, n)
    return kern.total_mass


@dataclass
class TDPEScenario:
    """Inputs of one traveling-frame marching run."""

    grid: GridSpec
    ds: float
    s_window: float
    beam: GaussianBeamSpec
    pulse: PulseSpec
    soil: SoilModel = None
    terrain: TerrainProfile = None
    bottom_bc: str = "nonlocal"    # nonlocal | local | neumann | dirichlet
    top_bc: str = "transparent"    # transparent | neumann | dirichlet

    def __post_init__(self):
        if self.ds <= 0.0 or self.s_window <= 0.0:
            raise SolverError("delay grid must be positive")
        if self.bottom_bc not in ("nonlocal", "local", "neumann", "dirichlet"):
            raise SolverError(f"unknown bottom boundary {self.bottom_bc!r}")
        if self.top_bc not in ("transparent", "neumann", "dirichlet"):
            raise SolverError(f"unknown top boundary {self.top_bc!r}")
        if self.bottom_bc in ("nonlocal", "local") and self.soil is None:
            raise SolverError("ground condition needs a soil model")
        if not self.pulse.is_causal:
            raise SolverError("traveling-frame marching needs a causal pulse")

    @property
    def n_s(self):
        return int(round(self.s_window / self.ds)) + 1


@dataclass
class TDPEResult:
    stations: dict                 # x index -> (n_s, n_z) real block
    probes: dict                   # (x index, z) -> waveform array
    snapshots: dict                # t (m of ct) -> (n_kept_x, n_z) block
    snapshot_x: np.ndarray
    s_grid: np.ndarray
    s_offset: float
    z_ground: np.ndarray
    plane_sup: np.ndarray          # max |P| per column
    wall_time: float
    kernel: ImpedanceKernel = None


class TDPEMarcher:
    """Column marcher for the traveling-frame scheme.

    ``s_offset`` overrides the automatic causality shift of the source
    delays (useful when two runs must share one delay origin); an explicit
    ``initial_plane`` replaces the beam-profile source entirely.
    """

    def __init__(self, scn, initial_plane=None, s_offset=None):
        self.scn = scn
        grid = scn.grid
        self.dx, self.dz, self.ds = grid.dx, grid.dz, scn.ds
        self.n_rows = grid.n_z + 1
        self.n_s = scn.n_s
        self.n_steps = grid.n_x
        self.terrain = scn.terrain if scn.terrain is not None \
            else flat_terrain(grid.x_max)
        x_nodes = grid.x
        self.heights = np.asarray(self.terrain.height(x_nodes), dtype=float)
        self.slopes = np.asarray(self.terrain.slope(x_nodes), dtype=float)
        self.z_ground = float(self.heights[0])
        self.freeze_row = int(0.9 * self.n_rows)

        self.mu = self.dx * self.ds / (8.0 * self.dz ** 2)

        if scn.soil is not None and scn.soil.epsilon > 1.0:
            self.c_eps = math.sqrt(scn.soil.epsilon - 1.0) / scn.soil.epsilon
        else:
            self.c_eps = 0.0
        self.kernel = None
        if scn.bottom_bc == "nonlocal":
            self.kernel = impedance_kernel(scn.soil, self.ds, self.n_s)

        if scn.top_bc == "transparent":
            m = np.arange(max(self.n_steps, self.n_s) + 1, dtype=float)
            root_inc = 2.0 * (np.sqrt(m + 1.0) - np.sqrt(m))
            self.wx = root_inc[:self.n_steps + 1] * math.sqrt(self.dx)
            self.ws = root_inc[:self.n_s] * math.sqrt(self.ds)
            self.e_hist = np.zeros((self.n_steps, self.n_s - 1))
            self.gamma = (math.sqrt(2.0) / math.pi) * self.wx[0] * self.ws[0] \
                / (self.dx * self.ds)

        # initial column: delayed source profile, zero at s = 0
        z_abs = self.z_ground + np.arange(self.n_rows) * self.dz
        s_grid = np.arange(self.n_s) * self.ds
        self.s_grid = s_grid
        if initial_plane is not None:
            self.s_offset = 0.0 if s_offset is None else float(s_offset)
            self.plane = np.array(initial_plane, dtype=float)
            if self.plane.shape != (self.n_s, self.n_rows):
                raise SolverError("initial plane has wrong shape")
        else:
            phi0 = np.asarray(scn.beam.eikonal0(z_abs), dtype=float)
            self.s_offset = float(phi0.min()) if s_offset is None \
                else float(s_offset)
            if phi0.min() - self.s_offset < -1e-12:
                raise SolverError("delay offset violates causality")
            phi0 = phi0 - self.s_offset
            self.plane = np.asarray(
                scn.beam.amplitude0(z_abs)[None, :]
                * waveform(scn.pulse, s_grid[:, None] - phi0[None, :]),
                dtype=float)
        self.plane[0, :] = 0.0
        self.n = 0
        self._half_top_prev = 0.5 * (self.plane[:, -1] + self.plane[:, -2])

    def _factorizations(self, x_next_idx):
        """Matrix factorizations for this column (general l and l = 0)."""
        n_rows, mu = self.n_rows, self.mu
        lower = np.full(n_rows - 1, -mu)
        upper = np.full(n_rows - 1, -mu)
        diag = np.full(n_rows, 1.0 + 2.0 * mu)
        facs = {}
        for tag, kappa in (("general", 3.0 / (2.0 * self.ds)),
                           ("first", 1.0 / self.ds)):
            lo, di, up = lower.copy(), diag.copy(), upper.copy()
            bc = self.scn.bottom_bc
            if bc == "dirichlet":
                di[0], up[0] = 1.0, 0.0
                elim = 0.0
            else:
                slope = self.slopes[x_next_idx]
                c0 = -3.0 / (2.0 * self.dz)
                c1 = 2.0 / self.dz
                c2 = -1.0 / (2.0 * self.dz)
                if bc in ("nonlocal", "local"):
                    # the newest convolution cell shares the delay stencil of
                    # the leading derivative, so the perfectly conducting
                    # limit cancels exactly on the grid
                    c_lead = self.c_eps
                    if bc == "nonlocal":
                        c_lead *= 1.0 - self.kernel.cell_mass[0]
                    c0 += (slope - c_lead) * kappa
                # eliminate the c2 entry against interior row 1
                factor = c2 / (-mu)
                di[0] = c0 - factor * (-mu)
                up[0] = c1 - factor * (1.0 + 2.0 * mu)
                elim = factor
            if self.scn.top_bc == "transparent":
                lo[-1] = -1.0 / self.dz + 0.5 * self.gamma
                di[-1] = 1.0 / self.dz + 0.5 * self.gamma
            elif self.scn.top_bc == "neumann":
                lo[-1], di[-1] = -1.0, 1.0
            else:
                lo[-1], di[-1] = 0.0, 1.0
            facs[tag] = (TridiagonalFactorization(lo, di, up), elim)
        return facs

    def step(self):
        """March one column; returns the new (n_s, n_z) plane."""
        if self.n >= self.n_steps:
            raise SolverError("march already complete")
        scn = self.scn
        old = self.plane
        new = np.zeros_like(old)
        mu, ds, dz, dx = self.mu, self.ds, self.dz, self.dx
        facs = self._factorizations(self.n + 1)
        slope = self.slopes[self.n + 1]
        transparent = scn.top_bc == "transparent"
        nonlocal_bc = scn.bottom_bc == "nonlocal"
        local_like = scn.bottom_bc in ("nonlocal", "local")

        if transparent:
            half_old = self._half_top_prev
            half_new = np.empty(self.n_s)
            half_new[0] = 0.0
            t_past = np.zeros(self.n_s - 1)
            if self.n > 0:
                t_past = self.wx[self.n:0:-1] @ self.e_hist[:self.n]
            d_cur = np.empty(self.n_s - 1)

        if nonlocal_bc:
            mass = self.kernel.cell_mass
            dbot = np.empty(self.n_s - 1)  # bottom-row delay derivative

        rhs = np.empty(self.n_rows)
        lap_src = np.empty(self.n_rows)
        for ell in range(self.n_s - 1):
            np.add(old[ell + 1], new[ell], out=lap_src)
            np.subtract(lap_src, old[ell], out=rhs)
            np.add(lap_src, old[ell], out=lap_src)
            rhs[1:-1] += mu * (lap_src[2:] - 2.0 * lap_src[1:-1]
                               + lap_src[:-2])

            tag = "first" if ell == 0 else "general"
            fac, elim = facs[tag]

            # ground closure
            if scn.bottom_bc == "dirichlet":
                rhs[0] = 0.0
            else:
                acc = 0.0
                if local_like:
                    if ell == 0:
                        hist_s = -new[ell, 0] / ds
                    else:
                        hist_s = (-4.0 * new[ell, 0] + new[ell - 1, 0]) \
                            / (2.0 * ds)
                    c_lead = self.c_eps
                    if nonlocal_bc:
                        c_lead *= 1.0 - mass[0]
                    acc += (slope - c_lead) * hist_s
                    if nonlocal_bc and ell > 0:
                        acc += self.c_eps * float(
                            np.dot(dbot[:ell], mass[ell:0:-1]))
                rhs[0] = -acc - elim * rhs[1]

            # top closure; the known part of the mixed-difference corner
            # cell rides along inside g_known
            if transparent:
                coupled = (-half_old[ell + 1] - half_new[ell]
                           + half_old[ell]) / (dx * ds)
                g_known = t_past[ell] + self.wx[0] * self.ws[0] * coupled
                if ell > 0:
                    g_known += self.wx[0] * float(
                        np.dot(d_cur[:ell], self.ws[ell:0:-1]))
                rhs[-1] = -(math.sqrt(2.0) / math.pi) * g_known
            else:
                rhs[-1] = 0.0

            row = fac.solve(rhs)
            new[ell + 1] = row

            if nonlocal_bc:
                dbot[ell] = (new[ell + 1, 0] - new[ell, 0]) / ds
            if transparent:
                half_new[ell + 1] = 0.5 * (row[-1] + row[-2])
                d_cur[ell] = (half_new[ell + 1] - half_old[ell + 1]
                              - half_new[ell] + half_old[ell]) / (dx * ds)

        if transparent:
            self.e_hist[self.n] = np.convolve(d_cur, self.ws)[:self.n_s - 1]
            self._half_top_prev = half_new

        target = self.heights[self.n + 1]
        shift = int(round((target - self.z_ground) / dz))
        if shift != 0:
            self._apply_shift(new, shift)
            self.z_ground += shift * dz
            if transparent:
                self._half_top_prev = 0.5 * (new[:, -1] + new[:, -2])
        self.plane = new
        self.n += 1
        return new

    def _apply_shift(self, plane, shift):
        jf = self.freeze_row
        if abs(shift) >= jf:
            raise SolverError("terrain shift exceeds the column")
        if shift > 0:
            plane[:, :jf - shift] = plane[:, shift:jf]
        else:
            p = -shift
            plane[:, p:jf] = plane[:, :jf - p].copy()
            base = plane[:, p]
            grad = plane[:, p + 1] - plane[:, p]
            for j in range(p - 1, -1, -1):
                plane[:, j] = base - grad * (p - j)


def solve_tdpe(scn, stations=(), probes=(), snapshot_ct=(), keep_stride=None,
               initial_plane=None, s_offset=None):
    """March the full range.

    ``stations``: x indices whose full (s, z) block is retained.
    ``probes``: (x index, z height) pairs recorded as delay waveforms.
    ``snapshot_ct``: travel distances ct (m) at which an (x, z) field map is
    assembled from s = ct - x.
    """
    t0 = time.perf_counter()
    marcher = TDPEMarcher(scn, initial_plane=initial_plane, s_offset=s_offset)
    n_cols = marcher.n_steps + 1
    stations = sorted(set(int(i) for i in stations))
    for st in stations:
        if st < 0 or st >= n_cols:
            raise SolverError("station index out of range")
    keep = set(stations)
    snapshot_ct = list(snapshot_ct)
    snap_stride = keep_stride or max(1, n_cols // 400)
    snap_cols = np.arange(0, n_cols, snap_stride)
    snaps = {ct: np.zeros((len(snap_cols), marcher.n_rows))
             for ct in snapshot_ct}
    probe_map = {}
    for (ix, z_abs) in probes:
        probe_map[(int(ix), float(z_abs))] = np.zeros(marcher.n_s)

    station_blocks = {}
    plane_sup = np.empty(n_cols)
    z_ground = np.empty(n_cols)

    def record(col_idx, plane):
        plane_sup[col_idx] = np.abs(plane).max()
        z_ground[col_idx] = marcher.z_ground
        if col_idx in keep:
            station_blocks[col_idx] = plane.copy()
        for (ix, z_abs), buf in probe_map.items():
            if ix == col_idx:
                row = int(round((z_abs - marcher.z_ground) / marcher.dz))
                row = min(max(row, 0), marcher.n_rows - 1)
                buf[:] = plane[:, row]
        pos = np.searchsorted(snap_cols, col_idx)
        if pos < len(snap_cols) and snap_cols[pos] == col_idx:
            x_here = col_idx * marcher.dx
            for ct, block in snaps.items():
                s_val = ct - x_here - marcher.s_offset
                ell = int(round(s_val / marcher.ds))
                if 0 <= ell < marcher.n_s:
                    block[pos] = plane[ell]

    record(0, marcher.plane)
    for n in range(1, n_cols):
        plane = marcher.step()
        record(n, plane)
    if not np.all(np.isfinite(plane_sup)):
        raise SolverError("non-finite field during the march")
    return TDPEResult(
        stations=station_blocks, probes=probe_map, snapshots=snaps,
        snapshot_x=snap_cols * marcher.dx, s_grid=marcher.s_grid,
        s_offset=marcher.s_offset, z_ground=z_ground, plane_sup=plane_sup,
        wall_time=time.perf_counter() - t0, kernel=marcher.kernel)


def station_envelope(block):
    """Envelope over delay for every height of a station block."""
    return np.stack([envelope_from_samples(block[:, m])
                     for m in range(block.shape[1])], axis=1)
