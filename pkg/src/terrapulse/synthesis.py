"""Pulse fields by spectral superposition of monochromatic solutions.

A band of marching runs u(x, z, k) is combined with the one-sided pulse
spectrum into the traveling-frame transient

    H+(x, z, s) = (1/2pi) integral_0^inf 2 F~(k) u(x, z, k) e^{-iks} dk,

evaluated by trapezoid quadrature on the uniform wavenumber sweep.  The
physical field is Re H+ and |H+| is its envelope.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .pe import PEScenario, solve_pe
from .signal import spectrum

TAIL_ENERGY_WARN = 0.01


class SynthesisError(ValueError):
    pass


@dataclass
class SpectralSweep:
    """Monochromatic runs on a common grid, one per wavenumber."""

    k_values: np.ndarray
    fields: list                  # ComplexField2D per k, same kept columns
    scenario: PEScenario
    s_window: float

    @property
    def dk(self):
        return float(self.k_values[1] - self.k_values[0]) \
            if len(self.k_values) > 1 else 0.0

    @property
    def kept_x_indices(self):
        return self.fields[0].x_indices


def band_for_pulse(pulse, half_width_factor=3.0):
    """Sweep band k0 +/- factor * (2 pi / Lambda) around the carrier."""
    dk_band = half_width_factor * 2.0 * math.pi / pulse.spatial_length
    return pulse.k0 - dk_band, pulse.k0 + dk_band


def validate_sweep(k_lo, k_hi, n_freqs, s_window, z_max):
    """Anti-phantom and positivity checks; returns the k samples."""
    if n_freqs < 1 or k_hi < k_lo:
        raise SynthesisError("empty sweep band")
    ks = np.linspace(k_lo, k_hi, n_freqs)
    if ks[0] <= 0.0:
        raise SynthesisError(
            f"sweep reaches nonpositive wavenumbers (k_min = {ks[0]:.4g}); "
            "one-sided spectra require k > 0")
    if n_freqs > 1:
        dk = ks[1] - ks[0]
        if dk > 2.0 * math.pi / (4.0 * s_window):
            raise SynthesisError(
                f"sweep spacing {dk:.4g} violates the delay-window rule "
                f"dk <= 2 pi / (4 * {s_window:.4g} m); phantom copies would "
                "fold into the window")
    if ks[0] < 4.0 * math.pi / z_max:
        warnings.warn("lowest sweep wavenumber close to the paraxial "
                      "validity floor 2 pi / z_max", stacklevel=2)
    return ks


def run_sweep(scenario, pulse, s_window, n_freqs=41, half_width_factor=3.0,
              keep_columns=None, executor=None):
    """Solve the marching problem over the sweep band.

    ``keep_columns`` selects the range stations retained per run (defaults
    to the final column).  Runs are independent; an optional
    ``concurrent.futures`` executor parallelizes them with results ordered
    deterministically by wavenumber.
    """
    k_lo, k_hi = band_for_pulse(pulse, half_width_factor)
    ks = validate_sweep(k_lo, k_hi, n_freqs, s_window, scenario.grid.z_max)
    _check_band_tail(pulse, k_lo, k_hi)
    if keep_columns is None:
        keep_columns = [scenario.grid.n_x]

    def one(k):
        return solve_pe(replace(scenario, k=float(k)),
                        keep_columns=keep_columns).field

    if executor is None:
        fields = [one(k) for k in ks]
    else:
        fields = list(executor.map(one, ks))
    return SpectralSweep(k_values=ks, fields=fields, scenario=scenario,
                         s_window=s_window)


def _check_band_tail(pulse, k_lo, k_hi):
    kk = np.linspace(max(k_lo, 1e-9), k_hi, 2001)
    inside = np.trapezoid(np.abs(spectrum(pulse, kk)) ** 2, kk)
    span = 40.0 * (k_hi - k_lo)
    kk_wide = np.linspace(1e-9, k_hi + span, 40001)
    total = np.trapezoid(np.abs(spectrum(pulse, kk_wide)) ** 2, kk_wide)
    if inside < (1.0 - TAIL_ENERGY_WARN) * total:
        warnings.warn(
            f"pulse keeps {100 * (1 - inside / total):.2f}% of its spectral "
            "energy outside the sweep band", stacklevel=3)


def synthesize_snapshot(sweep, pulse, s_grid, station=0):
    """Transient block H+(z, s) at one kept range station.

    Trapezoid quadrature over the sweep of 2 F~(k) u(z, k) e^{-iks}.
    Returns a complex array of shape (n_z, n_s); the physical field is the
    real part, the envelope its magnitude.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.max() - s_grid.min() > sweep.s_window + 1e-9:
        warnings.warn("requested delays exceed the anti-phantom window",
                      stacklevel=2)
    ks = sweep.k_values
    u_cols = np.stack([f.values[station] for f in sweep.fields])  # (n_k, n_z)
    amps = 2.0 * spectrum(pulse, ks)
    weights = np.full(len(ks), sweep.dk if len(ks) > 1 else 1.0)
    if len(ks) > 1:
        weights[0] *= 0.5
        weights[-1] *= 0.5
    phase = np.exp(-1j * np.outer(ks, s_grid))      # (n_k, n_s)
    kernel = (amps * weights)[:, None] * phase
    return (u_cols.T @ kernel) / (2.0 * math.pi)    # (n_z, n_s)


def synthesize_time_snapshot(sweep, pulse, t_over_c, stations=None):
    """Field over (x, z) at fixed time: s = ct - x varies per station."""
    if stations is None:
        stations = range(len(sweep.kept_x_indices))
    cols = []
    for st in stations:
        x = sweep.fields[0].x[st]
        s_val = t_over_c - x
        block = synthesize_snapshot(sweep, pulse, np.array([s_val]),
                                    station=st)
        cols.append(block[:, 0])
    return np.stack(cols)
