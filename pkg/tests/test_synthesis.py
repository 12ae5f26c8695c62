import math

import numpy as np
import pytest

from terrapulse.fields import GridSpec
from terrapulse.media import SoilModel
from terrapulse.pe import GaussianBeamSpec, PEScenario, solve_pe
from terrapulse.signal import AnalyticSignal, PulseSpec, spectrum
from terrapulse.synthesis import (
    SpectralSweep, SynthesisError, band_for_pulse, run_sweep,
    synthesize_snapshot, validate_sweep,
)

from conftest import K200


@pytest.fixture(scope="module")
def pulse30():
    return PulseSpec(kind="damped_sinusoid", a=math.pi / 30.0, k0=K200)


@pytest.fixture(scope="module")
def scenario():
    grid = GridSpec(x_max=100.0, z_max=400.0, dx=2.0, dz=0.5)
    beam = GaussianBeamSpec(z0=150.0, w0=40.0, rho0=300.0, beta=-0.05)
    return PEScenario(grid=grid, beam=beam, k=K200,
                      soil=SoilModel(epsilon=10.0, sigma_si=0.01),
                      bottom_bc="impedance", top_bc="transparent")


class TestValidation:
    def test_band_default(self, pulse30):
        lo, hi = band_for_pulse(pulse30, 3.0)
        assert hi - lo == pytest.approx(6.0 * 2.0 * math.pi / 30.0)
        assert (lo + hi) / 2.0 == pytest.approx(pulse30.k0)

    def test_nonpositive_k_rejected(self):
        with pytest.raises(SynthesisError):
            validate_sweep(-0.1, 1.0, 11, 40.0, 400.0)

    def test_anti_phantom_rule(self):
        # spacing must satisfy dk <= 2 pi / (4 s_window)
        with pytest.raises(SynthesisError):
            validate_sweep(3.0, 5.0, 11, 200.0, 400.0)
        ks = validate_sweep(3.0, 5.0, 301, 200.0, 400.0)
        assert len(ks) == 301

    def test_band_tail_warning(self, scenario):
        narrow = PulseSpec(kind="damped_sinusoid", a=math.pi / 30.0, k0=K200)
        with pytest.warns(UserWarning, match="spectral"):
            run_sweep(scenario, narrow, s_window=20.0, n_freqs=9,
                      half_width_factor=0.5, keep_columns=[0])


class TestSynthesize:
    def test_single_frequency_degenerates(self, scenario, pulse30):
        res = solve_pe(scenario, keep_columns=[0])
        sweep = SpectralSweep(k_values=np.array([pulse30.k0]),
                              fields=[res.field], scenario=scenario,
                              s_window=45.0)
        s = np.linspace(0.0, 10.0, 11)
        block = synthesize_snapshot(sweep, pulse30, s, station=0)
        expect = (res.field.values[0][:, None] * 2.0
                  * spectrum(pulse30, pulse30.k0)
                  * np.exp(-1j * pulse30.k0 * s)[None, :]) / (2.0 * math.pi)
        assert np.abs(block - expect).max() < 1e-14 * np.abs(expect).max()

    @pytest.mark.slow
    def test_initial_station_reproduces_delayed_signal(self, scenario,
                                                       pulse30):
        # wide band: the synthesized x = 0 block equals A0(z) F+(s - Phi0(z))
        sweep = run_sweep(scenario, pulse30, s_window=45.0, n_freqs=161,
                          half_width_factor=12.0, keep_columns=[0])
        s = np.linspace(0.0, 44.0, 221)
        block = synthesize_snapshot(sweep, pulse30, s, station=0)
        sig = AnalyticSignal(pulse30)
        beam = scenario.beam
        z = np.arange(scenario.grid.n_z + 1) * scenario.grid.dz
        ref = beam.amplitude0(z)[:, None] \
            * sig.eval_fast(s[None, :] - beam.eikonal0(z)[:, None] + 0j)
        rel_l2 = np.linalg.norm(block - ref) / np.linalg.norm(ref)
        assert rel_l2 < 1e-2

    def test_refinement_stability(self, scenario, pulse30):
        # halving dk (already inside the rule) barely changes the snapshot
        s = np.linspace(0.0, 30.0, 61)
        blocks = []
        for n in (81, 161):
            sweep = run_sweep(scenario, pulse30, s_window=45.0, n_freqs=n,
                              half_width_factor=6.0, keep_columns=[0])
            blocks.append(synthesize_snapshot(sweep, pulse30, s, station=0))
        change = np.linalg.norm(blocks[1] - blocks[0]) \
            / np.linalg.norm(blocks[1])
        assert change < 1e-3

    def test_energy_bounded_by_band(self, scenario, pulse30):
        # Bessel-type inequality at the source plane: snapshot energy stays
        # within the band-limited signal energy (1% slack)
        sweep = run_sweep(scenario, pulse30, s_window=45.0, n_freqs=81,
                          half_width_factor=6.0, keep_columns=[0])
        s = np.arange(0.0, 45.0, 0.2)
        block = synthesize_snapshot(sweep, pulse30, s, station=0)
        dz, ds = scenario.grid.dz, 0.2
        snap_energy = 0.5 * np.sum(np.abs(block) ** 2) * dz * ds
        ks = sweep.k_values
        amps = np.abs(2.0 * spectrum(pulse30, ks)) ** 2
        z = np.arange(scenario.grid.n_z + 1) * scenario.grid.dz
        a0sq = np.sum(scenario.beam.amplitude0(z) ** 2) * dz
        band_energy = a0sq * np.trapezoid(amps, ks) / (2.0 * math.pi)
        assert snap_energy <= band_energy * 1.01

    def test_free_space_peak_delay_invariant(self, pulse30):
        # collimated beam in free space: the envelope peak stays at the same
        # delay at every range (stationary-phase property of the beam axis)
        grid = GridSpec(x_max=800.0, z_max=600.0, dx=2.0, dz=0.5)
        beam = GaussianBeamSpec(z0=300.0, w0=50.0, rho0=None, beta=0.0)
        scn = PEScenario(grid=grid, beam=beam, k=K200,
                         bottom_bc="dirichlet", top_bc="dirichlet")
        stations = [0, 200, 400]
        sweep = run_sweep(scn, pulse30, s_window=45.0, n_freqs=81,
                          half_width_factor=6.0, keep_columns=stations)
        s = np.arange(0.0, 40.0, 0.1)
        axis_row = 600
        peaks = []
        for pos in range(len(stations)):
            block = synthesize_snapshot(sweep, pulse30, s, station=pos)
            peaks.append(s[np.abs(block[axis_row]).argmax()])
        assert max(peaks) - min(peaks) <= 0.2 + 1e-9

    def test_window_warning(self, scenario, pulse30):
        sweep = run_sweep(scenario, pulse30, s_window=45.0, n_freqs=41,
                          half_width_factor=3.0, keep_columns=[0])
        with pytest.warns(UserWarning, match="anti-phantom"):
            synthesize_snapshot(sweep, pulse30, np.linspace(0, 80, 10),
                                station=0)
