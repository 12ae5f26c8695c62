import cmath
import math

import numpy as np
import pytest

from terrapulse import media
from terrapulse.media import (
    C_LIGHT, GAUSS_PER_SI, MediumError, SoilModel, brewster_angle,
    complex_permittivity, dispersive_bc_factor, impedance_coefficient,
    impedance_factor, kernel_params, reflection_coefficient,
)

K200 = 2.0 * math.pi * 200e6 / C_LIGHT  # wavenumber at 200 MHz


class TestSoilModel:
    def test_si_to_gauss_pairing(self):
        soil = SoilModel(epsilon=10.0, sigma_si=0.01)
        # engineering pairing 0.01 S/m ~ 9e7 1/s must hold to 0.2%
        assert soil.sigma_gauss == pytest.approx(9e7, rel=2e-3)
        assert soil.sigma_gauss == pytest.approx(0.01 * GAUSS_PER_SI, rel=1e-12)

    def test_gauss_to_si(self):
        soil = SoilModel(epsilon=10.0, sigma_gauss=9e7)
        assert soil.sigma_si == pytest.approx(9e7 / GAUSS_PER_SI, rel=1e-12)

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(MediumError):
            SoilModel(epsilon=10.0, sigma_gauss=9e7, sigma_si=0.02)

    def test_invalid_epsilon(self):
        with pytest.raises(MediumError):
            SoilModel(epsilon=0.5, sigma_si=0.0)

    def test_negative_sigma(self):
        with pytest.raises(MediumError):
            SoilModel(epsilon=10.0, sigma_si=-1.0)

    def test_default_lossless(self):
        assert SoilModel(epsilon=4.0).is_lossless


class TestComplexPermittivity:
    def test_paper_pairing_value(self):
        # direct evaluation: 4*pi*9e7/(2*pi*2e8) = 0.9 exactly
        soil = SoilModel(epsilon=10.0, sigma_gauss=9e7)
        eps_c = complex_permittivity(soil, K200)
        assert eps_c == pytest.approx(10.0 + 0.9j, abs=1e-12)

    def test_lossless(self):
        soil = SoilModel(epsilon=10.0)
        assert complex_permittivity(soil, 1.7) == pytest.approx(10.0 + 0.0j)

    def test_high_frequency_limit(self):
        soil = SoilModel(epsilon=10.0, sigma_gauss=9e7)
        eps_c = complex_permittivity(soil, 1e9)
        assert eps_c.imag < 1e-8
        assert eps_c.real == pytest.approx(10.0)

    def test_imag_nonnegative(self):
        soil = SoilModel(epsilon=3.0, sigma_si=0.02)
        for k in np.geomspace(0.01, 100.0, 13):
            assert complex_permittivity(soil, k).imag >= 0.0

    def test_rejects_nonpositive_k(self):
        soil = SoilModel(epsilon=10.0)
        with pytest.raises(MediumError):
            complex_permittivity(soil, 0.0)
        with pytest.raises(MediumError):
            complex_permittivity(soil, -1.0)


class TestReflection:
    def test_fresnel_normal_incidence_eps4(self):
        # (4 - 2)/(4 + 2) = 1/3
        assert reflection_coefficient("fresnel", 4.0, math.pi / 2) == \
            pytest.approx(1.0 / 3.0, abs=1e-14)

    @pytest.mark.parametrize("model", ["fresnel", "leontovich", "modified"])
    @pytest.mark.parametrize("eps_c", [10.0 + 0.0j, 10.0 + 0.9j])
    def test_grazing_limit(self, model, eps_c):
        r = reflection_coefficient(model, eps_c, 1e-6)
        assert abs(r - (-1.0)) < 1e-4

    def test_fresnel_brewster_zero(self):
        beta0 = brewster_angle(10.0)
        assert beta0 == pytest.approx(0.30627736916966947, abs=1e-15)
        assert abs(reflection_coefficient("fresnel", 10.0, beta0)) < 1e-10

    def test_fresnel_equals_leontovich_at_normal(self):
        for eps_c in (10.0 + 0.0j, 10.0 + 0.9j, 4.0 + 2.0j):
            rf = reflection_coefficient("fresnel", eps_c, math.pi / 2)
            rl = reflection_coefficient("leontovich", eps_c, math.pi / 2)
            assert rf == pytest.approx(rl, abs=1e-14)

    def test_modified_beats_leontovich_near_brewster(self):
        # quantified accuracy ranking on [beta0 - 0.1, beta0 + 0.1]
        beta0 = brewster_angle(10.0)
        beta = np.linspace(beta0 - 0.1, beta0 + 0.1, 81)
        rf = reflection_coefficient("fresnel", 10.0, beta)
        rl = reflection_coefficient("leontovich", 10.0, beta)
        rm = reflection_coefficient("modified", 10.0, beta)
        assert np.abs(rm - rf).max() < np.abs(rl - rf).max()

    @pytest.mark.parametrize("model", ["fresnel", "leontovich", "modified"])
    @pytest.mark.parametrize("eps_c", [10.0 + 0.0j, 10.0 + 0.9j, 3.0 + 0.4j])
    def test_passive_bound(self, model, eps_c):
        beta = np.linspace(1e-4, math.pi / 2, 200)
        r = reflection_coefficient(model, eps_c, beta)
        assert np.all(np.abs(r) <= 1.0 + 1e-12)

    def test_modified_singular_medium(self):
        with pytest.raises(MediumError):
            reflection_coefficient("modified", 1.0 + 0.0j, 0.3)

    def test_unknown_model(self):
        with pytest.raises(MediumError):
            reflection_coefficient("exact", 10.0, 0.3)

    def test_angle_range(self):
        with pytest.raises(MediumError):
            reflection_coefficient("fresnel", 10.0, -0.1)


class TestImpedanceFactor:
    def test_lossless_value(self):
        soil = SoilModel(epsilon=10.0)
        assert impedance_coefficient(soil, K200, 0.0) == \
            pytest.approx(0.3 + 0.0j, abs=1e-14)

    def test_slope_additive(self):
        soil = SoilModel(epsilon=6.0, sigma_si=0.004)
        flat = impedance_coefficient(soil, K200, 0.0)
        sloped = impedance_coefficient(soil, K200, 0.05)
        assert sloped == pytest.approx(flat - 0.05, abs=1e-15)

    def test_lossy_complex_arithmetic(self):
        # oracle: cmath.sqrt(9 + 0.9j)/(10 + 0.9j), frozen
        soil = SoilModel(epsilon=10.0, sigma_gauss=9e7)
        val = impedance_coefficient(soil, K200, 0.0)
        assert val == pytest.approx(0.2992978415612963 - 0.011955474189415935j,
                                    abs=1e-12)
        assert val == pytest.approx(cmath.sqrt(9.0 + 0.9j) / (10.0 + 0.9j),
                                    abs=1e-14)

    def test_branch_has_nonnegative_real_part(self):
        for eps in (2.0, 5.0, 15.0):
            for sig in (0.0, 1e-3, 0.05):
                soil = SoilModel(epsilon=eps, sigma_si=sig)
                for k in np.geomspace(0.05, 50.0, 9):
                    assert impedance_factor(soil, k).real >= 0.0

    def test_near_unity_warns(self):
        soil = SoilModel(epsilon=1.2)
        with pytest.warns(UserWarning):
            impedance_factor(soil, K200)


class TestKernelParams:
    def test_frozen_rates(self):
        p = kernel_params(SoilModel(epsilon=10.0, sigma_gauss=9e7))
        assert p.r == pytest.approx(0.3772521039513027, rel=1e-12)
        assert p.q == pytest.approx(0.20958450219516817, rel=1e-12)
        # spec quotes the rounded pair (0.3770, 0.2094) with c = 3e8
        assert p.r == pytest.approx(0.3770, rel=1e-3)
        assert p.q == pytest.approx(0.2094, rel=1e-3)

    def test_ordering_and_lossless(self):
        p = kernel_params(SoilModel(epsilon=10.0, sigma_si=0.01))
        assert p.r > p.q > 0.0
        p0 = kernel_params(SoilModel(epsilon=10.0))
        assert p0.r == 0.0 and p0.q == 0.0


class TestDispersiveIdentity:
    @pytest.mark.parametrize("sigma_si", [0.0, 0.001, 0.01])
    def test_identity_over_decade(self, sigma_si):
        soil = SoilModel(epsilon=10.0, sigma_si=sigma_si)
        for k in np.geomspace(K200 / 3.0, K200 * 3.3, 25):
            a = dispersive_bc_factor(soil, k)
            b = impedance_factor(soil, k)
            assert abs(a - b) <= 1e-12 * abs(b)

    def test_lossless_static_value(self):
        soil = SoilModel(epsilon=10.0)
        assert dispersive_bc_factor(soil, 2.7) == pytest.approx(0.3, abs=1e-14)

    def test_high_frequency_limit(self):
        soil = SoilModel(epsilon=10.0, sigma_gauss=9e7)
        val = dispersive_bc_factor(soil, 1e7)
        assert val == pytest.approx(0.3, abs=1e-6)

    def test_identity_at_wavelength_1p5m(self):
        soil = SoilModel(epsilon=10.0, sigma_gauss=9e7)
        k = 2.0 * math.pi / 1.5
        assert dispersive_bc_factor(soil, k) == \
            pytest.approx(impedance_factor(soil, k), rel=1e-12)
