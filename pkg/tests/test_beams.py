import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexsqueeze.beams import (
    BeamSpec,
    PhaseMaskSpec,
    apply_phase_mask,
    intensity_centroid,
    make_beam,
    mask_phase,
    oam_spectrum,
    recenter,
    stepped_mask_harmonic_fractions,
)
from vortexsqueeze.errors import GridTooSmall
from vortexsqueeze.fields import ComplexField2D, GridSpec, propagate_free, total_power

WAVELENGTH = 795e-9


class TestSpecs:
    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError):
            BeamSpec("bessel", 1e-3, 1e-3)

    def test_bad_waist_rejected(self):
        with pytest.raises(ValueError):
            BeamSpec("gaussian", -1e-3, 1e-3)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            BeamSpec("gaussian", 1e-3, -1.0)

    def test_peak_intensity(self):
        spec = BeamSpec("gaussian", 2e-3, 4e-3)
        assert np.isclose(spec.peak_intensity, 2 * 4e-3 / (np.pi * (2e-3) ** 2))

    def test_zero_charge_mask_rejected(self):
        with pytest.raises(ValueError):
            PhaseMaskSpec(0)

    def test_one_sector_mask_rejected(self):
        with pytest.raises(ValueError):
            PhaseMaskSpec(1, sectors=1)


class TestMakeBeam:
    def test_total_power(self, gaussian_beam):
        assert abs(total_power(gaussian_beam) - 10.5e-3) / 10.5e-3 < 1e-9

    def test_lg1_total_power(self, lg1_beam):
        assert abs(total_power(lg1_beam) - 10.5e-3) / 10.5e-3 < 1e-9

    def test_window_too_small(self):
        grid = GridSpec(64, 64, 1e-5, 1e-5, WAVELENGTH)
        with pytest.raises(GridTooSmall):
            make_beam(BeamSpec("gaussian", 1e-3, 1e-3), grid)

    def test_gaussian_profile_values(self, small_grid):
        w = 0.2e-3
        spec = BeamSpec("gaussian", w, 1e-3)
        f = make_beam(spec, small_grid)
        inten = f.intensity()
        c = small_grid.nx // 2
        assert np.isclose(inten[c, c], spec.peak_intensity, rtol=1e-12)
        # 1/e^2 point at r = w
        k = int(round(w / small_grid.dx))
        r = k * small_grid.dx
        expected = spec.peak_intensity * np.exp(-2 * r**2 / w**2)
        assert np.isclose(inten[c, c + k], expected, rtol=1e-12)

    def test_ring_mode_zero_on_axis(self, lg1_beam):
        inten = lg1_beam.intensity()
        c = lg1_beam.nx // 2
        assert inten[c, c] < 1e-6 * inten.max()

    def test_ring_mode_peak_radius(self, small_grid):
        w = 0.2e-3
        f = make_beam(BeamSpec("lg1", w, 1e-3), small_grid)
        inten = f.intensity()
        c = small_grid.nx // 2
        row = inten[c, c:]
        r_peak = np.argmax(row) * small_grid.dx
        assert abs(r_peak - w / np.sqrt(2)) <= small_grid.dx

    def test_ring_mode_radial_law(self, small_grid):
        # I(r)/I_peak = u e^{1-u} with u = 2 r^2 / w^2
        w = 0.2e-3
        spec = BeamSpec("lg1", w, 1e-3)
        f = make_beam(spec, small_grid)
        inten = f.intensity()
        c = small_grid.nx // 2
        k = int(round(w / small_grid.dx))
        r = k * small_grid.dx
        u = 2 * r**2 / w**2
        expected = spec.peak_intensity * u * np.exp(-u)
        assert np.isclose(inten[c, c + k], expected, rtol=1e-12)

    def test_ring_mode_azimuthal_phase(self, lg1_beam):
        c = lg1_beam.nx // 2
        k = 20
        right = lg1_beam.amplitude[c, c + k]
        top = lg1_beam.amplitude[c + k, c]  # +y, phi = pi/2
        assert np.isclose(np.angle(top) - np.angle(right), np.pi / 2, atol=1e-9)

    def test_centered_offset(self, small_grid):
        off = 5 * small_grid.dx
        f = make_beam(BeamSpec("gaussian", 0.2e-3, 1e-3, center=(off, 0.0)), small_grid)
        cx, cy = intensity_centroid(f)
        assert abs(cx - off) < 1e-7 and abs(cy) < 1e-9

    def test_curvature_is_pure_phase(self, small_grid):
        flat = make_beam(BeamSpec("gaussian", 0.2e-3, 1e-3), small_grid)
        curved = make_beam(
            BeamSpec("gaussian", 0.2e-3, 1e-3, curvature=0.5), small_grid
        )
        np.testing.assert_allclose(
            np.abs(curved.amplitude), np.abs(flat.amplitude), rtol=1e-12
        )


class TestPhaseMask:
    def test_power_conserved_exactly(self, gaussian_beam):
        masked = apply_phase_mask(gaussian_beam, PhaseMaskSpec(1, sectors=8))
        assert total_power(masked) == pytest.approx(total_power(gaussian_beam), rel=1e-15)

    def test_smooth_mask_phase_is_azimuth(self):
        xx, yy = np.meshgrid([1.0, 0.0, -1.0], [0.0, 1.0, -1.0])
        phase = mask_phase(PhaseMaskSpec(2), xx, yy)
        phi = np.mod(np.arctan2(yy, xx), 2 * np.pi)
        np.testing.assert_allclose(phase, 2 * phi)

    def test_stepped_mask_quantization(self):
        n = 8
        angles = 2 * np.pi * (np.arange(n) + 0.5) / n
        xx = np.cos(angles)
        yy = np.sin(angles)
        phase = mask_phase(PhaseMaskSpec(1, sectors=n), xx, yy)
        np.testing.assert_allclose(phase, 2 * np.pi * np.arange(n) / n, atol=1e-12)

    def test_mask_center_outside_window_rejected(self, gaussian_beam):
        with pytest.raises(ValueError):
            apply_phase_mask(gaussian_beam, PhaseMaskSpec(1, center=(1.0, 0.0)))


class TestOamSpectrum:
    def test_gaussian_is_pure_m0(self, gaussian_beam):
        spec = oam_spectrum(gaussian_beam)
        assert spec.fraction(0) > 1.0 - 1e-6
        assert abs(spec.mean) < 1e-6

    def test_ring_mode_is_pure_m1(self, lg1_beam):
        spec = oam_spectrum(lg1_beam)
        assert spec.fraction(1) > 1.0 - 1e-4
        assert abs(spec.mean - 1.0) < 1e-4

    def test_fractions_sum_to_one(self, lg1_beam):
        spec = oam_spectrum(lg1_beam)
        assert np.isclose(sum(spec.fractions.values()) + spec.out_of_band, 1.0, atol=1e-12)

    def test_stepped_mask_matches_closed_form(self, gaussian_beam):
        # polar resampling on the 256^2 fixture leaks a few 1e-3 across the
        # sector discontinuities; the tight comparison runs on the full grid
        n = 8
        masked = apply_phase_mask(gaussian_beam, PhaseMaskSpec(1, sectors=n))
        spec = oam_spectrum(masked)
        m_values = range(-16, 17)
        oracle = stepped_mask_harmonic_fractions(1, n, m_values)
        for m in m_values:
            assert abs(spec.fraction(m) - oracle[m]) < 5e-3, f"m={m}"

    def test_stepped_mask_fundamental_fraction_full_grid(self):
        # |c_1|^2 = sinc^2(pi/8) = 0.94964...
        w = 0.2e-3
        window = 16 * w * np.sqrt(2 * np.log(2))
        grid = GridSpec(1024, 1024, window / 1024, window / 1024, WAVELENGTH)
        beam = make_beam(BeamSpec("gaussian", w, 1e-3), grid)
        masked = apply_phase_mask(beam, PhaseMaskSpec(1, sectors=8))
        spec = oam_spectrum(masked)
        expected = float(np.sinc(1.0 / 8.0) ** 2)
        assert abs(spec.fraction(1) - expected) < 2e-3
        assert abs(spec.mean - 2.0 * np.sqrt(2.0) / np.pi) < 5e-3

    def test_spectrum_invariant_under_propagation(self, lg1_beam):
        before = oam_spectrum(lg1_beam)
        after = oam_spectrum(propagate_free(lg1_beam, 0.02))
        for m in (-2, -1, 0, 1, 2):
            assert abs(before.fraction(m) - after.fraction(m)) < 1e-6

    def test_zero_field(self):
        f = ComplexField2D(np.zeros((64, 64), complex), 1e-5, 1e-5, WAVELENGTH)
        spec = oam_spectrum(f)
        assert spec.mean == 0.0 and spec.fraction(0) == 0.0


class TestRecenter:
    def test_recenter_moves_centroid_to_origin(self, small_grid):
        off = 7.3 * small_grid.dx
        f = make_beam(
            BeamSpec("gaussian", 0.2e-3, 1e-3, center=(off, -off / 2)), small_grid
        )
        g = recenter(f)
        cx, cy = intensity_centroid(g)
        assert abs(cx) < 1e-8 and abs(cy) < 1e-8

    def test_recenter_conserves_power(self, small_grid):
        f = make_beam(
            BeamSpec("gaussian", 0.2e-3, 1e-3, center=(3e-5, 1e-5)), small_grid
        )
        g = recenter(f)
        assert np.isclose(total_power(g), total_power(f), rtol=1e-9)

    def test_centered_field_nearly_untouched(self, gaussian_beam):
        out = recenter(gaussian_beam)
        err = np.abs(out.amplitude - gaussian_beam.amplitude).max()
        assert err < 1e-9 * np.abs(gaussian_beam.amplitude).max()


@settings(max_examples=15, deadline=None)
@given(
    charge=st.integers(min_value=-3, max_value=3).filter(lambda c: c != 0),
    sectors=st.integers(min_value=2, max_value=16),
)
def test_stepped_mask_oracle_normalization(charge, sectors):
    # the closed-form harmonic powers form a complete basis: sum over a wide
    # band approaches 1 from below (the 1/m^2 tail is heaviest for 2 sectors)
    band = range(charge - 50 * sectors, charge + 50 * sectors + 1)
    total = sum(stepped_mask_harmonic_fractions(charge, sectors, band).values())
    assert 0.99 < total <= 1.0 + 1e-12
