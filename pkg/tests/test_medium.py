import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from vortexsqueeze.beams import BeamSpec, make_beam
from vortexsqueeze.errors import StepTooCoarse
from vortexsqueeze.fields import propagate_free, total_power
from vortexsqueeze.medium import (
    MediumSpec,
    SCREEN_PHASE_BUDGET,
    _screen_log_ratio,
    local_saturation_profile,
    max_screen_phase,
    propagate_medium,
    required_steps,
)
from vortexsqueeze.noise import GainAccumulator, gain_integrals


def medium(density=2.7e12, length=0.01, **kw) -> MediumSpec:
    return MediumSpec(density=density, cell_length=length, **kw)


class TestSpec:
    def test_negative_density_rejected(self):
        with pytest.raises(ValueError):
            medium(density=-1.0)

    def test_bad_length_rejected(self):
        with pytest.raises(ValueError):
            medium(length=0.0)

    def test_bad_saturation_rejected(self):
        with pytest.raises(ValueError):
            medium(saturation_intensity=0.0)

    def test_density_conversion(self):
        assert medium(density=2.7e12).density_m3 == 2.7e18

    def test_lorentz_denominator(self):
        assert medium(detuning=4.0).lorentz_denominator == 65.0

    def test_saturation_profile(self, gaussian_beam):
        m = medium()
        s = local_saturation_profile(gaussian_beam, m)
        expected = gaussian_beam.intensity() / (
            m.saturation_intensity * m.lorentz_denominator
        )
        np.testing.assert_allclose(s, expected)


class TestScreenLaw:
    """The per-screen absorption solve against an independent ODE oracle."""

    @pytest.mark.parametrize("i_in", [1e-2, 1.0, 3e3, 2e5, 5e6])
    def test_matches_ode_oracle(self, i_in):
        m = medium(density=6e12)
        dz = 2.5e-4
        alpha0 = m.density_m3 * m.cross_section

        def rhs(z, i):
            return -alpha0 * i / (m.lorentz_denominator + i / m.saturation_intensity)

        sol = solve_ivp(rhs, (0.0, dz), [i_in], rtol=1e-12, atol=1e-300)
        oracle = np.log(sol.y[0, -1] / i_in)
        got = _screen_log_ratio(np.array([[i_in]]), m, dz)[0, 0]
        assert abs(got - oracle) < 1e-10

    def test_small_signal_is_beer_lambert(self):
        m = medium(density=1e12)
        dz = 1e-3
        got = _screen_log_ratio(np.array([[1e-6]]), m, dz)[0, 0]
        expected = -m.density_m3 * m.cross_section * dz / m.lorentz_denominator
        assert abs(got - expected) / abs(expected) < 1e-9

    def test_strong_saturation_is_linear_loss(self):
        # s >> B: dI/dz -> -N sigma0 I_s, so I drops by about N sigma0 I_s dz
        m = medium(density=6e12)
        dz = 1e-3
        i_in = 1e9
        got = _screen_log_ratio(np.array([[i_in]]), m, dz)[0, 0]
        drop = m.density_m3 * m.cross_section * m.saturation_intensity * dz
        assert abs(got - np.log1p(-drop / i_in)) < 1e-2 * abs(got)

    def test_monotone_in_intensity(self):
        m = medium(density=6e12)
        inten = np.logspace(-3, 7, 200).reshape(1, -1)
        ratio = _screen_log_ratio(inten, m, 5e-4)
        assert np.all(ratio < 0)
        # relative loss weakens with saturation
        assert np.all(np.diff(ratio[0]) > 0)


class TestStepControl:
    def test_max_screen_phase_formula(self):
        m = medium(density=2.7e12, detuning=4.0)
        expected = 4.0 * 2.7e18 * m.cross_section * 1e-3 / 65.0
        assert np.isclose(max_screen_phase(m, 1e-3), expected, rtol=1e-12)

    def test_required_steps_never_trips(self, gaussian_beam):
        m = medium(density=6e13)  # strongly absorbing
        steps = required_steps(m, minimum=1)
        assert max_screen_phase(m, m.cell_length / steps) <= SCREEN_PHASE_BUDGET
        assert max_screen_phase(m, m.cell_length / (steps - 1)) > SCREEN_PHASE_BUDGET

    def test_minimum_dominates(self):
        assert required_steps(medium(density=1e10), minimum=40) == 40

    def test_too_coarse_raises(self, gaussian_beam):
        m = medium(density=6e13)
        with pytest.raises(StepTooCoarse):
            propagate_medium(gaussian_beam, m, steps=2)

    def test_bad_steps_rejected(self, gaussian_beam):
        with pytest.raises(ValueError):
            propagate_medium(gaussian_beam, medium(), steps=0)

    def test_bad_precision_rejected(self, gaussian_beam):
        with pytest.raises(ValueError):
            propagate_medium(gaussian_beam, medium(), precision="half")


class TestPropagation:
    def test_empty_cell_is_free_space(self, gaussian_beam):
        m = medium(density=0.0)
        out = propagate_medium(gaussian_beam, m, steps=7)
        ref = propagate_free(gaussian_beam, m.cell_length)
        np.testing.assert_array_equal(out.amplitude, ref.amplitude)

    def test_empty_cell_recording(self, gaussian_beam):
        m = medium(density=0.0)
        out, evo = propagate_medium(gaussian_beam, m, steps=5, record=True)
        assert len(evo.screens) == 5
        assert evo.transmission == pytest.approx(1.0, abs=1e-9)

    def test_power_only_decreases(self, gaussian_beam):
        out = propagate_medium(gaussian_beam, medium(), precision="double")
        assert total_power(out) < total_power(gaussian_beam)

    def test_transmission_monotone_in_density(self, gaussian_beam):
        ts = []
        for n in (3e11, 1e12, 2.7e12, 6e12):
            out = propagate_medium(gaussian_beam, medium(density=n))
            ts.append(total_power(out) / total_power(gaussian_beam))
        assert all(b < a for a, b in zip(ts, ts[1:]))

    def test_small_signal_beer_lambert(self, small_grid):
        # weak, wide beam: negligible saturation and diffraction, so the
        # whole-cell transmission follows exp(-N sigma0 L / (1 + 4 delta^2))
        beam = make_beam(BeamSpec("gaussian", 0.2e-3, 1e-9), small_grid)
        m = medium(density=2.7e12)
        out = propagate_medium(beam, m, precision="double")
        t = total_power(out) / total_power(beam)
        expected = np.exp(
            -m.density_m3 * m.cross_section * m.cell_length / m.lorentz_denominator
        )
        assert abs(t - expected) / expected < 1e-3

    def test_step_halving_converges(self, gaussian_beam):
        m = medium()
        coarse = propagate_medium(gaussian_beam, m, steps=40, precision="double")
        fine = propagate_medium(gaussian_beam, m, steps=80, precision="double")
        err = np.linalg.norm(fine.amplitude - coarse.amplitude)
        assert err / np.linalg.norm(fine.amplitude) < 1e-4

    def test_single_close_to_double(self, gaussian_beam):
        m = medium()
        s = propagate_medium(gaussian_beam, m, precision="single")
        d = propagate_medium(gaussian_beam, m, precision="double")
        err = np.linalg.norm(s.amplitude - d.amplitude)
        assert err / np.linalg.norm(d.amplitude) < 1e-4

    def test_defocusing_expands_far_field(self, gaussian_beam):
        # positive detuning acts as a diverging lens: after the cell plus a
        # free drift, the nonlinear beam's second moment exceeds the linear one
        m = medium(density=6e12, detuning=4.0)
        lin = propagate_free(gaussian_beam, m.cell_length + 0.3)
        non = propagate_free(propagate_medium(gaussian_beam, m, precision="double"), 0.3)

        def msq(f):
            inten = f.intensity()
            xx, yy = f.xy_mesh()
            return float(((xx**2 + yy**2) * inten).sum() / inten.sum())

        assert msq(non) > msq(lin)

    def test_record_and_hook_agree(self, gaussian_beam):
        m = medium()
        acc = GainAccumulator(m, m.cell_length / 40)
        out_h = propagate_medium(gaussian_beam, m, screen_hook=acc)
        out_r, evo = propagate_medium(gaussian_beam, m, record=True)
        np.testing.assert_array_equal(out_h.amplitude, out_r.amplitude)
        g_rec, e_rec, _ = gain_integrals(evo)
        g_acc, e_acc = acc.integrals()
        assert np.isclose(g_acc, g_rec, rtol=1e-6)
        assert np.isclose(e_acc, e_rec, rtol=1e-6)

    def test_screen_positions(self, gaussian_beam):
        m = medium(density=1e12)
        _, evo = propagate_medium(gaussian_beam, m, steps=4, record=True)
        dz = m.cell_length / 4
        zs = [s.z for s in evo.screens]
        np.testing.assert_allclose(zs, [dz / 2, 3 * dz / 2, 5 * dz / 2, 7 * dz / 2])


@settings(max_examples=15, deadline=None)
@given(
    log_i=st.floats(min_value=-3.0, max_value=7.0),
    density=st.floats(min_value=1e11, max_value=1e13),
    detuning=st.floats(min_value=-6.0, max_value=6.0),
)
def test_screen_law_properties(log_i, density, detuning):
    m = MediumSpec(density=density, cell_length=0.01, detuning=detuning)
    dz = 2.5e-4
    ratio = _screen_log_ratio(np.array([[10.0**log_i]]), m, dz)[0, 0]
    # always lossy, never more than the unsaturated Beer-Lambert limit
    assert -m.density_m3 * m.cross_section * dz / m.lorentz_denominator <= ratio < 0
