"""Photo-ionization kinetics: rates, propagation, trajectories."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from darkspin.charge import (
    ChargeRateModel,
    JumpTrajectory,
    PhotonFluxModel,
    SaturationModel,
    cross_section,
    dark_rho_relaxation,
    generator_matrix,
    photon_flux,
    polarization_decay_rate,
    propagate,
    sample_trajectory,
    saturation_rate,
    steady_state,
)
from darkspin.defects import ChargeSpinPopulation
from darkspin.errors import FitError, ValidationError

SAT = SaturationModel(gamma_sat=2.62e4, p_sat=1.6e-3)


class TestSaturation:
    def test_zero_power(self):
        assert saturation_rate(0.0, SAT) == 0.0

    def test_knee_is_half(self):
        assert saturation_rate(SAT.p_sat, SAT) == pytest.approx(SAT.gamma_sat / 2)

    def test_high_power_limit(self):
        assert saturation_rate(1e3, SAT) == pytest.approx(SAT.gamma_sat, rel=1e-5)

    def test_low_power_slope(self):
        p = 1e-9
        assert saturation_rate(p, SAT) / p == pytest.approx(
            SAT.low_power_slope, rel=1e-5)
        assert SAT.low_power_slope == pytest.approx(2.62e4 / 1.6e-3)

    def test_negative_power_rejected(self):
        with pytest.raises(ValidationError):
            saturation_rate(-1e-3, SAT)

    def test_invalid_model(self):
        with pytest.raises(ValidationError):
            SaturationModel(gamma_sat=0.0, p_sat=1e-3)


class TestPhotonFlux:
    def test_default_spot_area(self):
        m = PhotonFluxModel()
        # pi * (0.61 lambda / NA)^2 for 532 nm, NA 0.9
        assert m.spot_area == pytest.approx(4.0846e-13, rel=1e-4)

    def test_flux_at_one_milliwatt(self):
        m = PhotonFluxModel()
        assert photon_flux(1e-3, m) == pytest.approx(6.5567e27, rel=1e-4)

    def test_flux_linear_in_power(self):
        m = PhotonFluxModel()
        p = np.array([0.0, 1e-4, 2e-4])
        f = photon_flux(p, m)
        assert f[0] == 0.0
        assert f[2] == pytest.approx(2 * f[1])

    def test_cross_section_round_trip(self):
        m = PhotonFluxModel()
        sigma = 2.5e-24  # m^2
        slope = sigma * m.flux_per_watt
        assert slope == pytest.approx(1.639e7, rel=1e-3)
        assert cross_section(slope, m) == pytest.approx(sigma, rel=1e-12)

    def test_cross_section_bad_slope(self):
        with pytest.raises(FitError):
            cross_section(-1.0, PhotonFluxModel())

    def test_explicit_spot_area(self):
        m = PhotonFluxModel(spot_area=1e-12)
        assert photon_flux(1e-3, PhotonFluxModel()) > photon_flux(1e-3, m)


class TestRateModel:
    def test_flip_rate(self):
        r = ChargeRateModel(SAT, t1_dark=1.9e-3)
        assert r.r_flip == pytest.approx(1.0 / (2 * 1.9e-3))

    def test_dark_steady_rho(self):
        r = ChargeRateModel(SAT, r_ion_dark=400.0, r_rec_dark=600.0)
        assert r.rho_steady_dark == pytest.approx(0.6)
        assert r.charge_relaxation_time == pytest.approx(1e-3)

    def test_dark_steady_rho_no_rates(self):
        r = ChargeRateModel(SAT)
        assert r.rho_steady_dark == 1.0
        assert r.charge_relaxation_time == np.inf

    def test_generator_columns_sum_to_zero(self):
        r = ChargeRateModel(SAT, r_rec=1e3)
        g = generator_matrix(r, 0.5e-3)
        assert np.allclose(g.sum(axis=0), 0.0, atol=1e-12)

    def test_polarization_decay_rate_dark(self):
        r = ChargeRateModel(SAT, t1_dark=1.9e-3)
        assert polarization_decay_rate(0.0, r) == pytest.approx(526.3, rel=1e-3)

    def test_polarization_decay_rate_lit(self):
        r = ChargeRateModel(SAT, t1_dark=1.9e-3)
        expected = saturation_rate(1e-3, SAT) + 1 / 1.9e-3
        assert polarization_decay_rate(1e-3, r) == pytest.approx(expected)


class TestPropagate:
    def test_matches_ode_integrator(self):
        # expm propagation against an independent adaptive ODE solve.
        r = ChargeRateModel(SAT, r_rec=2e3, t1_dark=1.9e-3)
        g = generator_matrix(r, 0.8e-3)
        p0 = ChargeSpinPopulation(0.7, 0.2, 0.1)
        for t in (1e-5, 1e-4, 1e-3):
            got = propagate(p0, r, 0.8e-3, t).as_array()
            sol = solve_ivp(lambda _, y: g @ y, (0, t), p0.as_array(),
                            rtol=1e-11, atol=1e-13)
            assert np.allclose(got, sol.y[:, -1], atol=1e-8)

    def test_zero_time_identity(self):
        r = ChargeRateModel(SAT, r_rec=2e3)
        p0 = ChargeSpinPopulation(0.5, 0.3, 0.2)
        assert np.allclose(propagate(p0, r, 1e-3, 0.0).as_array(),
                           p0.as_array(), atol=1e-12)

    def test_negative_time_rejected(self):
        r = ChargeRateModel(SAT)
        with pytest.raises(ValidationError):
            propagate(ChargeSpinPopulation(1, 0, 0), r, 0.0, -1.0)

    def test_long_time_reaches_steady_state(self):
        r = ChargeRateModel(SAT, r_rec=2e3)
        p0 = ChargeSpinPopulation(1.0, 0.0, 0.0)
        far = propagate(p0, r, 1e-3, 1.0).as_array()
        ss = steady_state(r, 1e-3).as_array()
        assert np.allclose(far, ss, atol=1e-9)

    def test_steady_state_is_generator_kernel(self):
        r = ChargeRateModel(SAT, r_rec=2e3)
        ss = steady_state(r, 1e-3)
        g = generator_matrix(r, 1e-3)
        assert np.allclose(g @ ss.as_array(), 0.0, atol=1e-9)
        r_ion = saturation_rate(1e-3, SAT)
        assert ss.p_plus == pytest.approx(r_ion / (r_ion + 2e3))

    def test_steady_state_undefined_without_rates(self):
        r = ChargeRateModel(SaturationModel(1.0, 1.0))
        with pytest.raises(ValidationError):
            steady_state(r, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(t1=st.floats(1e-6, 1e-3), t2=st.floats(1e-6, 1e-3),
           power=st.floats(0.0, 5e-3))
    def test_semigroup_property(self, t1, t2, power):
        r = ChargeRateModel(SAT, r_rec=1.5e3)
        p0 = ChargeSpinPopulation(0.4, 0.35, 0.25)
        one = propagate(p0, r, power, t1 + t2).as_array()
        two = propagate(propagate(p0, r, power, t1), r, power, t2).as_array()
        assert np.allclose(one, two, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(t=st.floats(0.0, 1e-2), power=st.floats(0.0, 5e-3))
    def test_probability_conserved(self, t, power):
        r = ChargeRateModel(SAT, r_rec=1.5e3)
        out = propagate(ChargeSpinPopulation(0.9, 0.05, 0.05), r, power, t)
        arr = out.as_array()
        assert arr.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.all(arr >= 0.0)


class TestTrajectories:
    def test_deterministic_for_fixed_seed(self):
        r = ChargeRateModel(SAT, r_rec=2e3, t1_dark=1.9e-3)
        p0 = ChargeSpinPopulation(1.0, 0.0, 0.0)
        a = sample_trajectory(p0, r, 1e-3, 5e-3, seed=7, stream_id=3)
        b = sample_trajectory(p0, r, 1e-3, 5e-3, seed=7, stream_id=3)
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.states, b.states)

    def test_streams_differ(self):
        r = ChargeRateModel(SAT, r_rec=2e3)
        p0 = ChargeSpinPopulation(1.0, 0.0, 0.0)
        a = sample_trajectory(p0, r, 1e-3, 5e-3, seed=7, stream_id=0)
        b = sample_trajectory(p0, r, 1e-3, 5e-3, seed=7, stream_id=1)
        assert len(a.times) != len(b.times) or not np.array_equal(a.times, b.times)

    def test_no_rates_no_jumps(self):
        r = ChargeRateModel(SaturationModel(1.0, 1.0))
        # zero power, no recapture, but spin flips still run; suppress via
        # enormous T1 to get an effectively frozen path
        r = ChargeRateModel(SaturationModel(1.0, 1.0), t1_dark=1e12)
        traj = sample_trajectory(ChargeSpinPopulation(1, 0, 0), r, 0.0, 1.0,
                                 seed=0)
        assert traj.state_at(0.5) == traj.states[0]

    def test_state_at_lookup(self):
        traj = JumpTrajectory(np.array([0.0, 1.0, 2.0]),
                              np.array([0, 2, 1]))
        assert traj.state_at(0.5) == 0
        assert traj.state_at(1.0) == 2
        assert traj.state_at(5.0) == 1

    def test_occupancy_matches_master_equation(self):
        # empirical state distribution at a checkpoint vs expm, 3 sigma
        r = ChargeRateModel(SAT, r_rec=2e3, t1_dark=1.9e-3)
        p0 = ChargeSpinPopulation(1.0, 0.0, 0.0)
        t_check, n = 2e-4, 1500
        counts = np.zeros(3)
        for k in range(n):
            counts[sample_trajectory(p0, r, 1e-3, 3e-4, seed=11,
                                     stream_id=k).state_at(t_check)] += 1
        expected = propagate(p0, r, 1e-3, t_check).as_array()
        se = np.sqrt(expected * (1 - expected) / n)
        assert np.all(np.abs(counts / n - expected) <= 3 * se + 1e-12)


class TestDarkRelaxation:
    def test_endpoints(self):
        r = ChargeRateModel(SAT, r_ion_dark=500.0, r_rec_dark=1939.0)
        assert dark_rho_relaxation(0.463, r, 0.0) == pytest.approx(0.463)
        assert dark_rho_relaxation(0.463, r, 10.0) == pytest.approx(
            r.rho_steady_dark, abs=1e-9)

    def test_time_constant(self):
        # decays by 1/e of the gap after one relaxation time
        r = ChargeRateModel(SAT, r_ion_dark=1000.0, r_rec_dark=1439.0)
        tc = r.charge_relaxation_time
        rho0, rho_ss = 0.463, r.rho_steady_dark
        got = dark_rho_relaxation(rho0, r, tc)
        assert got == pytest.approx(rho_ss + (rho0 - rho_ss) / np.e, rel=1e-9)

    def test_no_dark_rates_constant(self):
        r = ChargeRateModel(SAT)
        t = np.linspace(0, 1e-3, 5)
        out = dark_rho_relaxation(0.42, r, t)
        # rho_ss = 1 and tc = inf: exp(-t/inf) = 1 so the curve is flat at rho0
        assert np.allclose(out, 0.42)
