"""Photo-ionization kinetics of a dark defect.

A single defect moves among {neutral-up, neutral-down, ionized} under a
linear master equation: illumination ionizes the neutral state at a
power-dependent rate, recapture refills the neutral state with no spin
memory, and phonons flip the spin at 1/(2 T1) each way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .constants import C_LIGHT, H_PLANCK
from .defects import ChargeSpinPopulation
from .errors import FitError, ValidationError
from .rng import stream


@dataclass(frozen=True)
class SaturationModel:
    """Empirical power dependence of the ionization rate."""

    gamma_sat: float        # 1/s, rate at saturation
    p_sat: float            # W, knee power

    def __post_init__(self):
        if self.gamma_sat <= 0 or self.p_sat <= 0:
            raise ValidationError("gamma_sat and p_sat must be > 0")

    @property
    def low_power_slope(self) -> float:
        """d(rate)/dP at P -> 0, 1/(s W)."""
        return self.gamma_sat / self.p_sat


def saturation_rate(power: float, model: SaturationModel):
    """Ionization rate Gamma_sat * P / (P + P_sat)."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValidationError("power must be >= 0")
    out = model.gamma_sat * power / (power + model.p_sat)
    return out if out.ndim else float(out)


def _default_spot_area(wavelength: float, numerical_aperture: float) -> float:
    return float(np.pi * (0.61 * wavelength / numerical_aperture) ** 2)


@dataclass(frozen=True)
class PhotonFluxModel:
    """Converts optical power to photon flux through a focal spot."""

    wavelength: float = 532e-9          # m
    numerical_aperture: float = 0.9
    spot_area: float | None = None      # m^2; default diffraction-limited disk

    def __post_init__(self):
        if self.spot_area is None:
            object.__setattr__(
                self, "spot_area",
                _default_spot_area(self.wavelength, self.numerical_aperture),
            )
        if self.spot_area <= 0:
            raise ValidationError("spot_area must be > 0")

    @property
    def flux_per_watt(self) -> float:
        """Photon flux per unit power, photons m^-2 s^-1 W^-1."""
        return self.wavelength / (H_PLANCK * C_LIGHT * self.spot_area)


def photon_flux(power: float, model: PhotonFluxModel):
    """Photon flux (photons m^-2 s^-1) at optical power `power` (W)."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValidationError("power must be >= 0")
    out = power * model.flux_per_watt
    return out if out.ndim else float(out)


def cross_section(slope: float, flux_model: PhotonFluxModel) -> float:
    """Ionization cross-section (m^2) from the low-power rate slope.

    `slope` is d(rate)/dP in 1/(s W); sigma = rate / flux in the linear
    regime.  The dominant systematic is the assumed spot area.
    """
    if slope <= 0:
        raise FitError("non-positive low-power slope; saturation fit unusable")
    return slope / flux_model.flux_per_watt


@dataclass(frozen=True)
class ChargeRateModel:
    """All kinetic rates for one defect, bundled."""

    saturation: SaturationModel
    r_rec: float = 0.0            # recapture ionized -> neutral, 1/s
    t1_dark: float = 1.9e-3       # dark spin lifetime, s
    r_ion_dark: float = 0.0       # in-the-dark equilibration, 1/s
    r_rec_dark: float = 0.0

    def __post_init__(self):
        if self.r_rec < 0 or self.r_ion_dark < 0 or self.r_rec_dark < 0:
            raise ValidationError("rates must be >= 0")
        if self.t1_dark <= 0:
            raise ValidationError("t1_dark must be > 0")

    @property
    def r_flip(self) -> float:
        """Spin flip rate each direction, 1/(2 T1)."""
        return 1.0 / (2.0 * self.t1_dark)

    def r_ion(self, power: float) -> float:
        return saturation_rate(power, self.saturation)

    @property
    def rho_steady_dark(self) -> float:
        """Neutral population the defect relaxes to with the laser off."""
        total = self.r_ion_dark + self.r_rec_dark
        if total == 0.0:
            return 1.0
        return self.r_rec_dark / total

    @property
    def charge_relaxation_time(self) -> float:
        """1 / (r_ion_dark + r_rec_dark); inf when both are 0."""
        total = self.r_ion_dark + self.r_rec_dark
        return np.inf if total == 0.0 else 1.0 / total


def generator_matrix(rates: ChargeRateModel, power: float) -> np.ndarray:
    """3x3 master-equation generator over (up, down, ionized), columns sum 0."""
    r_ion = rates.r_ion(power)
    r_flip = rates.r_flip
    r_rec = rates.r_rec
    return np.array([
        [-(r_ion + r_flip), r_flip,             r_rec / 2.0],
        [r_flip,            -(r_ion + r_flip),  r_rec / 2.0],
        [r_ion,             r_ion,              -r_rec],
    ])


def propagate(pop: ChargeSpinPopulation, rates: ChargeRateModel,
              power: float, t: float) -> ChargeSpinPopulation:
    """Exact master-equation propagation over time t (s) at fixed power."""
    if t < 0:
        raise ValidationError("t must be >= 0")
    g = generator_matrix(rates, power)
    p = expm(g * t) @ pop.as_array()
    return ChargeSpinPopulation.from_array(p)


def steady_state(rates: ChargeRateModel, power: float) -> ChargeSpinPopulation:
    """Illuminated steady state: p_plus = r_ion / (r_ion + r_rec), spin mixed."""
    r_ion = rates.r_ion(power)
    if r_ion == 0.0 and rates.r_rec == 0.0:
        raise ValidationError("steady state undefined with no charge rates")
    p_plus = r_ion / (r_ion + rates.r_rec)
    return ChargeSpinPopulation((1 - p_plus) / 2, (1 - p_plus) / 2, p_plus)


@dataclass(frozen=True)
class JumpTrajectory:
    """Piecewise-constant state path; state index in {0: up, 1: down, 2: +}."""

    times: np.ndarray     # jump times, s (first entry 0)
    states: np.ndarray    # state after each time

    def state_at(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t, side="right") - 1)
        return int(self.states[idx])


def sample_trajectory(pop0: ChargeSpinPopulation, rates: ChargeRateModel,
                      power: float, duration: float, seed: int,
                      stream_id: int = 0) -> JumpTrajectory:
    """One stochastic unraveling of the master equation (Gillespie).

    Reproducible: the path is a pure function of (seed, stream_id).
    """
    if duration < 0:
        raise ValidationError("duration must be >= 0")
    rng = stream(seed, stream_id)
    g = generator_matrix(rates, power)

    state = int(rng.choice(3, p=pop0.as_array() / pop0.as_array().sum()))
    times, states = [0.0], [state]
    t = 0.0
    while True:
        exit_rate = -g[state, state]
        if exit_rate <= 0.0:
            break
        t += rng.exponential(1.0 / exit_rate)
        if t >= duration:
            break
        probs = g[:, state].copy()
        probs[state] = 0.0
        probs /= probs.sum()
        state = int(rng.choice(3, p=probs))
        times.append(t)
        states.append(state)
    return JumpTrajectory(np.asarray(times), np.asarray(states, dtype=int))


def polarization_decay_rate(power: float, rates: ChargeRateModel):
    """Observed mono-exponential spin-decay rate: r_ion(P) + 1/T1."""
    return saturation_rate(power, rates.saturation) + 1.0 / rates.t1_dark


def dark_rho_relaxation(rho0: float, rates: ChargeRateModel, t) -> np.ndarray:
    """Average neutral population relaxing in the dark toward rho_ss."""
    t = np.asarray(t, dtype=float)
    rho_ss = rates.rho_steady_dark
    tc = rates.charge_relaxation_time
    out = rho_ss + (rho0 - rho_ss) * np.exp(-t / tc)
    return out if out.ndim else float(out)
