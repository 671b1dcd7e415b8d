"""Domain types for the probe / dark-defect system and geometric couplings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import DIPOLAR_PREFACTOR_HZ_NM3
from .errors import ValidationError

Z_AXIS = (0.0, 0.0, 1.0)

_MIN_DISTANCE_NM = 0.1


def dipolar_coupling(r_vec, quant_axis=Z_AXIS) -> float:
    """Secular dipolar coupling (Hz, cycles) for a defect at `r_vec` (nm).

    Sign is physical: angles inside the magic-angle cone give negative
    values.  Even under r_vec -> -r_vec.
    """
    r_vec = np.asarray(r_vec, dtype=float)
    axis = np.asarray(quant_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    r = np.linalg.norm(r_vec)
    if r <= _MIN_DISTANCE_NM:
        raise ValidationError(
            f"defect at |r| = {r:.4g} nm is unphysically close (min 0.1 nm)"
        )
    cos_theta = float(np.dot(r_vec, axis)) / r
    return DIPOLAR_PREFACTOR_HZ_NM3 * (1.0 - 3.0 * cos_theta**2) / r**3


def dipolar_coupling_batch(positions: np.ndarray, quant_axis=Z_AXIS) -> np.ndarray:
    """Vectorized `dipolar_coupling` for an (N, 3) array of positions (nm)."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    axis = np.asarray(quant_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    r = np.linalg.norm(positions, axis=1)
    if np.any(r <= _MIN_DISTANCE_NM):
        raise ValidationError("a defect position is unphysically close (min 0.1 nm)")
    cos_theta = positions @ axis / r
    return DIPOLAR_PREFACTOR_HZ_NM3 * (1.0 - 3.0 * cos_theta**2) / r**3


@dataclass(frozen=True)
class NsDefect:
    """One dark defect: charge population, couplings, optional geometry."""

    rho: float                      # neutral charge population fraction
    a_dipolar: float                # dipolar coupling to probe, Hz
    d_stark: float = 0.0            # Stark shift on probe when ionized, Hz
    position: tuple | None = None   # nm, relative to probe

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValidationError(f"rho = {self.rho} outside [0, 1]")
        if not np.isfinite(self.a_dipolar):
            raise ValidationError("a_dipolar must be finite")
        if not np.isfinite(self.d_stark):
            raise ValidationError("d_stark must be finite")
        if self.position is not None:
            pos = tuple(float(x) for x in self.position)
            object.__setattr__(self, "position", pos)
            implied = dipolar_coupling(pos)
            scale = max(abs(implied), abs(self.a_dipolar))
            if scale > 0 and abs(implied - self.a_dipolar) > 1e-9 * scale:
                raise ValidationError(
                    f"a_dipolar = {self.a_dipolar:.6g} Hz inconsistent with "
                    f"position-implied coupling {implied:.6g} Hz"
                )


@dataclass(frozen=True)
class ProbeSpin:
    """Probe-spin decoherence and environment parameters."""

    gamma_bg: float = 0.0           # background decoherence rate, 1/s
    stretch_n: float = 1.0          # stretch exponent
    t1_dark_p1: float = 1.9e-3      # dark-spin lifetime, s
    quant_axis: tuple = Z_AXIS

    def __post_init__(self):
        if self.gamma_bg < 0:
            raise ValidationError("gamma_bg must be >= 0")
        if not 0.5 <= self.stretch_n <= 3.0:
            raise ValidationError("stretch_n must be in [0.5, 3]")
        if self.t1_dark_p1 <= 0:
            raise ValidationError("t1_dark_p1 must be > 0")
        axis = np.asarray(self.quant_axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValidationError("quant_axis must be a unit vector")
        object.__setattr__(self, "quant_axis", tuple(float(x) for x in axis))


@dataclass(frozen=True)
class MeasurementSettings:
    """Experiment-level configuration shared by forward models."""

    eta: float = 6.0 / 8.0
    b_field_gauss: float = 412.0
    p1_transition_freqs: tuple = (84.8e6, 130.0e6, 160.0e6, 205.2e6)
    laser_wavelength_nm: float = 532.0
    numerical_aperture: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValidationError("eta must be in [0, 1]")
        freqs = tuple(float(f) for f in self.p1_transition_freqs)
        if len(freqs) != 4 or len(set(freqs)) != 4:
            raise ValidationError("need four distinct dark-spin transition frequencies")
        object.__setattr__(self, "p1_transition_freqs", freqs)
        if self.laser_wavelength_nm <= 0:
            raise ValidationError("laser wavelength must be > 0")
        if not 0.0 < self.numerical_aperture <= 1.0:
            raise ValidationError("numerical aperture must be in (0, 1]")


_POP_EPS = 1e-30


@dataclass(frozen=True)
class ChargeSpinPopulation:
    """Occupation probabilities over {neutral-up, neutral-down, ionized}."""

    p_up: float
    p_down: float
    p_plus: float

    def __post_init__(self):
        vals = (self.p_up, self.p_down, self.p_plus)
        if any(v < -1e-12 for v in vals):
            raise ValidationError("populations must be non-negative")
        if abs(sum(vals) - 1.0) > 1e-12:
            raise ValidationError(f"populations sum to {sum(vals)!r}, expected 1")

    @property
    def rho(self) -> float:
        return self.p_up + self.p_down

    @property
    def polarization(self) -> float:
        """Net spin polarization of the neutral fraction; 0 if fully ionized."""
        if self.rho <= _POP_EPS:
            return 0.0
        return (self.p_up - self.p_down) / self.rho

    def as_array(self) -> np.ndarray:
        return np.array([self.p_up, self.p_down, self.p_plus], dtype=float)

    @staticmethod
    def from_array(p) -> "ChargeSpinPopulation":
        p = np.asarray(p, dtype=float)
        # Clip tiny negative round-off before the invariant check.
        p = np.where(np.abs(p) < 1e-13, np.maximum(p, 0.0), p)
        return ChargeSpinPopulation(float(p[0]), float(p[1]), float(p[2]))

    @staticmethod
    def from_rho_polarization(rho: float, p: float = 0.0) -> "ChargeSpinPopulation":
        return ChargeSpinPopulation(
            rho * (1.0 + p) / 2.0, rho * (1.0 - p) / 2.0, 1.0 - rho
        )


def geometric_mean_rho(defects) -> float:
    """Geometric mean of neutral populations, the charge-contrast observable.

    Accepts NsDefect instances or bare floats.  Any rho exactly 0 gives 0.
    """
    rhos = [d.rho if isinstance(d, NsDefect) else float(d) for d in defects]
    if not rhos:
        raise ValidationError("geometric_mean_rho of an empty list")
    if any(r < 0 or r > 1 for r in rhos):
        raise ValidationError("rho values must lie in [0, 1]")
    if any(r == 0.0 for r in rhos):
        return 0.0
    return float(np.exp(np.mean(np.log(rhos))))


def order_by_coupling(defects) -> list:
    """Defects sorted by descending |a_dipolar| (index 1 = strongest)."""
    return sorted(defects, key=lambda d: -abs(d.a_dipolar))
