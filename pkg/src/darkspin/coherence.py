"""Closed-form probe-signal models.

All phases follow the package convention: a coupling `a` in plain Hz
enters as cos(2*pi * a * tau / 2), i.e. half the bare precession phase
accumulated over the echo.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .defects import NsDefect, ProbeSpin
from .errors import CapacityError, ValidationError

MAX_ODMR_DEFECTS = 12


@dataclass(frozen=True)
class CoherenceCurve:
    """Complex probe signal S(tau) on a strictly increasing delay grid."""

    tau: np.ndarray
    signal: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        sig = np.asarray(self.signal, dtype=complex)
        if tau.ndim != 1 or tau.size == 0:
            raise ValidationError("tau must be a non-empty 1-d array")
        if sig.shape != tau.shape:
            raise ValidationError("signal and tau must have the same length")
        if np.any(np.diff(tau) <= 0):
            raise ValidationError("tau must be strictly increasing")
        if np.any(np.abs(sig) > 1.0 + 1e-9):
            raise ValidationError("|signal| exceeds 1")
        if tau[0] == 0.0 and abs(sig[0] - 1.0) > 1e-9:
            raise ValidationError("signal(tau=0) must be 1")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "signal", sig)


@dataclass(frozen=True)
class OdmrSpectrum:
    """Stick spectrum plus a rendered line-shape profile on a grid."""

    freq: np.ndarray            # Hz, evaluation grid (offsets from bare line)
    amplitude: np.ndarray       # dimensionless dip contrast on `freq`
    linewidth: float            # FWHM, Hz
    line_shape: str             # "lorentzian" | "gaussian"
    line_positions: np.ndarray  # Hz, one entry per stick
    line_weights: np.ndarray    # sums to 1

    def __post_init__(self):
        if self.linewidth <= 0:
            raise ValidationError("linewidth must be > 0")
        if np.any(np.asarray(self.amplitude) < -1e-12):
            raise ValidationError("amplitudes must be >= 0")
        if abs(float(np.sum(self.line_weights)) - 1.0) > 1e-9:
            raise ValidationError("line weights must sum to 1")


def background_decay(tau, gamma: float, n: float):
    """Stretched-exponential envelope exp(-(gamma*tau)^n)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValidationError("tau must be >= 0")
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    if not 0.5 <= n <= 3.0:
        raise ValidationError("n must be in [0.5, 3]")
    out = np.exp(-((gamma * tau) ** n))
    return out if out.ndim else float(out)


def single_spin_coherence(tau, probe: ProbeSpin, a: float, p: float):
    """Echo signal from one strongly coupled, polarized dark spin.

    S = exp(-(Gamma tau)^n) * (cos(pi a tau) + i p sin(pi a tau)).
    """
    if abs(p) > 1.0:
        raise ValidationError("|polarization| must be <= 1")
    tau = np.asarray(tau, dtype=float)
    env = background_decay(tau, probe.gamma_bg, probe.stretch_n)
    phase = 2.0 * np.pi * a * tau / 2.0
    out = env * (np.cos(phase) + 1j * p * np.sin(phase))
    return out if out.ndim else complex(out)


def deer_signal(tau, probe: ProbeSpin, eta: float, defects) -> np.ndarray:
    """Charge-weighted multi-defect echo signal.

    `defects` is a sequence of (NsDefect, polarization) pairs or bare
    NsDefect (polarization 0).  Each defect contributes the factor
    (1 - eta rho) + eta rho (cos(pi a tau) + i p sin(pi a tau)); the real
    part with all p = 0 is the standard charge-weighted echo model.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidationError("eta must be in [0, 1]")
    tau = np.asarray(tau, dtype=float)
    out = np.asarray(
        background_decay(tau, probe.gamma_bg, probe.stretch_n), dtype=complex
    )
    for entry in defects:
        defect, p = entry if isinstance(entry, tuple) else (entry, 0.0)
        if abs(p) > 1.0:
            raise ValidationError("|polarization| must be <= 1")
        w = eta * defect.rho
        phase = 2.0 * np.pi * defect.a_dipolar * tau / 2.0
        out = out * ((1.0 - w) + w * (np.cos(phase) + 1j * p * np.sin(phase)))
    return out if out.ndim else complex(out)


def deer_curve(tau, probe, eta, defects) -> CoherenceCurve:
    return CoherenceCurve(np.asarray(tau, dtype=float),
                          deer_signal(tau, probe, eta, defects))


def charge_configuration_weights(defects) -> dict:
    """Weight of every neutral/ionized combination; keys are 0/1 tuples."""
    weights = {}
    for config in product((1, 0), repeat=len(defects)):
        w = 1.0
        for d, neutral in zip(defects, config):
            w *= d.rho if neutral else (1.0 - d.rho)
        weights[config] = w
    return weights


def odmr_spectrum(settings, probe, defects, line_shape="lorentzian",
                  linewidth=50e3, freq_grid=None) -> OdmrSpectrum:
    """Probe resonance structure over all charge-state combinations.

    Each neutral defect splits every line into +-a/2 components; each
    ionized defect Stark-shifts the whole configuration by d.  Frequencies
    are offsets from the unperturbed probe line.
    """
    defects = list(defects)
    if len(defects) > MAX_ODMR_DEFECTS:
        raise CapacityError(
            f"{len(defects)} defects exceeds the 2^N enumeration bound "
            f"({MAX_ODMR_DEFECTS})"
        )
    shape = line_shape.lower()
    if shape not in ("lorentzian", "gaussian"):
        raise ValidationError(f"unknown line shape {line_shape!r}")

    positions, weights = [], []
    for config, w_config in charge_configuration_weights(defects).items():
        if w_config == 0.0:
            continue
        neutral = [d for d, is_n in zip(defects, config) if is_n]
        stark = sum(d.d_stark for d, is_n in zip(defects, config) if not is_n)
        n_lines = 2 ** len(neutral)
        for signs in product((+0.5, -0.5), repeat=len(neutral)):
            f = stark + sum(s * d.a_dipolar for s, d in zip(signs, neutral))
            positions.append(f)
            weights.append(w_config / n_lines)
    positions = np.asarray(positions)
    weights = np.asarray(weights)

    if freq_grid is None:
        span = max(float(np.max(np.abs(positions))), linewidth) + 5 * linewidth
        freq_grid = np.linspace(-span, span, 2001)
    freq_grid = np.asarray(freq_grid, dtype=float)

    delta = freq_grid[None, :] - positions[:, None]
    hwhm = linewidth / 2.0
    if shape == "lorentzian":
        profiles = hwhm**2 / (delta**2 + hwhm**2)
    else:
        sigma = linewidth / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        profiles = np.exp(-(delta**2) / (2.0 * sigma**2))
    amplitude = weights @ profiles

    return OdmrSpectrum(freq=freq_grid, amplitude=amplitude,
                        linewidth=float(linewidth), line_shape=shape,
                        line_positions=positions, line_weights=weights)


def find_probe_point(curve: CoherenceCurve) -> float:
    """Delay with maximal out-of-phase signal |Im S|; ties -> smaller tau."""
    im = np.abs(np.imag(curve.signal))
    if np.all(im < 1e-15):
        raise ValidationError("no out-of-phase signal")
    return float(curve.tau[int(np.argmax(im))])
