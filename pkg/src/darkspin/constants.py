"""Physical constants (CODATA 2018) and derived unit conversions.

Frequency convention used everywhere in this package: couplings, shifts
and rates are plain-cycle Hz (not rad/s).  Trigonometric phases are
formed as 2*pi*f*t at the point of use, never earlier.
"""

import numpy as np

MU_0 = 1.25663706212e-6          # vacuum permeability, N/A^2
H_PLANCK = 6.62607015e-34        # Planck constant, J s
HBAR = 1.054571817e-34           # reduced Planck constant, J s
C_LIGHT = 299792458.0            # speed of light, m/s

# Free-electron gyromagnetic ratio, Hz/T (gamma_e / 2pi).  Used for both
# the probe and the dark spin.
GAMMA_E_HZ_PER_T = 2.8024951386e10

# Secular electron-electron dipolar prefactor in Hz nm^3:
# (mu0 / 4pi) * gamma_e^2 * h, with gamma_e in Hz/T and r in nm.
DIPOLAR_PREFACTOR_HZ_NM3 = (
    MU_0 / (4.0 * np.pi) * GAMMA_E_HZ_PER_T**2 * H_PLANCK * 1e27
)

# Dark-spin population addressed by one or two drive tones.
ETA_ONE_TONE = 3.0 / 8.0
ETA_TWO_TONE = 6.0 / 8.0

# Carbon atom number density of diamond, nm^-3 (for ppm -> nm^-3).
DIAMOND_ATOM_DENSITY_NM3 = 176.2
