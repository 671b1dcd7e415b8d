"""darkspin: central-spin readout of dark spin-charge defects.

Forward models for coherence, spin dynamics, and photo-ionization
kinetics of optically dark defects near an optically active probe spin,
plus the inverse problems (configuration reconstruction, saturation and
relaxation fits, noise decomposition) and a reproducible CLI.
"""

from .charge import (ChargeRateModel, PhotonFluxModel, SaturationModel,
                     cross_section, photon_flux, polarization_decay_rate,
                     propagate, sample_trajectory, saturation_rate)
from .coherence import (CoherenceCurve, OdmrSpectrum, background_decay,
                        deer_signal, find_probe_point, odmr_spectrum,
                        single_spin_coherence)
from .defects import (ChargeSpinPopulation, MeasurementSettings, NsDefect,
                      ProbeSpin, dipolar_coupling, geometric_mean_rho,
                      order_by_coupling)
from .inference import (CandidateConfiguration, DeerDataset, FitResult,
                        NoiseRates, SlabGeometry, extract_noise, fit_deer,
                        fit_mono_exponential, fit_odmr, fit_saturation,
                        noise_forward, reconstruct, sample_configurations,
                        score_configuration)
from .spindynamics import (DeerReadout, Delay, Laser, LaserResponse,
                           Microwave, PulseSequence, SpinRegister,
                           build_hamiltonian, evolve, laser_repolarize,
                           make_pump_probe_sequence, make_register,
                           run_pump_probe, simulate_deer)

__version__ = "0.1.0"

__all__ = [
    "CandidateConfiguration", "ChargeRateModel", "ChargeSpinPopulation",
    "CoherenceCurve", "DeerDataset", "DeerReadout", "Delay", "FitResult",
    "Laser", "LaserResponse", "MeasurementSettings", "Microwave",
    "NoiseRates", "NsDefect", "OdmrSpectrum", "PhotonFluxModel",
    "ProbeSpin", "PulseSequence", "SaturationModel", "SlabGeometry",
    "SpinRegister", "background_decay", "build_hamiltonian",
    "cross_section", "deer_signal", "dipolar_coupling", "evolve",
    "extract_noise", "find_probe_point", "fit_deer",
    "fit_mono_exponential", "fit_odmr", "fit_saturation",
    "geometric_mean_rho", "laser_repolarize", "make_pump_probe_sequence",
    "make_register", "noise_forward", "odmr_spectrum", "order_by_coupling",
    "photon_flux", "polarization_decay_rate", "propagate", "reconstruct",
    "run_pump_probe", "sample_configurations", "sample_trajectory",
    "saturation_rate", "score_configuration", "simulate_deer",
    "single_spin_coherence",
]
