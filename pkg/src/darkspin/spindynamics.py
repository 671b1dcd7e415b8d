"""Dense-matrix simulator for the probe plus up to three dark spins.

The probe is restricted to a two-level subspace.  Hamiltonians are stored
in plain Hz; time evolution multiplies by 2*pi.  This module is the
brute-force cross-check for every closed form in `coherence`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

import numpy as np
from scipy.linalg import expm

from .charge import SaturationModel, saturation_rate
from .coherence import deer_signal
from .defects import NsDefect, ProbeSpin
from .errors import SequenceError, ValidationError

# Single-qubit spin-1/2 operators.
_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
_ID = np.eye(2, dtype=complex)
_SP = np.array([[0, 1], [0, 0]], dtype=complex)   # raising, |0><1|
_SM = _SP.T.conj()

MAX_DARK_SPINS = 3


def _embed(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """op acting on `site` (0 = probe) in an n_sites qubit register."""
    out = np.array([[1.0 + 0j]])
    for k in range(n_sites):
        out = np.kron(out, op if k == site else _ID)
    return out


# ---------------------------------------------------------------------------
# Pulse segments

@dataclass(frozen=True)
class Laser:
    power: float        # W
    duration: float     # s

    def __post_init__(self):
        if self.power < 0 or self.duration < 0:
            raise ValidationError("laser power and duration must be >= 0")


@dataclass(frozen=True)
class Microwave:
    target: int | str   # "probe" or dark-spin index (0-based)
    rabi: float         # Hz
    duration: float     # s
    detuning: float = 0.0
    phase: float = 0.0  # radians; 0 = +X, pi = -X

    def __post_init__(self):
        if self.rabi < 0 or self.duration < 0:
            raise ValidationError("rabi and duration must be >= 0")
        if self.target != "probe" and not isinstance(self.target, int):
            raise ValidationError(f"bad microwave target {self.target!r}")


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValidationError("duration must be >= 0")


@dataclass(frozen=True)
class DeerReadout:
    """Composite out-of-phase echo readout on the probe.

    Stands for pi/2 -- tau/2 -- (pi on probe at 2*rabi, pi on dark tones)
    -- tau/2 -- pi/2-with-90deg-phase, evaluated with the closed-form
    signal model at probe delay `tau`.
    """

    tau: float          # s, total echo delay
    rabi: float         # Hz, dark-tone Rabi rate; probe runs at 2*rabi

    def __post_init__(self):
        if self.tau < 0 or self.rabi < 0:
            raise ValidationError("tau and rabi must be >= 0")


# One sequence entry is a segment or a tuple of simultaneous Microwaves.
@dataclass(frozen=True)
class PulseSequence:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))


# ---------------------------------------------------------------------------
# Register

@dataclass
class SpinRegister:
    """Probe + dark spins with a shared density operator (probe is qubit 0)."""

    couplings: np.ndarray      # Hz, one per dark spin
    state: np.ndarray          # density matrix, dim 2^(n_dark+1)

    def __post_init__(self):
        self.couplings = np.atleast_1d(np.asarray(self.couplings, dtype=float))
        if not 1 <= self.n_dark <= MAX_DARK_SPINS:
            raise ValidationError(f"n_dark must be in [1, {MAX_DARK_SPINS}]")
        self.state = np.asarray(self.state, dtype=complex)
        dim = 2 ** (self.n_dark + 1)
        if self.state.shape != (dim, dim):
            raise ValidationError(f"state must be {dim}x{dim}")
        self.check()

    @property
    def n_dark(self) -> int:
        return len(self.couplings)

    @property
    def n_sites(self) -> int:
        return self.n_dark + 1

    def check(self, tol: float = 1e-9):
        if np.max(np.abs(self.state - self.state.conj().T)) > tol:
            raise ValidationError("state is not Hermitian")
        if abs(np.trace(self.state).real - 1.0) > tol:
            raise ValidationError("state trace is not 1")
        if np.linalg.eigvalsh(self.state).min() < -tol:
            raise ValidationError("state is not positive semidefinite")

    def expect(self, op: np.ndarray) -> float:
        return float(np.trace(op @ self.state).real)

    def probe_polarization(self) -> float:
        return 2.0 * self.expect(_embed(_SZ, 0, self.n_sites))

    def dark_polarization(self, i: int) -> float:
        return 2.0 * self.expect(_embed(_SZ, 1 + i, self.n_sites))


def qubit_state(polarization: float) -> np.ndarray:
    """Diagonal single-qubit density matrix with 2<Sz> = polarization."""
    if abs(polarization) > 1.0:
        raise ValidationError("|polarization| must be <= 1")
    return np.diag([(1 + polarization) / 2, (1 - polarization) / 2]).astype(complex)


def make_register(couplings, probe_polarization: float = 1.0,
                  dark_polarizations=None) -> SpinRegister:
    couplings = np.atleast_1d(np.asarray(couplings, dtype=float))
    if dark_polarizations is None:
        dark_polarizations = np.zeros(len(couplings))
    state = qubit_state(probe_polarization)
    for p in dark_polarizations:
        state = np.kron(state, qubit_state(p))
    return SpinRegister(couplings=couplings, state=state)


# ---------------------------------------------------------------------------
# Hamiltonians

def build_hamiltonian(segment, register: SpinRegister) -> np.ndarray:
    """Rotating-frame Hamiltonian (Hz) for one segment.

    Simultaneous drives are expressed as a tuple of Microwave segments
    with equal durations.
    """
    n = register.n_sites
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i, a in enumerate(register.couplings):
        h += a * _embed(_SZ, 0, n) @ _embed(_SZ, 1 + i, n)

    drives = ()
    if isinstance(segment, Microwave):
        drives = (segment,)
    elif isinstance(segment, tuple):
        drives = segment
    elif not isinstance(segment, (Delay, Laser)):
        raise ValidationError(f"unsupported segment {segment!r}")

    for mw in drives:
        if mw.target == "probe":
            site = 0
        else:
            if not 0 <= mw.target < register.n_dark:
                raise ValidationError(f"no dark spin with index {mw.target}")
            site = 1 + mw.target
        sx = _embed(_SX, site, n)
        sy = _embed(_SY, site, n)
        sz = _embed(_SZ, site, n)
        h += mw.rabi * (np.cos(mw.phase) * sx + np.sin(mw.phase) * sy)
        h -= mw.detuning * sz
    if np.max(np.abs(h - h.conj().T)) > 1e-12:
        raise ValidationError("Hamiltonian assembly lost Hermiticity")
    return h


def exchange_hamiltonian(couplings, detunings=None, n_sites=None) -> np.ndarray:
    """Dressed-frame flip-flop Hamiltonian (Hz) active during a spin lock.

    Matched drives turn the static SzPz coupling into (a/4)(S+P- + S-P+)
    per dark spin; a Rabi mismatch appears as a dressed detuning on that
    spin's Pz.
    """
    couplings = np.atleast_1d(np.asarray(couplings, dtype=float))
    if detunings is None:
        detunings = np.zeros_like(couplings)
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    n = n_sites if n_sites is not None else len(couplings) + 1
    h = np.zeros((2**n, 2**n), dtype=complex)
    sp0 = _embed(_SP, 0, n)
    sm0 = _embed(_SM, 0, n)
    for i, (a, delta) in enumerate(zip(couplings, detunings)):
        pp = _embed(_SP, 1 + i, n)
        pm = _embed(_SM, 1 + i, n)
        h += (a / 4.0) * (sp0 @ pm + sm0 @ pp)
        h += delta * _embed(_SZ, 1 + i, n)
    return h


# ---------------------------------------------------------------------------
# Evolution

def _lindblad_superoperator(h: np.ndarray, jumps) -> np.ndarray:
    dim = h.shape[0]
    eye = np.eye(dim)
    lv = -1j * 2.0 * np.pi * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in jumps:
        cdc = c.conj().T @ c
        lv += np.kron(c, c.conj())
        lv -= 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return lv


# Probe repolarization endpoints: (power W, 1/e time s); interpolation is
# linear in log-log between them.
REPOL_CALIBRATION = ((36e-6, 2.8e-6), (3300e-6, 0.24e-6))


def repolarization_time(power: float, allow_extrapolation: bool = False) -> float:
    """Probe optical repolarization 1/e time at laser power `power` (W)."""
    (p0, t0), (p1, t1) = REPOL_CALIBRATION
    if not p0 <= power <= p1 and not allow_extrapolation:
        raise ValidationError(
            f"power {power} W outside calibrated range [{p0}, {p1}] W; "
            "pass allow_extrapolation=True to override"
        )
    slope = np.log(t1 / t0) / np.log(p1 / p0)
    return float(t0 * (power / p0) ** slope)


@dataclass(frozen=True)
class LaserResponse:
    """What a laser segment does to the register, beyond the Hamiltonian."""

    dark_saturation: SaturationModel
    allow_extrapolation: bool = False

    def probe_rate(self, power: float) -> float:
        return 1.0 / repolarization_time(power, self.allow_extrapolation)

    def dark_rate(self, power: float) -> float:
        return saturation_rate(power, self.dark_saturation)


def _segment_duration(segment) -> float:
    if isinstance(segment, tuple):
        durations = {mw.duration for mw in segment}
        if len(durations) != 1:
            raise ValidationError("simultaneous drives must share a duration")
        return durations.pop()
    return segment.duration


def evolve(register: SpinRegister, segment, dt_max: float | None = None,
            laser: LaserResponse | None = None) -> SpinRegister:
    """Propagate through one segment; returns a new register.

    The generator is constant within a segment, so the result does not
    depend on dt_max (steps only bound the matrix-exponential argument).
    """
    duration = _segment_duration(segment)
    if duration == 0.0:
        return replace(register, state=register.state.copy())
    h = build_hamiltonian(segment, register)
    n = register.n_sites

    jumps = []
    if isinstance(segment, Laser) and laser is not None:
        gp = laser.probe_rate(segment.power)
        jumps.append(np.sqrt(gp) * _embed(_SP, 0, n))
        gd = laser.dark_rate(segment.power)
        for i in range(register.n_dark):
            jumps.append(np.sqrt(gd / 2.0) * _embed(_SP, 1 + i, n))
            jumps.append(np.sqrt(gd / 2.0) * _embed(_SM, 1 + i, n))

    if dt_max is None or dt_max <= 0:
        dt_max = duration
    n_steps = max(1, int(np.ceil(duration / dt_max)))
    dt = duration / n_steps

    state = register.state
    if jumps:
        prop = expm(_lindblad_superoperator(h, jumps) * dt)
        vec = state.reshape(-1)
        for _ in range(n_steps):
            vec = prop @ vec
        state = vec.reshape(state.shape)
    else:
        u = expm(-1j * 2.0 * np.pi * h * dt)
        for _ in range(n_steps):
            state = u @ state @ u.conj().T
    state = 0.5 * (state + state.conj().T)
    out = replace(register, state=state)
    out.check()
    return out


def evolve_exchange(register: SpinRegister, h_exchange: np.ndarray,
                    duration: float) -> SpinRegister:
    """Unitary evolution under a pre-built dressed-frame Hamiltonian (Hz)."""
    u = expm(-1j * 2.0 * np.pi * h_exchange * duration)
    state = u @ register.state @ u.conj().T
    out = replace(register, state=0.5 * (state + state.conj().T))
    out.check()
    return out


def ideal_rotation(register: SpinRegister, targets, angle: float,
                   phase: float = 0.0) -> SpinRegister:
    """Instantaneous rotation about the in-plane axis at `phase` radians.

    `targets` is an iterable of "probe" / dark indices; all rotate together.
    """
    n = register.n_sites
    u = np.eye(2**n, dtype=complex)
    for target in targets:
        site = 0 if target == "probe" else 1 + int(target)
        axis = np.cos(phase) * _embed(_SX, site, n) + np.sin(phase) * _embed(_SY, site, n)
        u = expm(-1j * angle * axis) @ u
    state = u @ register.state @ u.conj().T
    return replace(register, state=state)


def laser_repolarize(register: SpinRegister, power: float, duration: float,
                     laser: LaserResponse) -> SpinRegister:
    """Optical reset: probe relaxes to |0>, dark spins depolarize."""
    return evolve(register, Laser(power=power, duration=duration), laser=laser)


# ---------------------------------------------------------------------------
# DEER oracle

def simulate_deer(tau_grid, probe: ProbeSpin, eta: float, defects) -> np.ndarray:
    """Echo signal from full state-vector simulation; oracle for the
    closed-form `deer_signal`.

    `defects` is a list of (NsDefect, polarization).  Charge state and
    drive addressing are classical mixtures: each defect is absent
    (weight 1-rho), a spectator spin (rho*(1-eta)), or an addressed spin
    (rho*eta).  Background decoherence multiplies at the end.
    """
    defects = [d if isinstance(d, tuple) else (d, 0.0) for d in defects]
    if len(defects) > MAX_DARK_SPINS:
        raise ValidationError(f"at most {MAX_DARK_SPINS} dark spins")
    tau_grid = np.asarray(tau_grid, dtype=float)

    total = np.zeros(tau_grid.shape, dtype=complex)
    branch_kinds = [
        ("absent", lambda d, p: 1.0 - d.rho),
        ("spectator", lambda d, p: d.rho * (1.0 - eta)),
        ("addressed", lambda d, p: d.rho * eta),
    ]
    for branch in product(range(3), repeat=len(defects)):
        weight = 1.0
        included, addressed, pols = [], [], []
        for (defect, p), kind in zip(defects, branch):
            weight *= branch_kinds[kind][1](defect, p)
            if branch_kinds[kind][0] != "absent":
                included.append(defect.a_dipolar)
                pols.append(p)
                addressed.append(branch_kinds[kind][0] == "addressed")
        if weight == 0.0:
            continue
        total += weight * _simulate_echo_branch(tau_grid, included, pols, addressed)

    env = background_decay_envelope(tau_grid, probe)
    return env * total


def background_decay_envelope(tau_grid, probe: ProbeSpin) -> np.ndarray:
    return np.exp(-((probe.gamma_bg * np.asarray(tau_grid, dtype=float))
                    ** probe.stretch_n))


def _simulate_echo_branch(tau_grid, couplings, polarizations, addressed):
    """One charge/addressing branch of the echo, simulated step by step."""
    if not couplings:
        return np.ones(tau_grid.shape, dtype=complex)
    out = np.empty(tau_grid.shape, dtype=complex)
    pi_targets = ["probe"] + [i for i, flag in enumerate(addressed) if flag]
    for k, tau in enumerate(tau_grid):
        reg = make_register(couplings, probe_polarization=1.0,
                            dark_polarizations=polarizations)
        reg = ideal_rotation(reg, ["probe"], np.pi / 2, phase=np.pi / 2)
        reg = evolve(reg, Delay(tau / 2.0))
        reg = ideal_rotation(reg, pi_targets, np.pi, phase=0.0)
        reg = evolve(reg, Delay(tau / 2.0))
        n = reg.n_sites
        x = 2.0 * reg.expect(_embed(_SX, 0, n))
        y = 2.0 * reg.expect(_embed(_SY, 0, n))
        # Rotating frame sense: a spin-up partner advances the probe phase
        # toward -Y, so the out-of-phase quadrature is -<Sy>.
        out[k] = x - 1j * y
    return out


# ---------------------------------------------------------------------------
# Pump-probe protocol

@dataclass(frozen=True)
class PumpProbeRecord:
    p_probe: float          # probe polarization after the lock (differential)
    p_dark: tuple           # per-defect dark polarization after the lock
    s_pi2: float            # out-of-phase readout (differential)


def make_pump_probe_sequence(tau_sl: float, omega: float, tau_p: float,
                             n_tones: int = 1, repol_power: float = 300e-6,
                             repol_duration: float = 1e-6,
                             tau_delay: float = 0.0,
                             reset_duration: float = 100e-6,
                             dark_rabi: float | None = None) -> PulseSequence:
    """Canonical polarization pump-probe sequence.

    Spin lock (probe + dark tones at matched Rabi), short optical probe
    reset, free delay, out-of-phase echo readout at doubled probe Rabi,
    long optical reset.
    """
    dark_rabi = omega if dark_rabi is None else dark_rabi
    lock = tuple(
        [Microwave(target="probe", rabi=omega, duration=tau_sl)]
        + [Microwave(target=i, rabi=dark_rabi, duration=tau_sl)
           for i in range(n_tones)]
    )
    return PulseSequence(segments=(
        lock,
        Laser(power=repol_power, duration=repol_duration),
        Delay(duration=tau_delay),
        DeerReadout(tau=tau_p, rabi=omega),
        Laser(power=repol_power, duration=reset_duration),
    ))


def _lock_parameters(segment):
    """(tau_sl, probe rabi, {dark index: rabi}) from a simultaneous-drive entry."""
    if not isinstance(segment, tuple):
        return None
    probe = [mw for mw in segment if mw.target == "probe"]
    darks = {mw.target: mw.rabi for mw in segment if mw.target != "probe"}
    if not probe or not darks:
        return None
    return _segment_duration(segment), probe[0].rabi, darks


def run_pump_probe(sequence: PulseSequence, defects, probe: ProbeSpin,
                   eta: float, laser: LaserResponse | None = None) -> PumpProbeRecord:
    """Execute the pump-probe protocol; returns the +-X differential record.

    `defects` is a list of NsDefect; their rho and eta set the classical
    weight with which each spin joins the Hartmann-Hahn exchange.
    """
    lock = readout = None
    laser_segments, delay_total = [], 0.0
    for segment in sequence.segments:
        parsed = _lock_parameters(segment)
        if parsed is not None and lock is None:
            lock = parsed
        elif isinstance(segment, DeerReadout) and readout is None:
            readout = segment
        elif isinstance(segment, Laser) and readout is None:
            laser_segments.append(segment)
        elif isinstance(segment, Delay) and readout is None:
            delay_total += segment.duration
    if readout is None:
        raise SequenceError("pump-probe sequence has no readout segment")
    if lock is None:
        raise SequenceError("pump-probe sequence has no spin-lock segment")

    tau_sl, omega_probe, dark_rabis = lock
    defects = list(defects)
    couplings = [d.a_dipolar for d in defects]
    detunings = [dark_rabis.get(i, None) for i in range(len(defects))]

    branches = {}
    for side, sign in (("+X", +1.0), ("-X", -1.0)):
        branches[side] = _lock_transfer(couplings, detunings, omega_probe,
                                        tau_sl, sign, defects, eta)
    p_probe = (branches["+X"][0] - branches["-X"][0]) / 2.0
    p_dark = (branches["+X"][1] - branches["-X"][1]) / 2.0

    # Optical probe reset and free delay act only on the dark polarization
    # as far as the readout is concerned.
    factor = 1.0
    for seg in laser_segments:
        rate = laser.dark_rate(seg.power) if laser is not None else 0.0
        factor *= np.exp(-rate * seg.duration)
    factor *= np.exp(-delay_total / probe.t1_dark_p1)
    p_dark = p_dark * factor

    s = {}
    for side, sign in (("+X", +1.0), ("-X", -1.0)):
        pols = branches[side][1] * factor
        sig = deer_signal(readout.tau, probe, eta,
                          list(zip(defects, np.clip(pols, -1, 1))))
        s[side] = float(np.imag(sig))
    s_pi2 = (s["+X"] - s["-X"]) / 2.0
    return PumpProbeRecord(p_probe=float(p_probe),
                           p_dark=tuple(float(v) for v in p_dark),
                           s_pi2=s_pi2)


def _lock_transfer(couplings, detuning_rabis, omega_probe, tau_sl, sign,
                   defects, eta):
    """Dressed-frame exchange during the lock, averaged over charge and
    addressing branches.  Returns (p_probe, p_dark array)."""
    k = len(defects)
    participation = []
    for i, d in enumerate(defects):
        w = d.rho * eta if detuning_rabis[i] is not None else 0.0
        participation.append(w)

    p_probe_total = 0.0
    p_dark_total = np.zeros(k)
    for branch in product((0, 1), repeat=k):
        weight = 1.0
        for i, member in enumerate(branch):
            weight *= participation[i] if member else (1.0 - participation[i])
        if weight == 0.0:
            continue
        members = [i for i in range(k) if branch[i]]
        if not members:
            p_probe_total += weight * sign
            continue
        sub_couplings = [couplings[i] for i in members]
        sub_detunings = [detuning_rabis[i] - omega_probe for i in members]
        reg = make_register(sub_couplings, probe_polarization=sign)
        h = exchange_hamiltonian(sub_couplings, sub_detunings)
        reg = evolve_exchange(reg, h, tau_sl)
        p_probe_total += weight * reg.probe_polarization()
        for slot, i in enumerate(members):
            p_dark_total[i] += weight * reg.dark_polarization(slot)
    return p_probe_total, p_dark_total
