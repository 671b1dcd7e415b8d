"""Inverse problems: configuration reconstruction and parameter fits.

The reconstruction search scores millions of candidate defect
configurations; its inner least-squares loop is a batched, bounds-clipped
Levenberg-Marquardt iteration written directly in numpy so a whole chunk
of candidates advances per array operation.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .charge import PhotonFluxModel, SaturationModel, cross_section
from .constants import DIAMOND_ATOM_DENSITY_NM3, DIPOLAR_PREFACTOR_HZ_NM3
from .coherence import odmr_spectrum
from .defects import NsDefect, dipolar_coupling_batch
from .errors import CapacityError, CheckpointError, ValidationError
from .rng import stream

LOG10_GAMMA_BOUNDS = (2.0, 7.0)   # background decoherence rate, 1/s
STRETCH_BOUNDS = (0.5, 3.0)


@dataclass(frozen=True)
class FitResult:
    params: dict
    residual_norm: float
    std_errors: dict
    n_evals: int
    converged: bool
    message: str = ""

    def __post_init__(self):
        if self.residual_norm < 0:
            raise ValidationError("residual_norm must be >= 0")


@dataclass(frozen=True)
class NoiseRates:
    gamma_mag: float    # magnetic / spin noise channel, 1/s
    gamma_elec: float   # electric / charge noise channel, 1/s


@dataclass(frozen=True)
class SlabGeometry:
    """Doped layer holding the defects, in probe-centered coordinates."""

    thickness_nm: float = 4.0
    depth_nm: float = 50.0              # below surface; bookkeeping only
    coupling_cutoff_hz: float = 1e3     # boundary defects couple below this

    @property
    def radius_nm(self) -> float:
        """Lateral radius at which even the best-aligned defect falls
        below the coupling cutoff."""
        return float((2.0 * DIPOLAR_PREFACTOR_HZ_NM3
                      / self.coupling_cutoff_hz) ** (1.0 / 3.0))

    def volume_nm3(self) -> float:
        return float(np.pi * self.radius_nm**2 * self.thickness_nm)


@dataclass
class CandidateConfiguration:
    positions: np.ndarray   # (n, 3) nm
    couplings: np.ndarray   # (n,) Hz
    rho: np.ndarray         # (n,)
    index: int = 0          # position in the sampling stream

    @property
    def n_defects(self) -> int:
        return len(self.couplings)

    def defects(self) -> list:
        return [NsDefect(rho=float(r), a_dipolar=float(a))
                for r, a in zip(self.rho, self.couplings)]


@dataclass(frozen=True)
class DeerDataset:
    """One measured in-phase DEER curve with its addressing fraction."""

    tau: np.ndarray
    signal: np.ndarray
    eta: float

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        sig = np.asarray(self.signal, dtype=float)
        if tau.shape != sig.shape or tau.ndim != 1:
            raise ValidationError("tau and signal must be equal-length 1-d arrays")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "signal", sig)


# ---------------------------------------------------------------------------
# Configuration sampling

MAX_EXPECTED_DEFECTS = 32


def expected_defect_count(density_ppm: float, slab: SlabGeometry) -> float:
    return density_ppm * 1e-6 * DIAMOND_ATOM_DENSITY_NM3 * slab.volume_nm3()


def sample_configuration(index: int, density_ppm: float, slab: SlabGeometry,
                         seed: int) -> CandidateConfiguration:
    """Candidate `index` of the stream: Poisson count, uniform positions."""
    mean = expected_defect_count(density_ppm, slab)
    if mean > MAX_EXPECTED_DEFECTS:
        raise CapacityError(
            f"expected defect count {mean:.1f} exceeds {MAX_EXPECTED_DEFECTS}"
        )
    rng = stream(seed, index)
    n = int(rng.poisson(mean))
    positions = np.empty((n, 3))
    r_lat = slab.radius_nm * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    positions[:, 0] = r_lat * np.cos(phi)
    positions[:, 1] = r_lat * np.sin(phi)
    positions[:, 2] = slab.thickness_nm * (rng.random(n) - 0.5)
    # Redraw anything inside the hard-core exclusion.
    while True:
        bad = np.linalg.norm(positions, axis=1) <= 0.1
        if not bad.any():
            break
        m = int(bad.sum())
        r_lat = slab.radius_nm * np.sqrt(rng.random(m))
        phi = 2.0 * np.pi * rng.random(m)
        positions[bad, 0] = r_lat * np.cos(phi)
        positions[bad, 1] = r_lat * np.sin(phi)
        positions[bad, 2] = slab.thickness_nm * (rng.random(m) - 0.5)
    couplings = (dipolar_coupling_batch(positions) if n
                 else np.empty(0))
    return CandidateConfiguration(positions=positions, couplings=couplings,
                                  rho=np.full(n, 0.5), index=index)


def sample_configurations(count: int, density_ppm: float,
                          slab: SlabGeometry | None = None, seed: int = 0):
    """Deterministic stream of candidate configurations."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    if density_ppm <= 0:
        raise ValidationError("density must be positive")
    slab = slab or SlabGeometry()
    for i in range(count):
        yield sample_configuration(i, density_ppm, slab, seed)


# ---------------------------------------------------------------------------
# Batched DEER least squares

def _concat_datasets(datasets):
    tau = np.concatenate([d.tau for d in datasets])
    y = np.concatenate([d.signal for d in datasets])
    eta = np.concatenate([np.full(d.tau.shape, d.eta) for d in datasets])
    return tau, y, eta


def _deer_model_terms(u, dmat, tau):
    """Model values for a batch.  u: (B, K+2) params, dmat: (B, K, T)."""
    k = dmat.shape[1]
    rho = u[:, :k]                                  # (B, K)
    gamma = 10.0 ** u[:, k]                         # (B,)
    n = u[:, k + 1]                                 # (B,)
    w = (gamma[:, None] * tau[None, :]) ** n[:, None]
    env = np.exp(-w)                                # (B, T)
    terms = 1.0 - rho[:, :, None] * dmat            # (B, K, T)
    prod = np.prod(terms, axis=1) if k else np.ones_like(env)
    return env * prod, env, terms, prod, w, gamma, n


def _deer_cost(u, dmat, tau, y):
    m = _deer_model_terms(u, dmat, tau)[0]
    r = m - y[None, :]
    cost = np.sum(r * r, axis=1)
    return np.where(np.isfinite(cost), cost, np.inf)


def fit_deer_batch(couplings: np.ndarray, datasets, max_iter: int = 60,
                   u0: np.ndarray | None = None, thin: int = 1,
                   gain_tol: float = 1e-14):
    """Fit (rho_1..K, Gamma, n) for a batch of candidates sharing K.

    couplings: (B, K) Hz.  Returns (cost (B,), params (B, K+2), n_iter).
    Gamma is carried as log10 internally; returned params keep that form.
    `thin` fits every thin-th point (screening mode); `gain_tol` is the
    relative cost-gain below which a candidate counts as converged.
    """
    tau, y, eta = _concat_datasets(datasets)
    if thin > 1:
        tau, y, eta = tau[::thin], y[::thin], eta[::thin]
    b, k = couplings.shape
    phase = np.pi * couplings[:, :, None] * tau[None, None, :]
    dmat = eta[None, None, :] * (1.0 - np.cos(phase))   # (B, K, T)

    lo = np.concatenate([np.zeros(k), [LOG10_GAMMA_BOUNDS[0], STRETCH_BOUNDS[0]]])
    hi = np.concatenate([np.ones(k), [LOG10_GAMMA_BOUNDS[1], STRETCH_BOUNDS[1]]])
    if u0 is None:
        tau_scale = max(tau.max(), 1e-9)
        g0 = np.clip(np.log10(0.5 / tau_scale), *LOG10_GAMMA_BOUNDS)
        u0 = np.concatenate([np.full(k, 0.5), [g0, 1.0]])
    u = np.broadcast_to(np.asarray(u0, dtype=float), (b, k + 2)).copy()

    cost = _deer_cost(u, dmat, tau, y)
    lam = np.full(b, 1e-3)
    active = np.ones(b, dtype=bool)
    ln10 = np.log(10.0)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        if not active.any():
            break
        ua, da, ca, la = u[active], dmat[active], cost[active], lam[active]
        m, env, terms, prod, w, gamma, n = _deer_model_terms(ua, da, tau)
        r = m - y[None, :]

        # Analytic Jacobian, (Ba, T, P).
        ba = ua.shape[0]
        jac = np.empty((ba, tau.size, k + 2))
        if k:
            if k == 1:
                prod_except = np.ones_like(terms)
            else:
                fwd = np.cumprod(terms, axis=1)
                bwd = np.cumprod(terms[:, ::-1, :], axis=1)[:, ::-1, :]
                prod_except = np.ones_like(terms)
                prod_except[:, 1:, :] = fwd[:, :-1, :]
                prod_except[:, :-1, :] *= bwd[:, 1:, :]
            jac[:, :, :k] = np.transpose(-da * prod_except, (0, 2, 1)) \
                * env[:, :, None]
        jac[:, :, k] = -n[:, None] * ln10 * w * m
        with np.errstate(divide="ignore", invalid="ignore"):
            logw = np.log(gamma[:, None] * tau[None, :])
        dn = -w * np.where(np.isfinite(logw), logw, 0.0) * m
        jac[:, :, k + 1] = dn

        g = np.einsum("btp,bt->bp", jac, r)
        jtj = np.einsum("btp,btq->bpq", jac, jac)
        diag = np.einsum("bpp->bp", jtj).copy()
        diag = np.maximum(diag, 1e-12)
        aug = jtj + (la[:, None] * diag)[:, :, None] * np.eye(k + 2)
        try:
            step = np.linalg.solve(aug, -g[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(
                aug.reshape(-1, k + 2, k + 2)[0], -g[0], rcond=None)[0][None, :]
        u_try = np.clip(ua + step, lo, hi)
        cost_try = _deer_cost(u_try, da, tau, y)

        improved = cost_try < ca
        ua = np.where(improved[:, None], u_try, ua)
        la = np.where(improved, la * 0.3, la * 5.0)
        la = np.clip(la, 1e-12, 1e12)
        new_cost = np.where(improved, cost_try, ca)

        rel_gain = (ca - new_cost) / (1.0 + ca)
        stalled = (~improved) & (la >= 1e8)
        tiny = improved & (rel_gain < gain_tol)
        done = stalled | tiny

        idx = np.flatnonzero(active)
        u[idx], cost[idx], lam[idx] = ua, new_cost, la
        active[idx[done]] = False
    return cost, u, n_iter


def score_configuration(config: CandidateConfiguration, datasets) -> float:
    """Summed squared residual of the best charge-weighted echo fit."""
    cost, params, _ = fit_deer_batch(config.couplings[None, :], datasets)
    k = config.n_defects
    config.rho = params[0, :k].copy()
    return float(cost[0])


def fit_deer(couplings, datasets, compute_errors: bool = True) -> FitResult:
    """Single-configuration DEER fit with named parameters and errors."""
    couplings = np.atleast_1d(np.asarray(couplings, dtype=float))
    cost, params, n_iter = fit_deer_batch(couplings[None, :], datasets)
    k = couplings.size
    u = params[0]
    names = [f"rho_{i + 1}" for i in range(k)] + ["gamma_bg", "stretch_n"]
    values = list(u[:k]) + [10.0 ** u[k], u[k + 1]]
    std = {}
    if compute_errors:
        std = _deer_std_errors(u, couplings, datasets, float(cost[0]))
    return FitResult(params=dict(zip(names, values)),
                     residual_norm=float(np.sqrt(cost[0])),
                     std_errors=std, n_evals=n_iter, converged=True)


def _deer_std_errors(u, couplings, datasets, ssr):
    tau, y, eta = _concat_datasets(datasets)
    k = couplings.size

    def model(v):
        m, *_ = _deer_model_terms(v[None, :], eta[None, None, :] * (
            1.0 - np.cos(np.pi * couplings[None, :, None] * tau[None, None, :])
        ), tau)
        return m[0]

    jac = np.empty((tau.size, k + 2))
    h = 1e-6
    base = model(u)
    for j in range(k + 2):
        v = u.copy()
        v[j] += h
        jac[:, j] = (model(v) - base) / h
    dof = max(tau.size - (k + 2), 1)
    try:
        cov = np.linalg.inv(jac.T @ jac) * ssr / dof
        sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        return {}
    names = [f"rho_{i + 1}" for i in range(k)] + ["gamma_bg", "stretch_n"]
    out = dict(zip(names, sig))
    # gamma error is in log10 units; convert to 1/s.
    out["gamma_bg"] = out["gamma_bg"] * np.log(10.0) * 10.0 ** u[k]
    return out


# ---------------------------------------------------------------------------
# Reconstruction search

_CHUNK = 2048

# Worker globals, installed by _init_worker under fork start method.
_WORK = {}


def _run_hash(datasets, budget, density_ppm, slab, seed, top_k) -> str:
    h = hashlib.sha256()
    for d in datasets:
        h.update(d.tau.tobytes())
        h.update(d.signal.tobytes())
        h.update(np.float64(d.eta).tobytes())
    payload = (budget, density_ppm, slab.thickness_nm, slab.depth_nm,
               slab.coupling_cutoff_hz, seed, top_k)
    h.update(repr(payload).encode())
    return h.hexdigest()


# Screening schedule: quick thinned fit for every candidate, then a full
# fit of each chunk's local best before anything enters the global top-k.
_SCREEN_THIN = 4
_SCREEN_ITER = 10
_REFINE_PER_CHUNK = 48


def _score_chunk(args):
    chunk_id = args
    datasets = _WORK["datasets"]
    density_ppm, slab, seed = _WORK["density_ppm"], _WORK["slab"], _WORK["seed"]
    budget, top_k = _WORK["budget"], _WORK["top_k"]
    start = chunk_id * _CHUNK
    stop = min(start + _CHUNK, budget)

    groups = {}
    for idx in range(start, stop):
        cfg = sample_configuration(idx, density_ppm, slab, seed)
        groups.setdefault(cfg.n_defects, []).append(cfg)

    screened = []
    for k, cfgs in groups.items():
        couplings = np.array([c.couplings for c in cfgs]).reshape(len(cfgs), k)
        cost, params, _ = fit_deer_batch(couplings, datasets,
                                         max_iter=_SCREEN_ITER,
                                         thin=_SCREEN_THIN, gain_tol=1e-8)
        for c, cfg in enumerate(cfgs):
            screened.append((float(cost[c]), k, cfg, params[c]))
    screened.sort(key=lambda e: (e[0], e[1], e[2].index))
    survivors = screened[:_REFINE_PER_CHUNK]

    groups = {}
    for _, k, cfg, u in survivors:
        groups.setdefault(k, []).append((cfg, u))
    entries = []
    for k, items in groups.items():
        couplings = np.array([c.couplings for c, _ in items]).reshape(len(items), k)
        warm = np.array([u for _, u in items]).reshape(len(items), k + 2)
        cost, params, _ = fit_deer_batch(couplings, datasets, max_iter=40,
                                         u0=warm, gain_tol=1e-12)
        for c, (cfg, _) in enumerate(items):
            entries.append((float(cost[c]), k, cfg.index, params[c].tolist()))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    return chunk_id, entries[:top_k]


def _init_worker(payload):
    _WORK.update(payload)


def reconstruct(datasets, budget: int, parallelism: int = 1, seed: int = 0,
                top_k: int = 100, density_ppm: float = 2.0,
                slab: SlabGeometry | None = None,
                checkpoint_path: str | None = None, resume: bool = False,
                checkpoint_every: int = 64):
    """Search `budget` random candidate configurations against the data.

    Returns the top-k list of (CandidateConfiguration, FitResult) ordered
    by score, then defect count, then stream index.  The ranking is a
    pure function of (datasets, budget, density, slab, seed) regardless
    of `parallelism`.
    """
    if budget < 1:
        raise ValidationError("budget must be >= 1")
    slab = slab or SlabGeometry()
    datasets = list(datasets)
    run_hash = _run_hash(datasets, budget, density_ppm, slab, seed, top_k)

    n_chunks = (budget + _CHUNK - 1) // _CHUNK
    completed: set = set()
    entries: list = []
    if resume:
        if not (checkpoint_path and os.path.exists(checkpoint_path)):
            raise CheckpointError("resume requested but no checkpoint found")
        with open(checkpoint_path) as fh:
            ck = json.load(fh)
        if ck.get("run_hash") != run_hash:
            raise CheckpointError("checkpoint does not match this run")
        completed = set(ck["completed_chunks"])
        entries = [tuple(e[:3]) + (e[3],) for e in ck["entries"]]

    payload = dict(datasets=datasets, density_ppm=density_ppm, slab=slab,
                   seed=seed, budget=budget, top_k=top_k)
    pending = [c for c in range(n_chunks) if c not in completed]

    def absorb(chunk_id, chunk_entries):
        nonlocal entries
        completed.add(chunk_id)
        entries = sorted(entries + chunk_entries,
                         key=lambda e: (e[0], e[1], e[2]))[:top_k]

    if parallelism > 1 and pending:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(parallelism, initializer=_init_worker,
                      initargs=(payload,)) as pool:
            done_since_ck = 0
            for chunk_id, chunk_entries in pool.imap_unordered(
                    _score_chunk, pending):
                absorb(chunk_id, chunk_entries)
                done_since_ck += 1
                if checkpoint_path and done_since_ck >= checkpoint_every:
                    _write_checkpoint(checkpoint_path, run_hash, completed, entries)
                    done_since_ck = 0
    else:
        _init_worker(payload)
        done_since_ck = 0
        for chunk_id in pending:
            absorb(*_score_chunk(chunk_id))
            done_since_ck += 1
            if checkpoint_path and done_since_ck >= checkpoint_every:
                _write_checkpoint(checkpoint_path, run_hash, completed, entries)
                done_since_ck = 0

    if checkpoint_path:
        _write_checkpoint(checkpoint_path, run_hash, completed, entries)

    results = []
    for score, k, idx, params in entries:
        cfg = sample_configuration(idx, density_ppm, slab, seed)
        u = np.asarray(params)
        cfg.rho = u[:k].copy()
        fit = FitResult(
            params={**{f"rho_{i + 1}": float(u[i]) for i in range(k)},
                    "gamma_bg": float(10.0 ** u[k]) if k + 1 <= len(u) else None,
                    "stretch_n": float(u[k + 1])},
            residual_norm=float(np.sqrt(score)),
            std_errors={}, n_evals=0, converged=True)
        results.append((cfg, fit))
    return results


def _write_checkpoint(path, run_hash, completed, entries):
    doc = {"version": 1, "run_hash": run_hash,
           "completed_chunks": sorted(completed),
           "entries": [list(e) for e in entries]}
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Scalar fits

def _std_errors_from_jac(jac, ssr, n_points, names):
    dof = max(n_points - jac.shape[1], 1)
    jtj = jac.T @ jac
    if np.linalg.cond(jtj) > 1e12:
        return None
    cov = np.linalg.inv(jtj) * ssr / dof
    return dict(zip(names, np.sqrt(np.maximum(np.diag(cov), 0.0))))


def fit_mono_exponential(t, y) -> FitResult:
    """Fit y = offset + amplitude * exp(-rate * t)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 4:
        raise ValidationError("need at least 4 points")
    if np.ptp(y) < 1e-14 * max(1.0, np.max(np.abs(y))):
        return FitResult(params={}, residual_norm=0.0, std_errors={},
                         n_evals=0, converged=False,
                         message="constant data: rate unidentifiable")

    offset0 = float(y[np.argmax(t)])
    amp0 = float(y[np.argmin(t)] - offset0)
    if amp0 == 0.0:
        amp0 = float(np.ptp(y)) or 1.0
    span = np.ptp(t) or 1.0
    rate0 = 2.0 / span

    def resid(p):
        rate, amp, off = p
        return off + amp * np.exp(-rate * t) - y

    sol = least_squares(resid, x0=[rate0, amp0, offset0],
                        bounds=([1e-12, -np.inf, -np.inf],
                                [np.inf, np.inf, np.inf]))
    ssr = float(2.0 * sol.cost)
    names = ["rate", "amplitude", "offset"]
    std = _std_errors_from_jac(sol.jac, ssr, t.size, names)
    converged = sol.success and std is not None
    return FitResult(params=dict(zip(names, sol.x)),
                     residual_norm=float(np.sqrt(ssr)),
                     std_errors=std or {}, n_evals=int(sol.nfev),
                     converged=converged,
                     message="" if converged else "degenerate fit")


def fit_saturation(powers, rates, flux_model: PhotonFluxModel | None = None):
    """Fit rate(P) = Gamma_sat * P / (P + P_sat); returns (model, FitResult).

    FitResult.params also carries the low-power slope and, when a flux
    model is supplied, the implied ionization cross-section (m^2).
    """
    powers = np.asarray(powers, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if np.unique(powers).size < 3:
        raise ValidationError("need at least 3 distinct powers")

    g0 = 2.0 * float(np.max(rates)) or 1.0
    p0 = float(np.median(powers)) or 1.0

    def resid(p):
        gs, ps = p
        return gs * powers / (powers + ps) - rates

    sol = least_squares(resid, x0=[g0, p0], bounds=([1e-30, 1e-30],
                                                    [np.inf, np.inf]),
                        x_scale=[g0, p0])
    gamma_sat, p_sat = sol.x
    ssr = float(2.0 * sol.cost)
    names = ["gamma_sat", "p_sat"]
    std = _std_errors_from_jac(sol.jac, ssr, powers.size, names) or {}

    identifiable = p_sat <= 2.0 * float(np.max(powers))
    params = dict(zip(names, sol.x))
    params["low_power_slope"] = gamma_sat / p_sat
    if flux_model is not None:
        params["cross_section_m2"] = cross_section(gamma_sat / p_sat, flux_model)
    converged = bool(sol.success) and identifiable
    message = "" if identifiable else "p_sat above sampled range: unidentifiable"
    model = SaturationModel(gamma_sat=float(gamma_sat), p_sat=float(p_sat))
    return model, FitResult(params=params, residual_norm=float(np.sqrt(ssr)),
                            std_errors=std if converged else {},
                            n_evals=int(sol.nfev), converged=converged,
                            message=message)


def fit_odmr(freq, amplitude, defects, settings, probe,
             line_shape: str = "lorentzian", linewidth: float = 50e3,
             max_nfev: int = 200) -> tuple:
    """Fit per-defect Stark shifts to a measured spectrum.

    Charge populations and dipolar couplings of `defects` are held fixed;
    only the d_i move.  Returns (fitted defects, FitResult).
    """
    freq = np.asarray(freq, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    defects = list(defects)

    def with_shifts(d_vals):
        return [NsDefect(rho=d.rho, a_dipolar=d.a_dipolar, d_stark=float(dv))
                for d, dv in zip(defects, d_vals)]

    def resid(d_vals):
        spec = odmr_spectrum(settings, probe, with_shifts(d_vals),
                             line_shape=line_shape, linewidth=linewidth,
                             freq_grid=freq)
        return spec.amplitude - amplitude

    x0 = np.array([d.d_stark for d in defects], dtype=float)
    sol = least_squares(resid, x0=x0, max_nfev=max_nfev,
                        diff_step=1e-3 * max(linewidth, 1.0)
                        / np.maximum(np.abs(x0), 1.0))
    ssr = float(2.0 * sol.cost)
    names = [f"d_{i + 1}" for i in range(len(defects))]
    std = _std_errors_from_jac(sol.jac, ssr, freq.size, names)
    converged = bool(sol.success) and std is not None
    return with_shifts(sol.x), FitResult(
        params=dict(zip(names, sol.x)), residual_norm=float(np.sqrt(ssr)),
        std_errors=std or {}, n_evals=int(sol.nfev), converged=converged,
        message="" if converged else "Stark shifts unidentifiable")


# ---------------------------------------------------------------------------
# SQ/DQ noise decomposition

# Rows: observed (SQ, DQ) rates; columns: (magnetic, electric) channels.
DEFAULT_NOISE_MODEL = np.array([[1.0, 1.0],
                                [2.0, 0.0]])


def noise_forward(rates: NoiseRates, model=DEFAULT_NOISE_MODEL):
    """(Gamma_SQ, Gamma_DQ) produced by the two noise channels."""
    sq, dq = np.asarray(model) @ [rates.gamma_mag, rates.gamma_elec]
    return float(sq), float(dq)


def extract_noise(gamma_sq: float, gamma_dq: float,
                  model=DEFAULT_NOISE_MODEL) -> NoiseRates:
    """Invert the SQ/DQ decay rates into magnetic and electric channels."""
    if gamma_sq < 0 or gamma_dq < 0:
        raise ValidationError("decay rates must be >= 0")
    mag, elec = np.linalg.solve(np.asarray(model, dtype=float),
                                [gamma_sq, gamma_dq])
    if elec < 0:
        warnings.warn("extracted electric noise rate is negative "
                      "(unphysical); reporting as-is", RuntimeWarning)
    return NoiseRates(gamma_mag=float(mag), gamma_elec=float(elec))
