"""Command-line surface: one verb per experiment, JSON reports out.

Exit codes: 0 success, 2 validation error, 3 fit non-convergence,
4 checkpoint mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as dio
from .charge import (ChargeRateModel, PhotonFluxModel, SaturationModel,
                     propagate, sample_trajectory)
from .coherence import deer_signal, odmr_spectrum
from .defects import ChargeSpinPopulation, MeasurementSettings, NsDefect, ProbeSpin
from .errors import (CheckpointError, FitError, SequenceError,
                     ValidationError)
from .inference import (DeerDataset, extract_noise, fit_deer,
                        fit_mono_exponential, fit_saturation, reconstruct,
                        SlabGeometry)
from .spindynamics import (LaserResponse, make_pump_probe_sequence,
                           run_pump_probe)

THREADS_ENV_VAR = "DARKSPIN_THREADS"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CHECKPOINT = 4


def _grid(spec: dict, name: str) -> np.ndarray:
    try:
        return np.linspace(float(spec["start"]), float(spec["stop"]),
                           int(spec["points"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad grid spec for {name!r}: {exc}") from None


def _probe(params: dict) -> ProbeSpin:
    p = params.get("probe", {})
    return ProbeSpin(gamma_bg=float(p.get("gamma_bg", 0.0)),
                     stretch_n=float(p.get("stretch_n", 1.0)),
                     t1_dark_p1=float(p.get("t1_dark_p1", 1.9e-3)))


def _defects(params: dict):
    out = []
    for d in params["defects"]:
        out.append((NsDefect(rho=float(d["rho"]), a_dipolar=float(d["a_hz"]),
                             d_stark=float(d.get("d_hz", 0.0))),
                    float(d.get("polarization", 0.0))))
    return out


def _rates(params: dict) -> ChargeRateModel:
    r = params["rates"]
    return ChargeRateModel(
        saturation=SaturationModel(gamma_sat=float(r["gamma_sat"]),
                                   p_sat=float(r["p_sat"])),
        r_rec=float(r.get("r_rec", 0.0)),
        t1_dark=float(r.get("t1_dark", 1.9e-3)),
        r_ion_dark=float(r.get("r_ion_dark", 0.0)),
        r_rec_dark=float(r.get("r_rec_dark", 0.0)))


def _datasets(params: dict, tables) -> list:
    etas = params["etas"]
    if len(etas) != len(tables):
        raise ValidationError(
            f"{len(tables)} data files but {len(etas)} etas in config")
    return [DeerDataset(tau=t["tau_s"], signal=t["s0"], eta=float(e))
            for t, e in zip(tables, etas)]


# ---------------------------------------------------------------------------
# Experiment implementations: each returns (outputs, curves, exit_code)

def _run_simulate_deer(cfg, tables, extra):
    params = cfg.parameters
    probe = _probe(params)
    defects = _defects(params)
    tau = _grid(params["tau"], "tau")
    sig = deer_signal(tau, probe, float(params["eta"]), defects)
    curves = {"deer": {"tau_s": tau, "s0_model": sig.real,
                       "s_pi2_model": sig.imag}}
    if tables:
        curves["deer"]["s0_data"] = tables[0]["s0"]
    outputs = {}
    if np.any(np.abs(sig.imag) > 1e-15):
        outputs["probe_point_s"] = float(tau[int(np.argmax(np.abs(sig.imag)))])
    return outputs, curves, EXIT_OK


def _run_simulate_odmr(cfg, tables, extra):
    params = cfg.parameters
    defects = [d for d, _ in _defects(params)]
    spec = odmr_spectrum(MeasurementSettings(), _probe(params), defects,
                         line_shape=params.get("line_shape", "lorentzian"),
                         linewidth=float(params["linewidth_hz"]),
                         freq_grid=_grid(params["freq"], "freq"))
    outputs = {"n_lines": int(spec.line_positions.size),
               "line_positions_hz": spec.line_positions.tolist(),
               "line_weights": spec.line_weights.tolist()}
    curves = {"odmr": {"freq_hz": spec.freq, "amplitude": spec.amplitude}}
    return outputs, curves, EXIT_OK


def _run_simulate_pump_probe(cfg, tables, extra):
    params = cfg.parameters
    probe = _probe(params)
    defects = [d for d, _ in _defects(params)]
    eta = float(params["eta"])
    omega = float(params["omega_hz"])
    tau_p = float(params["tau_p_s"])
    tau_sl = _grid(params["tau_sl"], "tau_sl")
    repol = params.get("repol", {})
    laser = None
    if repol:
        laser = LaserResponse(dark_saturation=SaturationModel(
            gamma_sat=float(repol.get("dark_gamma_sat", 2.62e4)),
            p_sat=float(repol.get("dark_p_sat", 1.6e-3))))
    p_probe, s_pi2 = [], []
    p_dark = [[] for _ in defects]
    for t in tau_sl:
        seq = make_pump_probe_sequence(
            tau_sl=float(t), omega=omega, tau_p=tau_p, n_tones=len(defects),
            repol_power=float(repol.get("power_w", 300e-6)),
            repol_duration=float(repol.get("duration_s", 0.0)),
            tau_delay=float(params.get("delay_s", 0.0)))
        rec = run_pump_probe(seq, defects, probe, eta, laser=laser)
        p_probe.append(rec.p_probe)
        s_pi2.append(rec.s_pi2)
        for i, v in enumerate(rec.p_dark):
            p_dark[i].append(v)
    curves = {"pump_probe": {"tau_sl_s": tau_sl,
                             "p_probe": np.asarray(p_probe),
                             "s_pi2": np.asarray(s_pi2),
                             **{f"p_dark_{i + 1}": np.asarray(v)
                                for i, v in enumerate(p_dark)}}}
    best = int(np.argmax(np.abs(s_pi2)))
    return {"optimal_tau_sl_s": float(tau_sl[best])}, curves, EXIT_OK


def _run_simulate_charge(cfg, tables, extra):
    params = cfg.parameters
    rates = _rates(params)
    power = float(params["power_w"])
    init = params["initial"]
    pop = ChargeSpinPopulation(float(init["p_up"]), float(init["p_down"]),
                               float(init["p_plus"]))
    times = _grid(params["times"], "times")
    cols = {"t_s": times, "p_up": [], "p_down": [], "p_plus": []}
    for t in times:
        p = propagate(pop, rates, power, float(t))
        cols["p_up"].append(p.p_up)
        cols["p_down"].append(p.p_down)
        cols["p_plus"].append(p.p_plus)
    for k in ("p_up", "p_down", "p_plus"):
        cols[k] = np.asarray(cols[k])
    outputs = {}
    n_traj = int(params.get("trajectories", 0))
    if n_traj:
        duration = float(times[-1])
        hits = np.zeros((times.size, 3))
        for j in range(n_traj):
            traj = sample_trajectory(pop, rates, power, duration,
                                     seed=cfg.seed, stream_id=j)
            for i, t in enumerate(times):
                hits[i, traj.state_at(float(min(t, duration)))] += 1
        emp = hits / n_traj
        cols["p_up_empirical"] = emp[:, 0]
        cols["p_down_empirical"] = emp[:, 1]
        cols["p_plus_empirical"] = emp[:, 2]
        outputs["n_trajectories"] = n_traj
    return outputs, {"charge": cols}, EXIT_OK


def _run_fit_deer(cfg, tables, extra):
    params = cfg.parameters
    datasets = _datasets(params, tables)
    fit = fit_deer(np.asarray(params["couplings_hz"], dtype=float), datasets)
    outputs = {"params": fit.params, "std_errors": fit.std_errors,
               "residual_norm": fit.residual_norm,
               "converged": fit.converged}
    return outputs, {}, EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def _run_reconstruct(cfg, tables, extra):
    params = cfg.parameters
    datasets = _datasets(params, tables)
    slab_params = params.get("slab", {})
    slab = SlabGeometry(
        thickness_nm=float(slab_params.get("thickness_nm", 4.0)),
        depth_nm=float(slab_params.get("depth_nm", 50.0)),
        coupling_cutoff_hz=float(slab_params.get("coupling_cutoff_hz", 1e3)))
    results = reconstruct(
        datasets, budget=int(params["budget"]), parallelism=cfg.threads,
        seed=cfg.seed, top_k=int(params.get("top_k", 100)),
        density_ppm=float(params.get("density_ppm", 2.0)), slab=slab,
        checkpoint_path=extra.get("checkpoint"),
        resume=extra.get("resume", False))
    ranked = []
    for cfg_c, fit in results:
        ranked.append({
            "index": int(cfg_c.index),
            "n_defects": int(cfg_c.n_defects),
            "couplings_hz": cfg_c.couplings.tolist(),
            "rho": cfg_c.rho.tolist(),
            "score": fit.residual_norm**2,
            "params": fit.params,
        })
    outputs = {"budget": int(params["budget"]), "ranking": ranked[:10],
               "n_ranked": len(ranked)}
    curves = {}
    if ranked:
        best_cfg, best_fit = results[0]
        probe = ProbeSpin(gamma_bg=best_fit.params["gamma_bg"],
                          stretch_n=best_fit.params["stretch_n"])
        d = datasets[-1]
        model = deer_signal(d.tau, probe, d.eta, best_cfg.defects()).real
        curves["deer"] = {"tau_s": d.tau, "s0_model": model, "s0_data": d.signal}
    return outputs, curves, EXIT_OK


def _run_fit_saturation(cfg, tables, extra):
    params = cfg.parameters
    if not tables:
        raise ValidationError("fit_saturation needs a --data table "
                              "(columns power_w, rate_hz)")
    table = tables[0]
    flux_params = params.get("flux", {})
    flux = PhotonFluxModel(
        wavelength=float(flux_params.get("wavelength_m", 532e-9)),
        numerical_aperture=float(flux_params.get("numerical_aperture", 0.9)),
        spot_area=flux_params.get("spot_area_m2"))
    model, fit = fit_saturation(table["power_w"], table["rate_hz"], flux)
    rate_fit = model.gamma_sat * table["power_w"] / (table["power_w"] + model.p_sat)
    outputs = {"params": fit.params, "std_errors": fit.std_errors,
               "residual_norm": fit.residual_norm, "converged": fit.converged,
               "message": fit.message}
    curves = {"saturation": {"power_w": table["power_w"],
                             "rate_hz": table["rate_hz"],
                             "rate_fit_hz": rate_fit}}
    return outputs, curves, EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def _run_fit_charge_relaxation(cfg, tables, extra):
    if not tables:
        raise ValidationError("fit_charge_relaxation needs a --data table "
                              "(columns t_s, rho_bar)")
    table = tables[0]
    fit = fit_mono_exponential(table["t_s"], table["rho_bar"])
    outputs = {"params": fit.params, "std_errors": fit.std_errors,
               "residual_norm": fit.residual_norm, "converged": fit.converged,
               "message": fit.message}
    if fit.converged:
        outputs["t_c_s"] = 1.0 / fit.params["rate"]
        outputs["rho_steady"] = fit.params["offset"]
        model = (fit.params["offset"] + fit.params["amplitude"]
                 * np.exp(-fit.params["rate"] * table["t_s"]))
    curves = {}
    if fit.converged:
        curves["charge_relaxation"] = {"t_s": table["t_s"],
                                       "rho_bar": table["rho_bar"],
                                       "rho_bar_fit": model}
    return outputs, curves, EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def _run_extract_noise(cfg, tables, extra):
    params = cfg.parameters
    rates = extract_noise(float(params["gamma_sq"]), float(params["gamma_dq"]))
    outputs = {"gamma_mag": rates.gamma_mag, "gamma_elec": rates.gamma_elec}
    return outputs, {}, EXIT_OK


_RUNNERS = {
    "simulate_deer": _run_simulate_deer,
    "simulate_odmr": _run_simulate_odmr,
    "simulate_pump_probe": _run_simulate_pump_probe,
    "simulate_charge": _run_simulate_charge,
    "fit_deer": _run_fit_deer,
    "reconstruct": _run_reconstruct,
    "fit_saturation": _run_fit_saturation,
    "fit_charge_relaxation": _run_fit_charge_relaxation,
    "extract_noise": _run_extract_noise,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run(config: dio.RunConfig, data_paths=(), out_dir: str = ".",
        checkpoint: str | None = None, resume: bool = False,
        config_path: str | None = None):
    """Execute one experiment; returns (report dict, exit code).

    The report is written to out_dir/report.json and embeds everything
    needed to reproduce the run.
    """
    tables = [dio.load_table(p) for p in data_paths]
    extra = {"checkpoint": checkpoint, "resume": resume}
    outputs, curves, code = _RUNNERS[config.experiment](config, tables, extra)
    report = {
        "schema_version": dio.SCHEMA_VERSION,
        "experiment": config.experiment,
        "seed": config.seed,
        "threads": config.threads,
        "config": config.to_dict(),
        "inputs": {
            "config_sha256": (dio.sha256_file(config_path) if config_path
                              else dio.sha256_doc(config.to_dict())),
            "data_sha256": {p: dio.sha256_file(p) for p in data_paths},
        },
        "outputs": _jsonable(outputs),
        "curves": _jsonable(curves),
    }
    dio.write_report(out_dir, report)
    return report, code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="darkspin",
        description="Forward models and inverse problems for central-spin "
                    "readout of dark spin-charge defects.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in dio.EXPERIMENTS:
        p = sub.add_parser(name.replace("_", "-"),
                           help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--data", action="append", default=[],
                       help="delimited-text data table (repeatable)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override config seed")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker count (env {THREADS_ENV_VAR} overrides "
                            "the config default)")
        p.add_argument("--checkpoint", default=None,
                       help="checkpoint file for long searches")
        p.add_argument("--resume", action="store_true",
                       help="resume from --checkpoint")
        p.add_argument("--plot", action="append", default=[],
                       help="emit plot data of this kind (repeatable)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = dio.load_config(args.config)
        experiment = args.experiment.replace("-", "_")
        if config.experiment != experiment:
            raise ValidationError(
                f"config is for {config.experiment!r}, requested {experiment!r}")
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        threads = args.threads
        if threads is None and THREADS_ENV_VAR in os.environ:
            threads = int(os.environ[THREADS_ENV_VAR])
        if threads is not None:
            overrides["threads"] = threads
        if overrides:
            config = dio.RunConfig.from_dict({**config.to_dict(), **overrides})
        report, code = run(config, data_paths=args.data, out_dir=args.out,
                           checkpoint=args.checkpoint, resume=args.resume,
                           config_path=args.config)
        for kind in args.plot:
            dio.emit_plot_data(report, kind, args.out)
        return code
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ValidationError, SequenceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
