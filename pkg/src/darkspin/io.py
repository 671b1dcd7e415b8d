"""Measurement tables, run configuration, and report documents."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ValidationError

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "simulate_deer", "simulate_odmr", "simulate_pump_probe",
    "simulate_charge", "fit_deer", "reconstruct", "fit_saturation",
    "fit_charge_relaxation", "extract_noise",
)

# Keys that must be present in `parameters` for each experiment, checked
# before any compute happens.
REQUIRED_PARAMETERS = {
    "simulate_deer": ("defects", "probe", "eta", "tau"),
    "simulate_odmr": ("defects", "linewidth_hz", "freq"),
    "simulate_pump_probe": ("defects", "probe", "eta", "omega_hz",
                            "tau_p_s", "tau_sl"),
    "simulate_charge": ("rates", "power_w", "initial", "times"),
    "fit_deer": ("couplings_hz", "etas"),
    "reconstruct": ("budget", "etas"),
    "fit_saturation": (),
    "fit_charge_relaxation": (),
    "extract_noise": ("gamma_sq", "gamma_dq"),
}


@dataclass(frozen=True)
class MeasurementTable:
    columns: dict
    row_count: int

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise ValidationError(f"table has no column {name!r}; "
                                  f"available: {sorted(self.columns)}")
        return self.columns[name]


def load_table(path: str) -> MeasurementTable:
    """Read a delimited-text table (comma-separated, '#' comments, header).

    All values are SI in-file.  Errors name the offending line number.
    """
    header = None
    data: list = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise ValidationError(
                    f"{path}:{lineno}: row has {len(cells)} cells, "
                    f"expected {len(header)}")
            try:
                data.append([float(c) for c in cells])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if header is None or not data:
        raise ValidationError(f"{path}: no data rows")
    arr = np.asarray(data, dtype=float)
    return MeasurementTable(
        columns={name: arr[:, j] for j, name in enumerate(header)},
        row_count=arr.shape[0])


def save_table(path: str, columns: dict, comment: str | None = None):
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    parameters: dict
    seed: int = 0
    threads: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported schema_version {self.schema_version}")
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(
                f"unknown experiment {self.experiment!r}; "
                f"choose from {EXPERIMENTS}")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        missing = [k for k in REQUIRED_PARAMETERS[self.experiment]
                   if k not in self.parameters]
        if missing:
            raise ValidationError(
                f"experiment {self.experiment!r} missing parameters: {missing}")

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version,
                "experiment": self.experiment,
                "seed": self.seed,
                "threads": self.threads,
                "parameters": self.parameters}

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ValidationError("config document must be a mapping")
        unknown = set(doc) - {"schema_version", "experiment", "seed",
                              "threads", "parameters"}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(
            experiment=doc.get("experiment", ""),
            parameters=doc.get("parameters", {}) or {},
            seed=int(doc.get("seed", 0)),
            threads=int(doc.get("threads", 1)),
            schema_version=int(doc.get("schema_version", SCHEMA_VERSION)))


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    return RunConfig.from_dict(doc)


def save_config(path: str, config: RunConfig):
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def sha256_doc(doc) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=str).encode()).hexdigest()


def write_report(out_dir: str, report: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


# Plot-data emission: one delimited file per figure panel.
PLOT_KINDS = {
    "deer": "DEER coherence vs delay",
    "odmr": "ODMR spectrum",
    "pump_probe": "polarization transfer vs spin-lock time",
    "charge": "charge/spin populations vs time",
    "saturation": "ionization rate vs power",
    "charge_relaxation": "average neutral population vs dark time",
}


def emit_plot_data(report: dict, kind: str, out_dir: str) -> str:
    """Write the curves for `kind` from a report as a CSV; returns path."""
    if kind not in PLOT_KINDS:
        raise ValidationError(
            f"unknown plot kind {kind!r}; options: {sorted(PLOT_KINDS)}")
    curves = report.get("curves", {})
    if kind not in curves:
        raise ValidationError(
            f"report has no {kind!r} curves; available: {sorted(curves)}")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{kind}.csv")
    save_table(path, curves[kind], comment=PLOT_KINDS[kind])
    return path
