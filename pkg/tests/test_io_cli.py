"""Tables, run configs, reports, and the command-line surface."""

import json

import numpy as np
import pytest
import yaml

from darkspin import cli
from darkspin import io as dio
from darkspin.coherence import deer_signal
from darkspin.defects import NsDefect, ProbeSpin
from darkspin.errors import ValidationError


class TestTables:
    def test_load_round_trip(self, tmp_path):
        path = str(tmp_path / "t.csv")
        dio.save_table(path, {"tau_s": [0.0, 1e-6, 2e-6],
                              "s0": [1.0, 0.9, 0.7]},
                       comment="echo data")
        table = dio.load_table(path)
        assert table.row_count == 3
        assert np.array_equal(table["tau_s"], [0.0, 1e-6, 2e-6])
        assert np.array_equal(table["s0"], [1.0, 0.9, 0.7])

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# comment\n\ntau_s,s0\n0.0,1.0\n# mid comment\n"
                        "1e-6,0.5\n")
        table = dio.load_table(str(path))
        assert table.row_count == 2

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("tau_s,s0\n0.0,1.0\n1e-6\n")
        with pytest.raises(ValidationError, match=r":3:"):
            dio.load_table(str(path))

    def test_non_numeric_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("tau_s,s0\n0.0,oops\n")
        with pytest.raises(ValidationError, match=r":2:"):
            dio.load_table(str(path))

    def test_empty_table(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# nothing here\n")
        with pytest.raises(ValidationError, match="no data rows"):
            dio.load_table(str(path))

    def test_missing_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("tau_s,s0\n0.0,1.0\n")
        table = dio.load_table(str(path))
        with pytest.raises(ValidationError, match="tau_s"):
            table["power_w"]


class TestRunConfig:
    DOC = {"experiment": "extract_noise", "seed": 3, "threads": 2,
           "parameters": {"gamma_sq": 100.0, "gamma_dq": 40.0}}

    def test_round_trip_identity(self, tmp_path):
        cfg = dio.RunConfig.from_dict(self.DOC)
        path = str(tmp_path / "cfg.yaml")
        dio.save_config(path, cfg)
        again = dio.load_config(path)
        assert again == cfg
        # serialize -> parse -> serialize is byte-stable
        path2 = str(tmp_path / "cfg2.yaml")
        dio.save_config(path2, again)
        assert open(path).read() == open(path2).read()

    def test_unknown_experiment(self):
        with pytest.raises(ValidationError, match="unknown experiment"):
            dio.RunConfig.from_dict({**self.DOC, "experiment": "nope"})

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="unknown config keys"):
            dio.RunConfig.from_dict({**self.DOC, "typo_key": 1})

    def test_missing_required_parameters(self):
        with pytest.raises(ValidationError, match="missing parameters"):
            dio.RunConfig.from_dict({"experiment": "simulate_deer",
                                     "parameters": {"eta": 0.375}})

    def test_bad_schema_version(self):
        with pytest.raises(ValidationError, match="schema_version"):
            dio.RunConfig.from_dict({**self.DOC, "schema_version": 99})


class TestPlotData:
    REPORT = {"curves": {"deer": {"tau_s": [0.0, 1e-6], "s0": [1.0, 0.8]}}}

    def test_emit(self, tmp_path):
        path = dio.emit_plot_data(self.REPORT, "deer", str(tmp_path))
        table = dio.load_table(path)
        assert np.array_equal(table["s0"], [1.0, 0.8])

    def test_unknown_kind_lists_options(self):
        with pytest.raises(ValidationError, match="odmr"):
            dio.emit_plot_data(self.REPORT, "mystery", ".")

    def test_kind_absent_from_report(self):
        with pytest.raises(ValidationError, match="no 'odmr' curves"):
            dio.emit_plot_data(self.REPORT, "odmr", ".")


def _write_yaml(path, doc):
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh)
    return str(path)


DEER_DOC = {
    "experiment": "simulate_deer",
    "seed": 1,
    "parameters": {
        "eta": 0.375,
        "probe": {"gamma_bg": 2e4, "stretch_n": 1.0},
        "defects": [{"rho": 0.474, "a_hz": 158.6e3, "polarization": 0.5},
                    {"rho": 0.302, "a_hz": -125e3}],
        "tau": {"start": 0.0, "stop": 10e-6, "points": 101},
    },
}


class TestCli:
    def test_simulate_deer_matches_library(self, tmp_path):
        cfg = _write_yaml(tmp_path / "cfg.yaml", DEER_DOC)
        out = tmp_path / "out"
        assert cli.main(["simulate-deer", "--config", cfg,
                         "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        tau = np.linspace(0.0, 10e-6, 101)
        probe = ProbeSpin(gamma_bg=2e4, stretch_n=1.0)
        defects = [(NsDefect(rho=0.474, a_dipolar=158.6e3), 0.5),
                   (NsDefect(rho=0.302, a_dipolar=-125e3), 0.0)]
        sig = deer_signal(tau, probe, 0.375, defects)
        assert report["curves"]["deer"]["s0_model"] == sig.real.tolist()
        assert report["curves"]["deer"]["s_pi2_model"] == sig.imag.tolist()
        assert report["outputs"]["probe_point_s"] == pytest.approx(
            tau[int(np.argmax(np.abs(sig.imag)))])

    def test_reports_reproducible(self, tmp_path):
        cfg = _write_yaml(tmp_path / "cfg.yaml", DEER_DOC)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cli.main(["simulate-deer", "--config", cfg, "--out", str(out1)])
        cli.main(["simulate-deer", "--config", cfg, "--out", str(out2)])
        assert (out1 / "report.json").read_bytes() \
            == (out2 / "report.json").read_bytes()

    def test_plot_emission(self, tmp_path):
        cfg = _write_yaml(tmp_path / "cfg.yaml", DEER_DOC)
        out = tmp_path / "out"
        assert cli.main(["simulate-deer", "--config", cfg, "--out", str(out),
                         "--plot", "deer"]) == 0
        assert (out / "deer.csv").exists()

    def test_invalid_parameter_exits_2_without_output(self, tmp_path):
        doc = json.loads(json.dumps(DEER_DOC))
        doc["parameters"]["defects"][0]["rho"] = 1.2
        cfg = _write_yaml(tmp_path / "cfg.yaml", doc)
        out = tmp_path / "out"
        assert cli.main(["simulate-deer", "--config", cfg,
                         "--out", str(out)]) == 2
        assert not (out / "report.json").exists()

    def test_experiment_mismatch_exits_2(self, tmp_path):
        cfg = _write_yaml(tmp_path / "cfg.yaml", DEER_DOC)
        assert cli.main(["extract-noise", "--config", cfg]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert cli.main(["simulate-deer", "--config",
                         str(tmp_path / "nope.yaml")]) == 2

    def test_extract_noise(self, tmp_path):
        doc = {"experiment": "extract_noise",
               "parameters": {"gamma_sq": 100.0, "gamma_dq": 40.0}}
        cfg = _write_yaml(tmp_path / "cfg.yaml", doc)
        out = tmp_path / "out"
        assert cli.main(["extract-noise", "--config", cfg,
                         "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["outputs"]["gamma_mag"] == pytest.approx(20.0)
        assert report["outputs"]["gamma_elec"] == pytest.approx(80.0)

    def test_fit_charge_relaxation(self, tmp_path):
        t = np.linspace(0.0, 2e-3, 50)
        rho = 0.360 + 0.103 * np.exp(-t / 410e-6)
        data = str(tmp_path / "relax.csv")
        dio.save_table(data, {"t_s": t, "rho_bar": rho})
        doc = {"experiment": "fit_charge_relaxation", "parameters": {}}
        cfg = _write_yaml(tmp_path / "cfg.yaml", doc)
        out = tmp_path / "out"
        assert cli.main(["fit-charge-relaxation", "--config", cfg,
                         "--data", data, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["outputs"]["t_c_s"] == pytest.approx(410e-6, rel=1e-6)
        assert report["outputs"]["rho_steady"] == pytest.approx(0.360,
                                                                abs=1e-6)

    def test_fit_charge_relaxation_constant_data_exits_3(self, tmp_path):
        data = str(tmp_path / "relax.csv")
        dio.save_table(data, {"t_s": np.linspace(0, 1e-3, 10),
                              "rho_bar": np.full(10, 0.4)})
        cfg = _write_yaml(tmp_path / "cfg.yaml",
                          {"experiment": "fit_charge_relaxation",
                           "parameters": {}})
        assert cli.main(["fit-charge-relaxation", "--config", cfg,
                         "--data", data, "--out", str(tmp_path / "o")]) == 3

    def test_threads_env_override(self, tmp_path, monkeypatch):
        cfg = _write_yaml(tmp_path / "cfg.yaml", DEER_DOC)
        out = tmp_path / "out"
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "3")
        cli.main(["simulate-deer", "--config", cfg, "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        assert report["threads"] == 3

    def test_seed_override(self, tmp_path):
        cfg = _write_yaml(tmp_path / "cfg.yaml", DEER_DOC)
        out = tmp_path / "out"
        cli.main(["simulate-deer", "--config", cfg, "--out", str(out),
                  "--seed", "42"])
        report = json.loads((out / "report.json").read_text())
        assert report["seed"] == 42

    def test_reconstruct_resume_checkpoint_mismatch(self, tmp_path):
        tau = np.linspace(0.0, 30e-6, 40)
        probe = ProbeSpin(gamma_bg=2e4)
        sig = deer_signal(tau, probe, 0.375,
                          [NsDefect(rho=0.474, a_dipolar=158.6e3)]).real
        data = str(tmp_path / "deer.csv")
        dio.save_table(data, {"tau_s": tau, "s0": sig})
        doc = {"experiment": "reconstruct", "seed": 0,
               "parameters": {"budget": 64, "etas": [0.375], "top_k": 3,
                              "slab": {"thickness_nm": 1.0,
                                       "coupling_cutoff_hz": 1e4}}}
        cfg = _write_yaml(tmp_path / "cfg.yaml", doc)
        ck = str(tmp_path / "ck.json")
        assert cli.main(["reconstruct", "--config", cfg, "--data", data,
                         "--out", str(tmp_path / "o1"),
                         "--checkpoint", ck]) == 0
        # different seed invalidates the checkpoint
        assert cli.main(["reconstruct", "--config", cfg, "--data", data,
                         "--out", str(tmp_path / "o2"), "--seed", "9",
                         "--checkpoint", ck, "--resume"]) == 4
        # matching resume reproduces the original ranking
        assert cli.main(["reconstruct", "--config", cfg, "--data", data,
                         "--out", str(tmp_path / "o3"),
                         "--checkpoint", ck, "--resume"]) == 0
        r1 = json.loads((tmp_path / "o1" / "report.json").read_text())
        r3 = json.loads((tmp_path / "o3" / "report.json").read_text())
        assert r1["outputs"]["ranking"] == r3["outputs"]["ranking"]
