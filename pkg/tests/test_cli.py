import json

import pytest

from llflow import cli
from llflow import config as cfgmod


def small_config(tmp_path, **over):
    doc = {
        "scenario": "stationary",
        "grid": {"x1_range": [-4, 4], "x2_range": [-3, 3],
                 "n1": 32, "n2": 32},
        "harmonic_map": {"coefficients": [[0.0, 0.0], [0.5, 0.0]]},
        "perturbation": None,
        "time": {"T": 0.5, "checkpoints": 4},
        "output_dir": str(tmp_path / "out"),
        "seed": 7,
    }
    doc.update(over)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return p, doc


class TestValidate:
    def test_shipped_configs_all_valid(self):
        import importlib.resources as r
        base = r.files("llflow.data").joinpath("scenarios")
        names = [e.name for e in base.iterdir() if e.name.endswith(".json")]
        assert len(names) == 7
        for name in names:
            doc = json.loads(base.joinpath(name).read_text())
            assert cfgmod.validate_config(doc) == [], name

    def test_negative_alpha_names_field(self, tmp_path):
        p, doc = small_config(tmp_path, flow={"alpha": -0.5})
        errors = cfgmod.validate_config(doc)
        assert errors and any("alpha" in e for e in errors)

    def test_zero_alpha_rejected_for_flow_scenarios(self, tmp_path):
        _, doc = small_config(tmp_path, flow={"alpha": 0.0})
        errors = cfgmod.validate_config(doc)
        assert any("alpha" in e for e in errors)

    def test_tower_ds_vs_smax(self, tmp_path):
        _, doc = small_config(tmp_path,
                              tower={"ds": 2.0, "s_max": 1.0})
        errors = cfgmod.validate_config(doc)
        assert any("ds" in e for e in errors)

    def test_unknown_key_rejected(self, tmp_path):
        _, doc = small_config(tmp_path)
        doc["unknown_knob"] = 1
        errors = cfgmod.validate_config(doc)
        assert any("unknown_knob" in e for e in errors)

    def test_coefficient_mass_rejected(self, tmp_path):
        _, doc = small_config(
            tmp_path, harmonic_map={"coefficients": [[0.6, 0], [0.5, 0]]})
        errors = cfgmod.validate_config(doc)
        assert any("coefficients" in e for e in errors)

    def test_bump_touching_boundary_rejected(self, tmp_path):
        _, doc = small_config(
            tmp_path,
            perturbation={"center": [3.8, 0.0], "radius": 1.0,
                          "amplitude": 0.1})
        errors = cfgmod.validate_config(doc)
        assert any("perturbation" in e for e in errors)

    def test_cli_validate_exit_codes(self, tmp_path):
        p, _ = small_config(tmp_path)
        assert cli.main(["validate", str(p)]) == 0
        bad, doc = small_config(tmp_path, flow={"alpha": -1.0})
        assert cli.main(["validate", str(bad)]) == 1
        assert cli.main(["validate", str(tmp_path / "missing.json")]) == 1


class TestRun:
    def test_stationary_run_and_artifacts(self, tmp_path, capsys):
        p, doc = small_config(tmp_path)
        rc = cli.main(["run", str(p)])
        assert rc == 0
        out = tmp_path / "out"
        assert (out / "energy.csv").exists()
        assert (out / "summary.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["all_pass"]
        header = (out / "energy.csv").read_text().splitlines()[0]
        assert header == "t,E1,E2,E3,tau_l2,dissipation_residual"

    def test_rerun_byte_identical(self, tmp_path):
        p, _ = small_config(tmp_path)
        assert cli.main(["run", str(p), "--output-dir",
                         str(tmp_path / "a")]) == 0
        assert cli.main(["run", str(p), "--output-dir",
                         str(tmp_path / "b")]) == 0
        for name in ("energy.csv", "summary.json"):
            fa = (tmp_path / "a" / name).read_bytes()
            fb = (tmp_path / "b" / name).read_bytes()
            # output_dir differs inside summary.json's stored config
            if name == "summary.json":
                fa = fa.replace(b'/a"', b'"').replace(b'/b"', b'"')
                fb = fb.replace(b'/a"', b'"').replace(b'/b"', b'"')
            assert fa == fb

    def test_property_failure_exit_code(self, tmp_path):
        p, _ = small_config(tmp_path,
                            thresholds={"drift": 1e-12})
        rc = cli.main(["run", str(p)])
        assert rc == 3

    def test_numerical_failure_exit_code(self, tmp_path):
        # a tower that cannot converge in the allotted s range
        doc_over = {
            "scenario": "lemma36_sametower",
            "flow": {"alpha": 1.0, "beta": 1.0},
            "perturbation": {"center": [0.0, 0.0], "radius": 1.0,
                             "amplitude": 0.2},
            "tower": {"s_max": 0.2, "ds": 0.05, "tail_tol": 1e-12},
            "time": {"T": 0.02, "checkpoints": 2},
        }
        p, _ = small_config(tmp_path, **doc_over)
        rc = cli.main(["run", str(p)])
        assert rc == 2
        failure = json.loads(
            (tmp_path / "out" / "failure.json").read_text())
        assert "not converged" in failure["error"]
        # partial artifacts from before the failure are retained
        assert (tmp_path / "out" / "energy.csv").exists()

    def test_invalid_config_exit_code(self, tmp_path):
        p, _ = small_config(tmp_path, flow={"alpha": -2.0})
        assert cli.main(["run", str(p)]) == 1

    def test_list_names_shipped(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out
        for name in ("stationary", "theorem1", "gauge_check",
                     "kernel_check"):
            assert name in out
