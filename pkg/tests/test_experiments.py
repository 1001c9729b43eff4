"""Config validation, experiment runners, manifests, and the CLI."""

import json

import numpy as np
import pytest

import zenosim.experiments as experiments
from zenosim import __version__
from zenosim.cli import main
from zenosim.experiments import run_experiment, validate_config
from zenosim.lindblad import PositivityViolation


def _ramsey_cfg(**over):
    cfg = {
        "experiment": "ramsey-scaling",
        "parameters": {"noise": "zeno", "C": 1.0, "T": 100.0,
                       "n_values": [2, 4, 8, 16]},
        "seed": 7,
    }
    cfg.update(over)
    return cfg


def _ladder_cfg():
    return {
        "experiment": "ladder-check",
        "parameters": {"omega": 1.0, "n_fock": 30, "g_list": [0.3, 0.6]},
    }


def _bath_cfg():
    return {
        "experiment": "bath-sim",
        "parameters": {"shape": "flat", "alpha": 0.2, "omega0": 1.0, "nc": 4,
                       "t_max": 5.0, "n_steps": 128, "n_traj": 120,
                       "corr_draws": 200, "tau_max": 5.0, "n_tau": 11},
    }


# --------------------------------------------------------------------------
# validation


def test_validate_accepts_known_good_configs():
    for cfg in (_ramsey_cfg(), _ladder_cfg(), _bath_cfg()):
        errors, _ = validate_config(cfg)
        assert errors == []


def test_validate_rejects_non_dict_and_unknown_experiment():
    errors, _ = validate_config([1, 2])
    assert errors
    errors, _ = validate_config({"experiment": "frobnicate", "parameters": {}})
    assert any("experiment" in e for e in errors)


def test_validate_rejects_unknown_keys():
    cfg = _ramsey_cfg()
    cfg["parameters"]["typo_key"] = 1
    errors, _ = validate_config(cfg)
    assert any("typo_key" in e for e in errors)
    cfg = _ramsey_cfg(extra_top=True)
    errors, _ = validate_config(cfg)
    assert errors


def test_validate_ramsey_noise_semantics():
    cfg = _ramsey_cfg()
    cfg["parameters"] = {"noise": "noiseless", "T": 10.0, "n_values": [2, 4]}
    errors, _ = validate_config(cfg)
    assert any("t_fixed" in e for e in errors)

    cfg["parameters"] = {"noise": "noiseless", "T": 10.0, "t_fixed": 1.0,
                         "C": 1.0, "n_values": [2, 4]}
    errors, _ = validate_config(cfg)
    assert any("not meaningful" in e for e in errors)

    cfg["parameters"] = {"noise": "markov", "T": 10.0, "n_values": [2, 4]}
    errors, _ = validate_config(cfg)
    assert any("required for markov" in e for e in errors)

    cfg["parameters"] = {"noise": "markov", "C": 1.0, "T": 10.0,
                         "t_fixed": 20.0, "n_values": [2, 4]}
    errors, _ = validate_config(cfg)
    assert any("exceed" in e for e in errors)


def test_validate_criticality_semantics():
    cfg = {
        "experiment": "criticality-qfi",
        "parameters": {"omega": 1.0, "n_fock": 12, "g_list": [0.5],
                       "kappa1": 0.3, "t_max": 5.0, "dt_out": 5.0},
    }
    errors, _ = validate_config(cfg)
    assert any("dt_out" in e for e in errors)

    cfg["parameters"].update({"dt_out": 0.2, "fd_step": 0.6})
    errors, _ = validate_config(cfg)
    assert any("g + h" in e for e in errors)

    cfg["parameters"].update({"fd_step": 1e-6, "g_list": [0.97], "n_fock": 40,
                              "kappa1": 0.05})
    errors, warnings = validate_config(cfg)
    assert errors == []
    assert any("under-truncated" in w for w in warnings)


def test_validate_thermal_semantics():
    cfg = {
        "experiment": "thermal-qfi",
        "parameters": {"omega": 1.0, "n_fock": 20, "g": 0.5, "kappa1": 0.4,
                       "nbar_list": [0.0, 0.5], "t_max": 8.0, "dt_out": 0.2},
    }
    errors, warnings = validate_config(cfg)
    assert errors == []
    assert any("fewer than three" in w for w in warnings)


def test_validate_bath_semantics():
    cfg = _bath_cfg()
    cfg["parameters"]["n_steps"] = 10  # dt = 0.5 vs limit (2pi/4)/20
    errors, _ = validate_config(cfg)
    assert any("n_steps" in e for e in errors)

    cfg = _bath_cfg()
    cfg["parameters"]["alpha"] = 1.5  # z_1 = 4*1.5 = 6, far past Gaussian
    errors, warnings = validate_config(cfg)
    assert errors == []
    assert any("Gaussian" in w for w in warnings)


# --------------------------------------------------------------------------
# runners and manifests


def test_ramsey_run_outputs_and_manifest(tmp_path):
    written, manifest = run_experiment(_ramsey_cfg(), tmp_path, seed=7, workers=1)
    names = {p.name for p in written}
    assert names == {"ramsey_scaling.csv", "manifest.json"}
    assert manifest["experiment"] == "ramsey-scaling"
    assert manifest["version"] == __version__
    assert manifest["seed"] == 7
    assert manifest["summary"]["slope"] == pytest.approx(0.25, abs=1e-9)

    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["outputs"] == manifest["outputs"]

    header, first = (tmp_path / "ramsey_scaling.csv").read_text().splitlines()[:2]
    assert header == "n,t_opt_product,err_opt_product,t_opt_ghz,err_opt_ghz,ratio"
    cells = first.split(",")
    assert cells[0] == "2"
    # full-precision float cells survive a parse round-trip
    assert repr(float(cells[2])) == cells[2]


def test_reruns_are_byte_identical(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    run_experiment(_bath_cfg(), d1, seed=5, workers=1)
    run_experiment(_bath_cfg(), d2, seed=5, workers=2)
    for name in ("bath_coherence.csv", "bath_correlation.csv", "bath_psd.csv"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_bath_run_summary(tmp_path):
    _, manifest = run_experiment(_bath_cfg(), tmp_path, seed=5, workers=1)
    s = manifest["summary"]
    assert s["corr_within_3se"] >= 0.9
    assert s["max_coherence_dev"] < 0.05
    rows = (tmp_path / "bath_coherence.csv").read_text().splitlines()
    assert len(rows) == 1 + 128 + 1  # header + n_steps + 1 grid points


def test_ladder_run_values(tmp_path):
    _, manifest = run_experiment(_ladder_cfg(), tmp_path, seed=0, workers=1)
    rows = (tmp_path / "ladder_check.csv").read_text().splitlines()[1:]
    for row in rows:
        g, gap, gap_expected, resid = (float(v) for v in row.split(","))
        assert gap == pytest.approx(2.0 * np.sqrt(1 - g * g), rel=1e-9)
        assert resid < 1e-8
    assert manifest["summary"]["max_residual"] < 1e-8


def test_thermal_run_structure(tmp_path):
    cfg = {
        "experiment": "thermal-qfi",
        "parameters": {"omega": 1.0, "n_fock": 20, "g": 0.5, "kappa1": 0.4,
                       "nbar_list": [0.3, 0.6, 1.0], "t_max": 8.0,
                       "dt_out": 0.2},
    }
    _, manifest = run_experiment(cfg, tmp_path, seed=0, workers=1)
    summary_rows = (tmp_path / "thermal_summary.csv").read_text().splitlines()[1:]
    assert len(summary_rows) == 3
    f_max = {}
    for row in summary_rows:
        nbar, t_eff, fm, t_peak = (float(v) for v in row.split(","))
        f_max[nbar] = fm
        assert t_eff > 0 and fm > 0 and 0 < t_peak <= 8.0

    curve_rows = (tmp_path / "thermal_curves.csv").read_text().splitlines()[1:]
    assert len(curve_rows) == 3 * 41
    peaks = [r for r in curve_rows if r.split(",")[3] == "1"]
    assert len(peaks) == 3
    for row in peaks:
        nbar, _, f, _ = row.split(",")
        assert float(f) == pytest.approx(f_max[float(nbar)], rel=1e-12)
    assert np.isfinite(manifest["summary"]["fit_nbar_exponent"])
    assert np.isfinite(manifest["summary"]["audit_shift"])


def test_failed_run_removes_partial_output(tmp_path, monkeypatch):
    def exploding_runner(p, seed, workers, out):
        out.csv("partial.csv", ["x"], [(1.0,)])
        raise PositivityViolation("synthetic failure")

    monkeypatch.setitem(experiments._RUNNERS, "ladder-check", exploding_runner)
    with pytest.raises(PositivityViolation):
        run_experiment(_ladder_cfg(), tmp_path, seed=0, workers=1)
    assert list(tmp_path.iterdir()) == []


# --------------------------------------------------------------------------
# CLI


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("ramsey-scaling", "criticality-qfi", "thermal-qfi",
                 "bath-sim", "ladder-check"):
        assert name in out


def test_cli_validate_ok_and_bad(tmp_path, capsys):
    good = _write_cfg(tmp_path, _ladder_cfg(), "good.json")
    assert main(["validate", good]) == 0
    assert "OK" in capsys.readouterr().out

    bad_cfg = _ladder_cfg()
    bad_cfg["parameters"]["n_fock"] = 1
    bad = _write_cfg(tmp_path, bad_cfg, "bad.json")
    assert main(["validate", bad]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_missing_and_malformed_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 2
    assert "not found" in capsys.readouterr().err
    mangled = tmp_path / "mangled.json"
    mangled.write_text("{not json")
    assert main(["run", str(mangled)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_cli_run_seed_and_output_dir_precedence(tmp_path):
    cfg = _ladder_cfg()
    cfg["seed"] = 9
    cfg["output_dir"] = str(tmp_path / "from_config")
    path = _write_cfg(tmp_path, cfg)
    assert main(["run", path]) == 0
    manifest = json.loads((tmp_path / "from_config" / "manifest.json").read_text())
    assert manifest["seed"] == 9

    override = tmp_path / "from_flag"
    assert main(["run", path, "--seed", "13", "--output-dir", str(override)]) == 0
    manifest = json.loads((override / "manifest.json").read_text())
    assert manifest["seed"] == 13


def test_cli_worker_resolution(tmp_path, monkeypatch):
    cfg_path = _write_cfg(tmp_path, _ladder_cfg())
    out = tmp_path / "o1"
    monkeypatch.setenv("ZENOSIM_WORKERS", "3")
    assert main(["run", cfg_path, "--output-dir", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["workers"] == 3

    monkeypatch.setenv("ZENOSIM_WORKERS", "many")
    assert main(["run", cfg_path, "--output-dir", str(tmp_path / "o2")]) == 2

    monkeypatch.delenv("ZENOSIM_WORKERS")
    assert main(["run", cfg_path, "--output-dir", str(tmp_path / "o3"),
                 "--workers", "0"]) == 2


def test_cli_bad_seed(tmp_path, capsys):
    cfg = _ladder_cfg()
    cfg["seed"] = 2**64  # rejected by the schema before running
    path = _write_cfg(tmp_path, cfg)
    assert main(["run", path]) == 2
    assert "seed" in capsys.readouterr().err


def test_cli_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def exploding_runner(p, seed, workers, out):
        raise PositivityViolation("density matrix went negative")

    monkeypatch.setitem(experiments._RUNNERS, "ladder-check", exploding_runner)
    path = _write_cfg(tmp_path, _ladder_cfg())
    assert main(["run", path, "--output-dir", str(tmp_path / "out")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_run_prints_written_files(tmp_path, capsys):
    path = _write_cfg(tmp_path, _ladder_cfg())
    out = tmp_path / "printed"
    assert main(["run", path, "--output-dir", str(out)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert str(out / "ladder_check.csv") in printed
    assert str(out / "manifest.json") in printed
