import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tripodmem.errors import ConfigError
from tripodmem import scenario as sc


def test_bundled_presets_enumerate():
    assert sc.list_presets() == [
        "beamsplitter",
        "fig2_dual_storage",
        "fig3_conversion",
        "fig4_lambda_highOD",
        "supp1_crosstalk",
        "supp3_interference",
        "supp4_lowphoton",
    ]


def test_dual_storage_preset_fields():
    s = sc.load_preset("fig2_dual_storage")
    assert s.probe_channels() == [1, 2]
    assert s.get("probe.1", "mask") == "digit_two"
    assert s.get("probe.2", "mask") == "bar_target"
    assert s.get("probe.2", "tilt_beta_deg") == 0.1
    assert s.get("control", "alpha_deg") == 2.5
    assert s.get("control", "dark_time_us") == 6.7
    assert s.get("control", "read_leg") == "R_795"


def test_unknown_key_rejected(tmp_path):
    s = sc.load_preset("fig4_lambda_highOD")
    path = tmp_path / "bad.ini"
    sc.write_config(s, path)
    path.write_text(path.read_text().replace("dark_time_us", "darktime"))
    with pytest.raises(ConfigError, match="darktime"):
        sc.load_config(path)


def test_invalid_value_reports_key_path(tmp_path):
    s = sc.load_preset("fig4_lambda_highOD")
    path = tmp_path / "bad.ini"
    sc.write_config(s.with_value("model", "gamma_s_khz", -1.0), path)
    with pytest.raises(ConfigError, match=r"\[model\]"):
        sc.load_config(path)


def test_non_numeric_value_rejected(tmp_path):
    s = sc.load_preset("fig4_lambda_highOD")
    path = tmp_path / "bad.ini"
    sc.write_config(s, path)
    path.write_text(path.read_text().replace("od_ch1 = 300.0", "od_ch1 = tall"))
    with pytest.raises(ConfigError, match="od_ch1"):
        sc.load_config(path)


def test_every_preset_round_trips(tmp_path):
    for name in sc.list_presets():
        s = sc.load_preset(name)
        path = tmp_path / f"{name}.ini"
        sc.write_config(s, path)
        again = sc.load_config(path)
        assert again.sections == s.sections, name
        assert again.name == s.name


def test_null_probe_scenario(tmp_path):
    s = sc.load_preset("beamsplitter").with_value("probe.1", "photons", 0.0)
    metrics = sc.run_scenario(s, out_dir=tmp_path)
    assert metrics["eta_ch1"] == 0.0
    assert metrics["camera_total_counts"] == 0.0
    with open(tmp_path / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t_s", "P_ch1_out_W", "P_ch2_out_W"]
    powers = np.array([[float(r[1]), float(r[2])] for r in rows[1:]])
    assert np.all(powers == 0.0)


def test_run_writes_expected_artifacts(tmp_path):
    s = sc.load_preset("beamsplitter")
    metrics = sc.run_scenario(s, out_dir=tmp_path)
    for name in ("trace.csv", "metrics.json", "leak_ch1.pgm", "retrieved_ch1.pgm", "camera_ch1.pgm"):
        assert (tmp_path / name).is_file(), name
    on_disk = json.loads((tmp_path / "metrics.json").read_text())
    assert on_disk["eta_ch1"] == metrics["eta_ch1"]
    assert set(sc.METRIC_KEYS) <= set(on_disk)
    # crosstalk sentinel: single driven channel with exactly zero cross energy
    assert on_disk["crosstalk_db"] is None


def test_run_is_deterministic(tmp_path):
    s = sc.load_preset("beamsplitter")
    sc.run_scenario(s, out_dir=tmp_path / "a", seed=9)
    sc.run_scenario(s, out_dir=tmp_path / "b", seed=9)
    for name in ("trace.csv", "metrics.json", "camera_ch1.pgm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_empty_and_single_point(tmp_path):
    s = sc.load_preset("beamsplitter")
    path = sc.sweep(s, "control.alpha_deg", [], out_dir=tmp_path / "empty")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 and rows[0][0] == "control.alpha_deg"

    path = sc.sweep(s, "control.alpha_deg", [1.0], out_dir=tmp_path / "one")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    direct = sc.run_scenario(
        s.with_value("control", "alpha_deg", 1.0), out_dir=tmp_path / "direct"
    )
    # sweep.csv keeps 10 significant digits
    assert float(rows[1][1]) == pytest.approx(direct["eta_ch1"], rel=1e-9)


def test_sweep_unknown_param_rejected():
    s = sc.load_preset("beamsplitter")
    with pytest.raises(ConfigError, match="unknown sweep parameter"):
        sc.sweep(s, "control.bogus", [1.0])
    with pytest.raises(ConfigError, match="not numeric"):
        sc.sweep(s, "control.read_leg", [1.0])


def test_oracles_pass():
    for name in ("beer_lambert", "eit_delay", "gaussian_waist", "sinc_mismatch", "poisson_camera"):
        passed, lines = sc.oracle(name)
        assert passed, lines
    with pytest.raises(ConfigError, match="unknown oracle"):
        sc.oracle("flat_earth")


def cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "tripodmem.cli", *args],
        capture_output=True, text=True,
    )


def test_cli_validate_and_presets():
    out = cli("presets", "--list")
    assert out.returncode == 0
    assert "fig4_lambda_highOD" in out.stdout
    assert cli("validate", "fig4_lambda_highOD").returncode == 0


def test_cli_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\ndarktime = 1\n")
    out = cli("validate", str(bad))
    assert out.returncode == 2
    payload = json.loads(out.stderr.strip())
    assert payload["error"] == "config"


def test_cli_run_and_seed(tmp_path):
    out = cli("run", "beamsplitter", "--out", str(tmp_path / "run"), "--seed", "4")
    assert out.returncode == 0
    metrics = json.loads(out.stdout)
    assert metrics["eta_ch1"] > 0


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(sc.OUTPUT_DIR_ENV, str(tmp_path))
    s = sc.load_preset("beamsplitter")
    sc.run_scenario(s)
    assert (tmp_path / "beamsplitter" / "metrics.json").is_file()
