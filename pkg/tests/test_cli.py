import json
import subprocess
import sys

import pytest

from pdcsim.cli import LOCK_NAME, main
from pdcsim.config import PRESETS, SCHEMA, config_hash, load_config
from pdcsim.errors import ConfigError


def run(*args):
    return main(list(args))


@pytest.mark.parametrize("name", PRESETS)
def test_presets_parse(name):
    cfg = load_config(name)
    assert set(cfg) == set(SCHEMA)


def test_unknown_key_rejected_with_name(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[source]\npump_fwhm_mn = 2.0\n")
    assert run("jsa", "--config", str(ini), "--out", str(tmp_path / "o")) == 2
    assert "source.pump_fwhm_mn" in capsys.readouterr().err
    assert run("jsa", "--set", "grid.points=3", "--out", str(tmp_path / "o")) == 2
    assert "grid.points" in capsys.readouterr().err
    assert run("jsa", "--set", "bogus.key=3", "--out", str(tmp_path / "o")) == 2


def test_bad_value_names_key():
    with pytest.raises(ConfigError) as exc:
        load_config(None, ["source.length_mm=long"])
    assert exc.value.key == "source.length_mm"
    with pytest.raises(ConfigError):
        load_config(None, ["source.pump_shape=square"])


def test_validation_error_exit_code(tmp_path, capsys):
    assert run("jsa", "--set", "source.length_mm=-1", "--out", str(tmp_path)) == 2
    assert "length" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path):
    code = run("jsa", "--set", "source.pump_center_nm=600", "--set", "source.pump_fwhm_nm=0.5", "--out", str(tmp_path))
    assert code == 3
    manifest = json.loads((tmp_path / "manifest_jsa.json").read_text())
    assert manifest["exit_code"] == 3


def test_budget_prints_intrinsic_efficiencies(tmp_path, capsys):
    assert run("budget", "--config", "fig4-brightness", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "0.559" in out and "0.407" in out
    data = json.loads((tmp_path / "budget.json").read_text())
    assert data["tof_resolution_nm"] == pytest.approx(0.2333, abs=1e-4)


def test_jsa_star_point(tmp_path, capsys):
    assert run("jsa", "--config", "star-point.default", "--out", str(tmp_path)) == 0
    report = json.loads((tmp_path / "schmidt.json").read_text())
    assert report["K"] == pytest.approx(1.087, abs=0.05)
    for name in ("jsa.csv", "jsa.json", "marginal_signal.csv", "marginal_idler.csv", "schmidt.json"):
        assert (tmp_path / name).exists()
    assert not (tmp_path / LOCK_NAME).exists()


def test_manifest_contents_and_replay(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("shaper-mask", "--config", "fig3", "--set", "source.hg_order=2",
               "--set", "source.pump_shape=hermite_gauss", "--out", str(a)) == 0
    manifest = json.loads((a / "manifest_shaper-mask.json").read_text())
    for key in ("config_hash", "seed", "version", "timestamp", "config"):
        assert key in manifest
    assert manifest["config_hash"] == config_hash(load_config(a / "manifest_shaper-mask.json"))
    assert run("shaper-mask", "--config", str(a / "manifest_shaper-mask.json"), "--out", str(b)) == 0
    assert (a / "shaper_mask.csv").read_bytes() == (b / "shaper_mask.csv").read_bytes()


@pytest.mark.parametrize("command,preset", [("jsa", "fig3"), ("g2-mc", "fig7"), ("jsi-sim", "fig6"),
                                            ("pm-curve", "fig2a"), ("calibrate", "star-point.default")])
def test_byte_identical_reruns(tmp_path, command, preset):
    extra = ["--set", "measurement.mc_pulses=20000"] if command == "g2-mc" else []
    outputs = []
    for d in ("one", "two"):
        assert run(command, "--config", preset, *extra, "--out", str(tmp_path / d)) == 0
        outputs.append(sorted(p for p in (tmp_path / d).iterdir() if not p.name.startswith("manifest")))
    assert [p.name for p in outputs[0]] == [p.name for p in outputs[1]]
    for x, y in zip(*outputs):
        assert x.read_bytes() == y.read_bytes(), x.name


def test_calibration_file_round_trip(tmp_path):
    assert run("calibrate", "--out", str(tmp_path / "cal")) == 0
    cal = tmp_path / "cal" / "calibration.json"
    assert run("jsa", "--set", f"dispersion.corrections_file={cal}", "--out", str(tmp_path / "a")) == 0
    assert run("jsa", "--out", str(tmp_path / "b")) == 0
    ka = json.loads((tmp_path / "a" / "schmidt.json").read_text())["K"]
    kb = json.loads((tmp_path / "b" / "schmidt.json").read_text())["K"]
    assert ka == pytest.approx(kb, rel=1e-9)


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PDCSIM_OUT", str(tmp_path / "env"))
    assert run("budget") == 0
    assert (tmp_path / "env" / "budget.json").exists()


def test_lockfile_blocks_concurrent_runs(tmp_path):
    tmp_path.mkdir(exist_ok=True)
    (tmp_path / LOCK_NAME).write_text("1")
    assert run("budget", "--out", str(tmp_path)) == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pdcsim.cli", "budget", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "0.559" in proc.stdout
