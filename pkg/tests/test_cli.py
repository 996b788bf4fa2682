import json
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from coherent_kernel import cli

BASE = """\
mass = 1
omega = 1
volume = 2*pi
g0_re = 0.5
t_final = 2
snapshots = 2
"""

# small, fast settings per command
EXTRA = {
    "invariant-check": ["n_levels=20", "t_final=1", "dt=2e-3"],
    "kernel-xy": ["magnetic_field=1", "t_final=1.5", "xy_half_width=4", "xy_spacing=0.5"],
    "kernel-z": ["t_final=1.5", "z_half_width=4", "z_spacing=0.1"],
    "mathieu-check": ["z_max=3", "z_points=31"],
    "evolve": ["magnetic_field=1", "t_final=1", "method=gaussian"],
    "oracle-compare": ["t_final=1", "oracle_dt=2e-4", "z_half_width=10"],
    "stability-scan": ["mass=4", "volumes=1e3,1e4", "t_star=1", "n_levels=12", "scan_dt=1e-2",
                       "scan_z_half_width=10"],
}


@pytest.fixture(scope="module")
def schema():
    text = resources.files("coherent_kernel").joinpath("schema/summary.schema.json").read_text()
    return json.loads(text)


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE)
    return path


def _run(command, config, out, extra=()):
    args = [command, "--config", str(config), "--out", str(out)]
    for item in extra:
        args += ["--set", item]
    code = cli.main(args)
    summary = json.loads((Path(out) / f"{command}.summary.json").read_text())
    return code, summary


@pytest.mark.parametrize("command", sorted(EXTRA))
def test_every_command_runs_and_validates(command, config, tmp_path, schema):
    out = tmp_path / command
    code, summary = _run(command, config, out, EXTRA[command])
    assert code == 0, summary.get("error")
    jsonschema.validate(summary, schema)
    assert summary["status"] == "ok" and summary["exit_code"] == 0
    assert summary["derived"]["S"] == pytest.approx(1.0)
    mass = 4.0 if command == "stability-scan" else 1.0
    assert summary["derived"]["q"] == pytest.approx(-1.0 / mass)
    for f in summary["outputs"]:
        assert (out / Path(f).name).exists()
    fails = [k for k, v in summary["checks"].items() if v != "pass"]
    if command != "stability-scan":
        assert not fails, fails


def test_kernel_xy_free_limit(config, tmp_path):
    code, summary = _run("kernel-xy", config, tmp_path, ["magnetic_field=0", "t_final=1",
                                                         "xy_half_width=4", "xy_spacing=0.5"])
    assert code == 0
    assert summary["checks"]["free_limit"] == "pass"
    assert summary["derived"]["omega1"] == 0.0


def test_missing_required_key_exits_2(tmp_path, schema):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mass = 1\nomega = 1\n")
    code, summary = _run("kernel-z", cfg, tmp_path)
    assert code == 2
    assert "volume" in summary["error"]["message"]
    jsonschema.validate(summary, schema)


def test_unknown_key_and_bad_value_exit_2(config, tmp_path):
    code, summary = _run("kernel-z", config, tmp_path, ["colour=blue"])
    assert code == 2 and "colour" in summary["error"]["message"]
    code, summary = _run("kernel-z", config, tmp_path, ["mass=-1"])
    assert code == 2 and summary["error"]["type"] == "ValidationError"


def test_narrow_window_exits_3(config, tmp_path, schema):
    code, summary = _run("evolve", config, tmp_path, ["z_half_width=3", "z_spacing=0.05", "t_final=1"])
    assert code == 3
    assert summary["error"]["type"] == "WindowTooSmall"
    jsonschema.validate(summary, schema)


def test_output_is_deterministic(config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _run("kernel-z", config, a, EXTRA["kernel-z"])
    _run("kernel-z", config, b, EXTRA["kernel-z"])
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_threads_flag(config, tmp_path, monkeypatch):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        monkeypatch.delenv(var, raising=False)
    code = cli.main(["mathieu-check", "--config", str(config), "--out", str(tmp_path), "--threads", "1",
                     "--set", "z_max=2", "--set", "z_points=11"])
    assert code == 0
    assert os.environ["OMP_NUM_THREADS"] == "1"
    assert cli.main(["mathieu-check", "--config", str(config), "--threads", "0"]) == 2


def test_console_script_and_log_level(config, tmp_path):
    env = dict(os.environ, COHERENT_KERNEL_LOG="debug")
    proc = subprocess.run([sys.executable, "-m", "coherent_kernel.cli", "mathieu-check", "--config", str(config),
                           "--out", str(tmp_path), "--set", "z_max=2", "--set", "z_points=11"],
                          capture_output=True, text=True, env=env, timeout=120)
    assert proc.returncode == 0, proc.stderr
    env["COHERENT_KERNEL_LOG"] = "loud"
    proc = subprocess.run([sys.executable, "-m", "coherent_kernel.cli", "mathieu-check", "--config", str(config),
                           "--out", str(tmp_path), "--set", "z_max=2", "--set", "z_points=11"],
                          capture_output=True, text=True, env=env, timeout=120)
    assert proc.returncode == 0
    assert "COHERENT_KERNEL_LOG" in proc.stderr
