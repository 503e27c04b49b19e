import json
import os
import re
import subprocess

import pytest

import pcmm

CLI = os.environ.get("PCMM_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="PCMM_CLI not set")


def run(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=120)


def parse_lines(text):
    out = {}
    for line in text.splitlines():
        if " = " in line:
            key, value = line.split(" = ", 1)
            out[key.strip()] = value.strip()
    return out


@pytest.fixture
def cloud_file(tmp_path, plane_cloud):
    path = tmp_path / "plane.xyz"
    pcmm.write_cloud(str(path), plane_cloud)
    return path


def test_fit_resample_eval_info(tmp_path, cloud_file):
    model = tmp_path / "plane.pcmm"
    stats = tmp_path / "stats.json"
    r = run("fit", cloud_file, "-o", model, "--stats", stats)
    assert r.returncode == 0, r.stderr
    assert json.loads(stats.read_text())["primitives"]["planes"] == 1

    out = tmp_path / "out.ply"
    r = run("resample", model, "-o", out)
    assert r.returncode == 0, r.stderr
    assert int(parse_lines(r.stdout)["generated_points"]) == len(pcmm.read_cloud(str(out)))

    report = tmp_path / "report.json"
    r = run("eval", model, cloud_file, "--json", report)
    assert r.returncode == 0, r.stderr
    assert json.loads(report.read_text())["planes"] == 1

    r = run("info", model)
    assert r.returncode == 0, r.stderr
    info = parse_lines(r.stdout)
    assert info["planes"] == "1"
    assert info["format"].startswith("PCMM1")


def test_flag_overrides_config_file(tmp_path, cloud_file):
    config = tmp_path / "run.cfg"
    config.write_text("voxel-size = 0.05\nseed = 9\n")
    model = tmp_path / "m.pcmm"
    assert run("fit", cloud_file, "-o", model, "--config", config, "--seed", 4).returncode == 0
    info = parse_lines(run("info", model).stdout)
    assert float(info["voxel-size"]) == pytest.approx(0.05)
    assert info["seed"] == "4"


def test_exit_codes(tmp_path, cloud_file):
    assert run().returncode == 1
    assert run("fit", cloud_file).returncode == 1
    assert run("fit", tmp_path / "missing.xyz", "-o", tmp_path / "m.pcmm").returncode == 2

    bad = tmp_path / "bad.pcmm"
    bad.write_bytes(b"PCMM1 garbage")
    r = run("info", bad)
    assert r.returncode == 2
    assert re.search(r"at byte \d+", r.stderr)

    assert run("fit", cloud_file, "-o", tmp_path / "m.pcmm", "--voxel-size", -1).returncode == 1
