"""Command-line interface: configs, outputs, determinism and exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from hypercauchy.cli import EXPERIMENTS, list_builtins, main
from hypercauchy.surface import load_mesh

CSV_HEADER = "level,h,nodes,error_maxnorm,error_l2,runtime_ms"

ALL_EXPERIMENTS = [
    "pv-constant",
    "reproduction",
    "plemelj",
    "inversion",
    "jump-rm",
    "constant-gap",
    "dirichlet",
    "classical-degeneration",
    "order-at-infinity",
    "algebra-laws",
    "characteristic-sie",
    "poincare-bertrand",
    "span",
]


def _write_config(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


def _fast_config(tmp_path, **extra):
    lines = [
        "experiment = pv-constant",
        "surface = circle",
        "levels = 1,2",
        "tolerance = 1e-3",
        "seed = 0",
        "csv = %s" % (tmp_path / "out.csv"),
        "json = %s" % (tmp_path / "out.json"),
    ]
    for k, v in extra.items():
        lines.append("%s = %s" % (k, v))
    return _write_config(tmp_path, "exp.cfg", "\n".join(lines) + "\n")


def test_registry_complete():
    assert sorted(EXPERIMENTS) == sorted(ALL_EXPERIMENTS)
    listing = list_builtins()
    for name in ALL_EXPERIMENTS:
        assert name in listing


def test_run_writes_reports(tmp_path, capsys):
    cfg = _fast_config(tmp_path)
    assert main(["run", cfg]) == 0
    csv_text = (tmp_path / "out.csv").read_text()
    lines = csv_text.strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3  # two levels
    doc = json.loads((tmp_path / "out.json").read_text())
    assert doc["experiment"] == "pv-constant"
    assert doc["passed"] is True
    assert "criteria" in doc and "config" in doc
    assert all(c["passed"] for c in doc["criteria"])
    # runtime is zeroed for reproducible bytes unless requested
    for row in lines[1:]:
        assert row.rsplit(",", 1)[1] == "0"


def test_run_byte_deterministic(tmp_path, capsys):
    cfg = _fast_config(tmp_path)
    assert main(["run", cfg]) == 0
    first_csv = (tmp_path / "out.csv").read_bytes()
    first_json = (tmp_path / "out.json").read_bytes()
    assert main(["run", cfg]) == 0
    assert (tmp_path / "out.csv").read_bytes() == first_csv
    assert (tmp_path / "out.json").read_bytes() == first_json


def test_run_records_runtime_when_asked(tmp_path, capsys):
    cfg = _fast_config(tmp_path, record_runtime="true")
    assert main(["run", cfg]) == 0
    lines = (tmp_path / "out.csv").read_text().strip().splitlines()
    runtimes = [float(r.rsplit(",", 1)[1]) for r in lines[1:]]
    assert any(v > 0 for v in runtimes)


def test_set_overrides(tmp_path, capsys):
    cfg = _fast_config(tmp_path)
    assert main(["run", cfg, "--set", "levels=1", "--set",
                 "json=%s" % (tmp_path / "o2.json")]) == 0
    doc = json.loads((tmp_path / "o2.json").read_text())
    assert doc["config"]["levels"] == [1]


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2
    for body, field in [
        ("experiment = warp\nlevels = 1\n", "experiment"),
        ("experiment = pv-constant\nsurface = torus\nlevels = 1\n", "surface"),
        ("experiment = pv-constant\nlevels = 2,1\n", "levels"),
        ("experiment = pv-constant\nlevels = 1\nbogus = 3\n", "bogus"),
        ("experiment = classical-degeneration\nsurface = sphere2\n"
         "levels = 1\n", "surface"),
    ]:
        cfg = _write_config(tmp_path, "bad.cfg", body)
        assert main(["run", cfg]) == 2
        assert field in capsys.readouterr().err
    cfg = _fast_config(tmp_path)
    assert main(["run", cfg, "--set", "levels"]) == 2


def test_numerical_failure_exit_1(tmp_path, capsys):
    # a - b identically zero makes the closed-form inversion singular
    body = "\n".join([
        "experiment = characteristic-sie",
        "surface = circle",
        "levels = 1",
        "sie_a = 1.0",
        "sie_b = 1.0",
        "tolerance = 1e-4",
        "json = %s" % (tmp_path / "err.json"),
    ])
    cfg = _write_config(tmp_path, "sie.cfg", body + "\n")
    assert main(["run", cfg]) == 1
    doc = json.loads((tmp_path / "err.json").read_text())
    assert doc["passed"] is False
    assert "error" in doc and "SingularInputError" in doc["error"]


def test_failed_criterion_exit_1(tmp_path, capsys):
    cfg = _fast_config(tmp_path, tolerance="1e-30")
    assert main(["run", cfg]) == 1
    doc = json.loads((tmp_path / "out.json").read_text())
    assert doc["passed"] is False
    assert any(not c["passed"] for c in doc["criteria"])


def test_list_command(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ALL_EXPERIMENTS:
        assert name in out


def test_mesh_export_roundtrip(tmp_path, capsys):
    path = tmp_path / "mesh.txt"
    assert main(["mesh", "export", "circle,level=2,radius=2.0",
                 str(path)]) == 0
    mesh = load_mesh(path)
    assert mesh.n == 1
    assert mesh.node_count == 64 * 2 ** 2
    assert np.max(np.abs(np.linalg.norm(mesh.nodes, axis=1) - 2.0)) <= 1e-12
    assert main(["mesh", "export", "torus,level=1", str(path)]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "hypercauchy.cli", "list"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pv-constant" in proc.stdout
