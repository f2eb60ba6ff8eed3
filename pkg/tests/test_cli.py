import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from shapelab.cli import DEFAULTS, MODES, main, run

SCENES = Path(__file__).resolve().parent.parent / "scenes"
GOOD = sorted(p for p in SCENES.glob("*.json") if p.name != "bad_expr.json")


def mode_of(path):
    return json.loads(path.read_text())["mode"]


def cli(path, out, *extra):
    return main([mode_of(path), "--scene", str(path), "--out", str(out), *extra])


def test_defaults_cover_every_mode():
    assert set(MODES) == {"verify-curvature", "codazzi", "pencil-scan", "darboux", "goursat", "triple",
                          "compat", "frames", "reconstruct", "family"}
    assert all("tol" in DEFAULTS[m] and "N" in DEFAULTS[m] for m in MODES)


def test_scene_corpus_covers_every_mode():
    assert {mode_of(p) for p in GOOD} == set(MODES)


@pytest.mark.slow
@pytest.mark.parametrize("scene", GOOD, ids=lambda p: p.stem)
def test_scene_passes(scene, tmp_path):
    assert cli(scene, tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passes"] and summary["error"] is None and summary["gates"]
    for name in summary["artifacts"]:
        assert (tmp_path / name).exists(), name
    with open(tmp_path / "gates.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(summary["gates"]) and all(r["passes"] == "True" for r in rows)
    assert not list(tmp_path.glob(".tmp-*"))


def test_reconstruct_writes_obj(tmp_path):
    assert cli(SCENES / "reconstruct_dupin.json", tmp_path) == 0
    objs = list(tmp_path.glob("*.obj"))
    assert objs
    assert sum(1 for ln in open(objs[0]) if ln.startswith("v ")) == 64 * 64


def test_malformed_expression(tmp_path, capsys):
    assert cli(SCENES / "bad_expr.json", tmp_path) == 2
    assert "byte 3" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    scene = tmp_path / "s.json"
    scene.write_text(json.dumps({"mode": "reconstruct", "example": "dupin", "colour": "red"}))
    assert main(["reconstruct", "--scene", str(scene), "--out", str(tmp_path / "o")]) == 2
    assert "colour" in capsys.readouterr().err


def test_missing_required_key(tmp_path):
    scene = tmp_path / "s.json"
    scene.write_text(json.dumps({"mode": "goursat", "phi0": 0.3}))
    assert main(["goursat", "--scene", str(scene), "--out", str(tmp_path / "o")]) == 2


def test_mode_mismatch_and_unknown_example(tmp_path):
    scene = tmp_path / "s.json"
    scene.write_text(json.dumps({"mode": "reconstruct", "example": "dupin"}))
    assert main(["family", "--scene", str(scene), "--out", str(tmp_path / "o")]) == 2
    scene.write_text(json.dumps({"mode": "reconstruct", "example": "torus"}))
    assert main(["reconstruct", "--scene", str(scene), "--out", str(tmp_path / "o")]) == 2


def test_bad_flags(tmp_path):
    s = str(SCENES / "goursat_ex8.json")
    assert main(["goursat", "--scene", s, "--grid", "4x4"]) == 2
    assert main(["goursat", "--scene", s, "--lambda", "a,b"]) == 2
    assert main(["nonsense", "--scene", s]) == 2


def test_gate_failure_exits_one(tmp_path, capsys):
    assert cli(SCENES / "verify_quadric.json", tmp_path, "--tol", "1e-30") == 1
    assert "summary.json" in capsys.readouterr().err
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert not summary["passes"] and summary["overrides"]["tol"] == 1e-30


def test_grid_and_lambda_overrides(tmp_path):
    assert cli(SCENES / "pencil_ex8.json", tmp_path, "--grid", "80x80", "--lambda", "1,3") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["overrides"]["grid"] == [80, 80]
    assert summary["overrides"]["lambdas"] == [1.0, 3.0]


def test_determinism_in_process(tmp_path):
    scene = SCENES / "goursat_ex8.json"
    assert cli(scene, tmp_path / "a") == 0
    assert cli(scene, tmp_path / "b") == 0
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    assert (tmp_path / "a" / "gates.csv").read_bytes() == (tmp_path / "b" / "gates.csv").read_bytes()


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    scene = SCENES / "family_one_param.json"
    monkeypatch.setenv("SHAPELAB_THREADS", "1")
    assert cli(scene, tmp_path / "a") == 0
    monkeypatch.setenv("SHAPELAB_THREADS", "3")
    assert cli(scene, tmp_path / "b") == 0
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_determinism_across_processes(tmp_path):
    scene = SCENES / "compat_polar.json"
    outs = []
    for tag in "ab":
        cmd = [sys.executable, "-m", "shapelab.cli", "compat", "--scene", str(scene), "--out", str(tmp_path / tag)]
        assert subprocess.run(cmd, capture_output=True, env=dict(os.environ, PYTHONHASHSEED="1" if tag == "a" else "2")).returncode == 0
        outs.append((tmp_path / tag / "summary.json").read_bytes())
    assert outs[0] == outs[1]


def test_run_api(tmp_path):
    assert run("compat", json.loads((SCENES / "compat_polar.json").read_text()), str(tmp_path)) == 0
