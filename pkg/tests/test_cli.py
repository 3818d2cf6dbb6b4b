import json
import subprocess
import sys

import pytest

from tinytrack.cli import main

SCENARIO = {
    "width": 96, "height": 80, "num_frames": 30, "seed": 3, "drift": [0.1, 0.0],
    "vehicles": [{"size": [6, 3], "intensity": 60.0,
                  "path": {"kind": "line", "start": [20.0, 40.0], "velocity": [1.5, 0.0]}}],
}


def error_line(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    return lines[-1]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "scenario.json").write_text(json.dumps(SCENARIO))
    assert main(["synth", str(root / "scenario.json"), str(root / "scene")]) == 0
    assert main(["track", str(root / "scene" / "frames"), "-o", str(root / "tracks.csv")]) == 0
    return root


def test_synth_layout(workdir):
    scene = workdir / "scene"
    assert len(list((scene / "frames").glob("*.pgm"))) == 30
    assert (scene / "gt.csv").read_text().startswith("frame,id,x,y,w,h\n")
    assert json.loads((scene / "scenario.json").read_text())["seed"] == 3


def test_seed_override(workdir):
    out = workdir / "reseeded"
    assert main(["synth", str(workdir / "scenario.json"), str(out), "--seed", "99", "--format", "png"]) == 0
    assert json.loads((out / "scenario.json").read_text())["seed"] == 99
    assert len(list((out / "frames").glob("*.png"))) == 30


def test_track_and_evaluate(workdir, capsys):
    assert (workdir / "tracks.csv").read_text().startswith("frame,track_id,x,y,w,h,vx,vy,ax,ay\n")
    out = workdir / "metrics.json"
    assert main(["evaluate", str(workdir / "tracks.csv"), str(workdir / "scene" / "gt.csv"),
                 "--frames", "10:20", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["totals"]["gt"] == 10 and doc["metrics"]["recall"] > 0.5
    capsys.readouterr()
    assert main(["evaluate", str(workdir / "tracks.csv"), str(workdir / "scene" / "gt.csv"), "--frames", "10:20"]) == 0
    assert json.loads(capsys.readouterr().out) == doc


def test_detect(workdir):
    out = workdir / "hyps.csv"
    assert main(["detect", str(workdir / "scene" / "frames"), "-o", str(out), "--set", "rules.area_min=4"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "frame,id,x,y,w,h,area,extent,major_axis_length,eccentricity"
    assert {int(line.split(",")[0]) for line in lines[1:]} <= set(range(10, 20))


def test_overlay(workdir):
    out = workdir / "overlay"
    assert main(["overlay", str(workdir / "scene" / "frames"), str(workdir / "tracks.csv"), str(out)]) == 0
    assert len(list(out.glob("*.png"))) == 30


def test_config_file(workdir):
    (workdir / "cfg.json").write_text(json.dumps({"detector": {"p_fa": 0.01}}))
    out = workdir / "t2.csv"
    assert main(["track", str(workdir / "scene" / "frames"), "-o", str(out),
                 "--config", str(workdir / "cfg.json")]) == 0


@pytest.mark.parametrize("argv, category, code", [
    (["frobnicate"], "argument", 2),
    (["track", "/nonexistent/frames"], "argument", 2),
    (["track", "FRAMES", "--set", "detector.p_fa=2"], "config", 2),
    (["track", "FRAMES", "--set", "detector.bogus=1"], "config", 2),
    (["track", "FRAMES", "--set", "novalue"], "config", 2),
    (["track", "FRAMES", "--set", "detector.frame_interval=20"], "insufficient-context", 2),
    (["evaluate", "GT", "GT"], "format", 1),
    (["evaluate", "/nonexistent.csv", "GT"], "io", 1),
    (["evaluate", "TRACKS", "GT", "--frames", "a:b"], "argument", 2),
])
def test_errors(workdir, capsys, argv, category, code):
    subst = {"FRAMES": str(workdir / "scene" / "frames"), "GT": str(workdir / "scene" / "gt.csv"),
             "TRACKS": str(workdir / "tracks.csv")}
    capsys.readouterr()
    assert main([subst.get(a, a) for a in argv]) == code
    line = error_line(capsys)
    assert line.startswith(f"error: {category}: ") and "\n" not in line


def test_overlay_rejects_foreign_frames(workdir, capsys):
    bad = workdir / "far.csv"
    bad.write_text("frame,track_id,x,y,w,h,vx,vy,ax,ay\n500,1,0,0,1,1,0,0,0,0\n")
    assert main(["overlay", str(workdir / "scene" / "frames"), str(bad), str(workdir / "ov2")]) == 2
    assert error_line(capsys).startswith("error: argument: ")


def test_subprocess_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "tinytrack.cli", "track", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert proc.stderr.strip().splitlines()[-1].startswith("error: argument: ")
