import json
import subprocess
import sys

import pytest

from digplan import fixtures as F
from digplan.cli import main
from digplan.io import write_manifest


@pytest.fixture
def pocket(tmp_path):
    return write_manifest(F.capped_pocket(), tmp_path / "pocket")


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_analyze_outputs(pocket, tmp_path, capsys):
    out = tmp_path / "a"
    assert main(["analyze", str(pocket), "-o", str(out)]) == 0
    assert {"dig.csv", "blockage.csv", "dig.png"} <= set(_files(out))
    lines = (out / "blockage.csv").read_text().splitlines()
    assert lines[0] == "part_id,name,tau,locked,base"
    assert lines[1].startswith("0,base,0,0,1")
    assert "base part: 0 (base)" in capsys.readouterr().out


def test_plan_outputs(pocket, tmp_path, capsys):
    out = tmp_path / "p"
    assert main(["plan", str(pocket), "-o", str(out), "--robots", "2"]) == 0
    names = set(_files(out))
    assert {"tree.json", "tree.dot", "sequence.csv", "schedule.csv", "metrics.csv", "tree.png", "schedule.png"} <= names
    assert (out / "metrics.csv").read_text() == "method,robots,makespan,speedup\ndig,1,2,1.00\ndig,2,2,1.00\n"
    seq = (out / "sequence.csv").read_text().splitlines()
    assert seq[0] == "step,node,moving,reference,dx,dy,dz" and len(seq) == 3
    assert "dig: 2 join actions" in capsys.readouterr().out


def test_compare_table(pocket, tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["compare", str(pocket), "-o", str(out), "--no-plots", "--robots", "2"]) == 0
    rows = (out / "comparison.csv").read_text().splitlines()
    assert rows[0] == "method,robots,makespan,speedup,note"
    assert [r.split(",")[0] for r in rows[1:]] == ["dig", "dig", "morato", "morato", "belhadj", "belhadj"]
    assert not (out / "comparison.png").exists()


def test_export_dot(pocket, tmp_path, capsys):
    out = tmp_path / "p"
    assert main(["plan", str(pocket), "-o", str(out), "--no-plots"]) == 0
    capsys.readouterr()
    assert main(["export-dot", str(out / "tree.json")]) == 0
    text = capsys.readouterr().out
    assert text.startswith("digraph") and '"(A B)"' in text
    assert text == (out / "tree.dot").read_text()
    assert main(["export-dot", str(out / "tree.json"), "-o", str(tmp_path / "t.dot")]) == 0
    assert (tmp_path / "t.dot").read_text() == text


def test_repeated_runs_are_byte_identical(pocket, tmp_path):
    for name in ("r1", "r2"):
        assert main(["plan", str(pocket), "-o", str(tmp_path / name), "--method", "morato"]) == 0
    assert _files(tmp_path / "r1") == _files(tmp_path / "r2")


def test_seed_from_environment(pocket, tmp_path, monkeypatch):
    monkeypatch.setenv("DIGPLAN_SEED", "7")
    assert main(["plan", str(pocket), "-o", str(tmp_path / "s"), "--no-plots", "--method", "morato"]) == 0
    monkeypatch.setenv("DIGPLAN_SEED", "seven")
    assert main(["plan", str(pocket), "-o", str(tmp_path / "s"), "--no-plots"]) == 3


def test_missing_mesh_is_input_error(pocket, tmp_path, capsys):
    data = json.loads(pocket.read_text())
    data["parts"][0]["mesh"] = "gone.obj"
    pocket.write_text(json.dumps(data))
    assert main(["analyze", str(pocket), "-o", str(tmp_path / "x")]) == 3
    assert "input error" in capsys.readouterr().err


def test_bad_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["plan", str(bad), "-o", str(tmp_path / "x")]) == 3
    tree = tmp_path / "tree.json"
    tree.write_text(json.dumps({"schema": "digplan.tree/1", "nodes": [{"id": 0}]}))
    assert main(["export-dot", str(tree)]) == 3
    assert main(["plan", str(tmp_path / "none.json"), "-o", str(tmp_path / "x")]) == 3


def test_open_mesh_is_geometry_error(pocket, tmp_path, capsys):
    mesh = pocket.parent / json.loads(pocket.read_text())["parts"][1]["mesh"]
    lines = mesh.read_text().splitlines()
    faces = [i for i, ln in enumerate(lines) if ln.startswith("f ")]
    mesh.write_text("\n".join(ln for i, ln in enumerate(lines) if i != faces[-1]) + "\n")
    assert main(["analyze", str(pocket), "-o", str(tmp_path / "x")]) == 2
    assert "geometry error" in capsys.readouterr().err


def test_planning_failure_writes_dump(tmp_path, capsys):
    m = write_manifest(F.welded(), tmp_path / "w")
    out = tmp_path / "out"
    assert main(["plan", str(m), "-o", str(out), "--no-plots"]) == 4
    dump = json.loads((out / "failure.json").read_text())
    assert dump["stuck_parts"] == [0, 1] and dump["trace"]
    assert "stuck state: [0, 1]" in capsys.readouterr().err


def test_robots_must_be_positive(pocket, tmp_path):
    assert main(["plan", str(pocket), "-o", str(tmp_path / "x"), "--robots", "0"]) == 3


def test_module_entry_point(pocket, tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "digplan", "analyze", str(pocket), "-o", str(tmp_path / "m"), "--no-plots"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "m" / "dig.csv").is_file()
