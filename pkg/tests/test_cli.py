import json
import shutil
import subprocess

import pytest

from conftest import fan, tetrahedron, triangle
from flatgeom import Structure
from flatgeom.amalgamation import build_generic_approx
from flatgeom.classes import ClassSpec
from flatgeom.cli import main


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, S in {"f1": tetrahedron(), "f5": fan(), "tri": triangle()}.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(S.to_json()))
        out[name] = str(path)
    out["dir"] = tmp_path
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_delta(capsys, files):
    assert run_json(capsys, "delta", "-s", files["f1"]) == (0, {"delta": 0})
    assert run_json(capsys, "delta", "-s", files["f1"], "--subset", "1,2,3") == (0, {"delta": 2})


def test_member(capsys, files):
    code, out = run_json(capsys, "member", "-s", files["f5"], "--class", "cmu")
    assert code == 1 and out["member"] is False and out["witness"]["base"] == [1, 2]
    assert run_json(capsys, "member", "-s", files["f5"], "--class", "c0")[0] == 0


def test_mu_file(capsys, files):
    from flatgeom import PointedStructure, canonical_form

    code = canonical_form(PointedStructure(triangle(), [1, 2]))
    mu = files["dir"] / "mu.json"
    mu.write_text(json.dumps([{"code": code, "value": 3}]))
    assert run_json(capsys, "member", "-s", files["f5"], "--class", "cmu", "--mu", mu)[0] == 0


def test_dim_and_closure(capsys, files):
    assert run_json(capsys, "dim", "-s", files["f1"], "--subset", "1")[1] == {"subset": [1], "dimension": 0, "witness": [1, 2, 3, 4]}
    assert run_json(capsys, "closure", "-s", files["tri"], "--subset", "1,2")[1]["closure"] == [1, 2, 3]


def test_geom(capsys, files):
    code, out = run_json(capsys, "geom", "-s", files["tri"])
    assert out["rank"] == 2 and len(out["points"]) == 3 and len(out["flats"]) == 5
    code, text = run(capsys, "geom", "-s", files["tri"], "--pretty")
    assert text.startswith("base []") and "r=2 {1, 2, 3}" in text
    code, dot = run(capsys, "geom", "-s", files["tri"], "--dot")
    assert dot.startswith("digraph flats")
    assert run_json(capsys, "geom", "-s", files["tri"], "--base", "1")[1]["points"] == [[2, 3]]


def test_msa(capsys, files):
    code, out = run_json(capsys, "msa", "-s", files["f5"], "--max-ext", "1")
    assert out["count"] == 9


def test_amalgam(capsys, files, tmp_path):
    two = Structure.ternary([1, 2, 3, 4], [[1, 2, 3], [1, 2, 4]])
    p = tmp_path / "two.json"
    p.write_text(json.dumps(two.to_json()))
    code, out = run_json(capsys, "amalgam", "--b1", p, "--b2", p, "--base", "1,2", "--class", "cmu")
    assert code == 0 and Structure.from_json(out["structure"]) == two


def test_generic_and_baf(capsys, tmp_path):
    src, tgt = tmp_path / "c0.json", tmp_path / "cmu.json"
    code, out = run_json(capsys, "generic", "--class", "c0", "--budget", 3, "--rounds", 3, "--out", src)
    assert code == 0 and out["stage_sizes"][0] == 0
    run_json(capsys, "generic", "--class", "cmu", "--budget", 3, "--rounds", 3, "--out", tgt)
    code, out = run_json(capsys, "baf", "--source", src, "--target", tgt, "--x", 1, "--steps", 3)
    assert code == 0 and out["complete"] and out["points"] >= 3


def test_extend(capsys, tmp_path):
    trace = tmp_path / "trace.json"
    code, out = run_json(capsys, "extend", "--seed", 4, "--trace", trace)
    assert code == 0 and out["all_pass"]
    saved = json.loads(trace.read_text())
    assert set(saved) == {"problem", "trace"}
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps(saved["problem"]))
    again = run_json(capsys, "extend", "--problem", prob, "--seed", 4)[1]
    assert again["Bprime"] == out["Bprime"]


def test_deterministic(capsys, files):
    first = run(capsys, "extend", "--seed", 9, "--variant", "kmu")
    assert first == run(capsys, "extend", "--seed", 9, "--variant", "kmu")


def test_input_errors(capsys, files, tmp_path):
    assert run(capsys, "delta", "-s", tmp_path / "missing.json")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "delta", "-s", bad)[0] == 2
    assert run(capsys, "dim", "-s", files["f1"], "--subset", "1,x")[0] == 2
    assert run(capsys, "dim", "-s", files["f1"], "--subset", "9")[0] == 2
    assert run(capsys, "member", "-s", files["f1"], "--class", "c7")[0] == 2
    assert main(["nope"]) == 2
    capsys.readouterr()


def test_resource_error(capsys, files, monkeypatch):
    monkeypatch.setenv("FLATGEOM_MAX_ELEMENTS", "2")
    assert run(capsys, "dim", "-s", files["f1"], "--subset", "1")[0] == 3


def test_suite_subset(capsys):
    code, out = run_json(capsys, "suite", "--only", "3")
    assert code == 0 and out["all_pass"] and out["criteria"][0]["criterion"] == 3


@pytest.mark.skipif(shutil.which("flatgeom") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["flatgeom", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "Exit codes" in res.stdout
