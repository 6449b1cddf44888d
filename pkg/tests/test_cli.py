import json
import subprocess
import sys

import numpy as np
import pytest

from bmlab.body import SymmetricBody, apply_map, cube, regular_polygon
from bmlab.cli import RunConfig, generate_random_body, main
from bmlab.stability import random_polygon


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def bodies(tmp_path):
    paths = {}
    for name, K in {"square": cube(2), "octagon": regular_polygon(8),
                    "rect": apply_map(np.diag([2.0, 1.0]), cube(2)), "cube3": cube(3)}.items():
        p = tmp_path / f"{name}.json"
        p.write_text(K.to_json())
        paths[name] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    paths["bad"] = str(bad)
    return paths


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and out.startswith("bmlab ")


def test_entry_point_module():
    res = subprocess.run([sys.executable, "-m", "bmlab", "fixtures", "list"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "cube2" in res.stdout.split()


def test_error_exit_codes(capsys, bodies, tmp_path):
    assert run(capsys, "john", "--body", bodies["bad"])[0] == 1
    code, _, err = run(capsys, "john", "--body", str(tmp_path / "missing.json"))
    assert code == 1 and "no such file" in err
    assert run(capsys, "john", "--body", bodies["square"], "--bogus")[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "fixtures", "verify", "nope")[0] == 1
    assert run(capsys, "onesym", "arc-body", "--v", "1,2,3")[0] == 1


def test_john_square(capsys, bodies):
    code, out, _ = run(capsys, "john", "--body", bodies["square"])
    d = json.loads(out)
    assert code == 0
    assert np.allclose(d["Q"], np.eye(2), atol=1e-8)
    assert d["decomposition_residual"] < 1e-8


def test_loewner_square(capsys, bodies):
    code, out, _ = run(capsys, "loewner", "--body", bodies["square"])
    assert code == 0 and np.allclose(json.loads(out)["Q"], np.eye(2) / 2, atol=1e-6)


def test_ader_codes(capsys, bodies):
    code, out, _ = run(capsys, "ader-certify", "--body", bodies["square"])
    d = json.loads(out)
    assert code == 0 and d["status"] == "certified" and d["verified"]
    assert d["ratio"] == pytest.approx(np.sqrt(2))
    code, out, _ = run(capsys, "ader-certify", "--body", bodies["rect"])
    assert code == 2 and json.loads(out)["status"] == "separated"


def test_bm_commands(capsys, bodies):
    code, out, _ = run(capsys, "bm", "ball", "--body", bodies["square"])
    assert code == 0 and json.loads(out)["value"] == pytest.approx(np.sqrt(2), abs=1e-6)
    code, out, _ = run(capsys, "bm", "pgram", "--body", bodies["octagon"])
    assert code == 0 and json.loads(out)["value"] == pytest.approx(np.sqrt(2), abs=1e-5)
    code, out, _ = run(capsys, "bm", "planar", "--a", bodies["square"], "--b", bodies["rect"])
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0, abs=1e-6)
    assert run(capsys, "bm", "ball", "--body", bodies["cube3"])[0] == 0


def test_onesym_commands(capsys, bodies, tmp_path):
    code, out, _ = run(capsys, "onesym", "check", "--body", bodies["octagon"])
    assert code == 0 and json.loads(out)["condition_holds"]
    code, out, _ = run(capsys, "onesym", "check", "--body", bodies["rect"])
    assert code == 2 and not json.loads(out)["condition_holds"]
    dest = tmp_path / "arc.json"
    code, out, _ = run(capsys, "onesym", "arc-body", "--out", str(dest))
    d = json.loads(out)
    assert code == 0 and d["condition_holds"] and not d["rot45_invariant"]
    assert dest.exists()
    code, out, _ = run(capsys, "onesym", "pair", "--a", bodies["square"], "--b", bodies["octagon"])
    assert code == 0 and json.loads(out)["value"] == pytest.approx(np.sqrt(2), abs=1e-5)


def test_verify_poly(capsys):
    code, out, _ = run(capsys, "stability", "verify-poly")
    assert code == 0 and json.loads(out)["ok"]


def test_scan_csv_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "stability", "scan", "--trials", "4", "--seed", "2", "--out", str(a))[0] == 0
    assert run(capsys, "stability", "scan", "--trials", "4", "--seed", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "id,epsilon,dist_ball,dist_pgram,bound,slack"
    assert len(lines) == 5


def test_scan_svg(capsys, tmp_path):
    pytest.importorskip("matplotlib")
    svg = tmp_path / "scan.svg"
    assert run(capsys, "stability", "scan", "--trials", "3", "--svg", str(svg))[0] == 0
    assert svg.read_text().lstrip().startswith("<?xml")


def test_cover_command(capsys, tmp_path):
    out_csv = tmp_path / "cover.csv"
    code, out, _ = run(capsys, "cover", "--trials", "3", "--seed", "1", "--out", str(out_csv))
    d = json.loads(out)
    assert code == 0 and d["all_below"] and d["trials"] == 3
    assert len(out_csv.read_text().splitlines()) == 4
    assert run(capsys, "cover", "--trials", "0")[0] == 1


def test_fixture_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "fixtures", "verify", "cube2", "hexagon")
    assert code == 0 and all(line.startswith("PASS") for line in out.splitlines())
    code, out, _ = run(capsys, "fixtures", "export", "--dir", str(tmp_path / "fx"))
    assert code == 0 and len(out.splitlines()) == len(list((tmp_path / "fx").glob("*.json")))
    code, out, _ = run(capsys, "fixtures", "random", "--seed", "4", "--index", "2")
    assert code == 0
    K = SymmetricBody.from_dict(json.loads(out))
    assert np.allclose(K.half_vertices, random_polygon(4, 2).half_vertices)


def test_generate_random_body():
    cfg = RunConfig(seed=8)
    a, b = generate_random_body(cfg, 3), generate_random_body(cfg, 3)
    assert np.array_equal(a.half_vertices, b.half_vertices)
    assert a.dim == 2 and a.half_vertices.shape[0] >= 2
    assert not np.array_equal(a.half_vertices, generate_random_body(RunConfig(seed=9), 3).half_vertices)
