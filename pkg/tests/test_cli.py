import csv
import io
import json
import os
from pathlib import Path

import pytest
import yaml

from markedph import config
from markedph.cli import main, read_points
from markedph.persistence import read_diagram_csv

DATA = Path(__file__).parent / "data"


def _tiny_config(tmp_path, **overrides):
    d = config.default_config().to_dict()
    d["net"]["sizes"] = [4, 6]
    d["seeds"] = 2
    d.update(overrides)
    p = tmp_path / "tiny.yaml"
    p.write_text(yaml.safe_dump(d))
    return str(p)


def test_diagram_golden(capsys):
    assert main(["diagram", str(DATA / "unit_square.txt")]) == 0
    out = capsys.readouterr().out
    assert out == (DATA / "unit_square_diagram.csv").read_text()
    dgm = read_diagram_csv(io.StringIO(out))
    assert len(dgm) == 5


def test_diagram_to_file_and_stdin(tmp_path, monkeypatch, capsys):
    out = tmp_path / "d.csv"
    assert main(["diagram", str(DATA / "unit_square.txt"), "-o", str(out)]) == 0
    assert out.read_text() == (DATA / "unit_square_diagram.csv").read_text()
    monkeypatch.setattr("sys.stdin", io.StringIO("0,0,0\n1,0,0\n"))
    assert main(["diagram", "-", "--t-max", "2"]) == 0
    assert capsys.readouterr().out.splitlines()[1:] == ["0,0.0,0.5,0", "0,0.0,inf,1"]


def test_diagram_empty(tmp_path, capsys):
    p = tmp_path / "empty.txt"
    p.write_text("# nothing here\n")
    assert main(["diagram", str(p)]) == 0
    assert capsys.readouterr().out == "dim,birth,death,censored\n"


def test_diagram_duplicate_positions(tmp_path, capsys):
    p = tmp_path / "dup.txt"
    p.write_text("0 0 0.1\n1 1 0.1\n0 0 0.2\n")
    assert main(["diagram", str(p)]) == 1
    assert "simplicity violated" in capsys.readouterr().err


@pytest.mark.parametrize("text, line", [("0 0 0\n1 x 0\n", "line 2"), ("0 0 0\n1 0\n", "line 2"), ("0 0 -1\n", "line 1"), ("# c\n0 0 0.5\n1 1 inf\n", "line 3")])
def test_diagram_malformed(tmp_path, capsys, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    assert main(["diagram", str(p)]) == 1
    assert line in capsys.readouterr().err


def test_diagram_other_kappas(tmp_path, capsys):
    p = tmp_path / "pts.txt"
    p.write_text("0 0 0\n1 0 1\n0.5 0.8 0\n")
    assert main(["diagram", str(p), "--kappa", "cech_growth", "--growth", "linear:1", "--growth", "power:1.5,2"]) == 0
    assert capsys.readouterr().out.startswith("dim,birth,death,censored\n0,0.0,")
    assert main(["diagram", str(p), "--kappa", "cech_shape", "--shape", "ball:1", "--shape", "box:1,0.5"]) == 0
    assert capsys.readouterr().out.startswith("dim,birth,death,censored\n")
    # mark 1 refers to a second law that was not given
    assert main(["diagram", str(p), "--kappa", "rips_growth", "--growth", "linear:1"]) == 1


def test_read_points_formats():
    xi = read_points(["x1,x2,mark_kind,mark_value", "0.0,1.0,radius,0.25", "2.0,3.0,radius,0.0"], "radius")
    assert xi.positions.tolist() == [[0.0, 1.0], [2.0, 3.0]] and xi.marks.tolist() == [0.25, 0.0]
    xi = read_points(["1 2 3 0.1", "  # comment", "", "4,5,6,0.2"], "radius", dim=3)
    assert xi.dim == 3 and len(xi) == 2


def test_geometry(capsys, tmp_path):
    assert main(["geometry", "--sizes", "10", "100", "1000", "--M", "3", "--h", "1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert list(rows[0]) == ["label", "volume", "inner_ratio", "annulus_ratio", "shell_ratio"]
    assert [float(r["inner_ratio"]) for r in rows] == [0.81, 0.9801, 0.998001]
    assert main(["geometry", "--sizes", "5", "--M", "1", "-o", str(tmp_path / "g.csv")]) == 0
    assert len((tmp_path / "g.csv").read_text().splitlines()) == 2
    with pytest.raises(SystemExit) as exc:
        main(["geometry", "--sizes", "10", "--M", "0"])
    assert exc.value.code == 2


def test_sample(capsys, tmp_path):
    cfg = _tiny_config(tmp_path)
    assert main(["sample", "--config", cfg, "--seed-index", "1"]) == 0
    first = capsys.readouterr().out
    assert first.startswith("x1,x2,mark_kind,mark_value\n")
    assert main(["sample", "--config", cfg, "--seed-index", "1"]) == 0
    assert capsys.readouterr().out == first
    assert main(["sample", "--config", cfg, "--window-index", "5"]) == 2


def test_lln_outputs_and_determinism(tmp_path):
    cfg = _tiny_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["lln", "--config", cfg, "--out", str(a), "--jobs", "1"]) == 0
    assert main(["lln", "--config", cfg, "--out", str(b), "--jobs", "2"]) == 0
    for name in ("config.yaml", "rows.csv", "aggregates.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert sorted(os.listdir(a / "cache")) == sorted(os.listdir(b / "cache"))
    rows = list(csv.DictReader(open(a / "rows.csv")))
    assert len(rows) == 2 * 2 * 2 * 8
    assert config.load(str(a / "config.yaml")) == config.load(cfg)
    report = json.loads((a / "report.json").read_text())
    assert report["total_tasks"] == 4 and report["skipped"] == []
    for f in os.listdir(a / "cache"):
        read_diagram_csv(open(a / "cache" / f))


def test_lln_resume_and_seed_override(tmp_path):
    cfg = _tiny_config(tmp_path)
    out = tmp_path / "o"
    assert main(["lln", "--config", cfg, "--out", str(out), "--jobs", "1"]) == 0
    before = (out / "rows.csv").read_bytes()
    assert main(["lln", "--config", cfg, "--out", str(out), "--jobs", "1", "--resume"]) == 0
    assert (out / "rows.csv").read_bytes() == before
    assert main(["lln", "--config", cfg, "--out", str(out), "--jobs", "1", "--seed", "99"]) == 0
    assert (out / "rows.csv").read_bytes() != before
    assert yaml.safe_load((out / "config.yaml").read_text())["process"]["seed"] == 99


def test_lln_single_seed(tmp_path):
    cfg = _tiny_config(tmp_path, seeds=1)
    d = yaml.safe_load(open(cfg))
    d["net"]["sizes"] = [4]
    Path(cfg).write_text(yaml.safe_dump(d))
    assert main(["lln", "--config", cfg, "--out", str(tmp_path / "o"), "--jobs", "1"]) == 0
    aggs = list(csv.DictReader(open(tmp_path / "o" / "aggregates.csv")))
    assert {a["window_label"] for a in aggs} == {"cube_L4_d2"}
    assert all(a["stderr"] == "" and a["n"] == "1" for a in aggs)


def test_lln_budget_skips(tmp_path, capsys):
    cfg = _tiny_config(tmp_path, budget=5)
    assert main(["lln", "--config", cfg, "--out", str(tmp_path / "o"), "--jobs", "1"]) == 3
    assert "skipped" in capsys.readouterr().err
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert len(report["skipped"]) == 4


def test_lln_bad_config(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("dimension: 2\n")
    assert main(["lln", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "missing" in capsys.readouterr().err
