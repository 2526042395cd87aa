import json

import pytest

from oflab.cli import main


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 12 and out[0].startswith("aggregation")


def test_check_sc_exit_codes(tmp_path, capsys):
    assert main(["check-sc", _write(tmp_path / "ok.json", {"kind": "rank_based", "b": [1, 0, -1]})]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["satisfies_ssc"] and report["b_bar"] == pytest.approx(1)

    bad = {"kind": "general", "n": 2, "table": {"12": [-1, 0], "21": [0, -1]}}
    assert main(["check-sc", _write(tmp_path / "bad.json", bad)]) == 1
    assert json.loads(capsys.readouterr().out)["violations"]

    assert main(["check-sc", str(tmp_path / "missing.json")]) == 2
    assert main(["check-sc", _write(tmp_path / "short.json", {"kind": "general", "table": {"12": [0, 0]}})]) == 2


def test_sticky_csv(capsys):
    assert main(["sticky", "0,1", "1,-1", "--T", "1", "--dt", "0.25"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,x1,x2"
    assert lines[3] == "0.5,0.5,0.5" and lines[-1] == "1.0,0.5,0.5"


def test_sticky_json(capsys):
    assert main(["sticky", "0,1,2", "1,0,-1", "--T", "2", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [e["t"] for e in data["events"]] == [1.0]


@pytest.mark.parametrize(
    "argv",
    [
        ["sticky", "0,1", "1"],
        ["sticky", "1,0", "1,-1"],
        ["sticky", "0,1", "1,-1", "--T", "0"],
        ["sticky", "0,a", "1,-1"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == 2


def test_run_exit_codes(tmp_path, capsys):
    good = {"experiment": "coincidence", "paths": 10, "output_dir": "good"}
    assert main(["run", _write(tmp_path / "good.json", good)]) == 0
    assert (tmp_path / "good" / "report.json").exists()
    assert "PASS" in capsys.readouterr().out

    failing = {"experiment": "coincidence", "paths": 10, "params": {"last_max": 0.0}}
    assert main(["run", _write(tmp_path / "fail.json", failing), "--output-dir", str(tmp_path / "f")]) == 1
    assert "FAIL" in capsys.readouterr().out

    assert main(["run", _write(tmp_path / "bad.json", {"experiment": "nope"})]) == 2
    assert main(["run", _write(tmp_path / "lad.json", {"experiment": "arcsine", "eps_ladder": [1, 2]})]) == 2
