import json

import pytest

from oflab.harness import REGISTRY, ConfigError, emit_plot, load_config, load_drift, parse_config, run
from oflab.harness.report import Report, at_most, holds, within, write_csv

KNOWN = set(REGISTRY)


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return path


def test_registry_names():
    assert KNOWN == {
        "two-particle-selection", "two-particle-cluster", "arcsine", "limit-path-z", "rank-sticky",
        "ordering-uniformity", "aggregation", "ergodic-velocity", "counterexample-3p", "hitting-prob",
        "laplace", "coincidence",
    }
    assert all(e.summary for e in REGISTRY.values())


@pytest.mark.parametrize(
    "payload, message",
    [
        ({"experiment": "nope"}, "unknown experiment"),
        ({"experiment": "arcsine", "eps_ladder": [1e-3, 1e-2]}, "strictly decreasing"),
        ({"experiment": "arcsine", "eps_ladder": [1e-2, 1e-2]}, "strictly decreasing"),
        ({"experiment": "arcsine", "paths": 0}, "$.paths"),
        ({"experiment": "arcsine", "eps_ladder": [1, "x"]}, "$.eps_ladder[1]"),
        ({"experiment": "arcsine", "colour": 1}, "Additional properties"),
        ({"experiment": "arcsine", "drift": {"kind": "general", "table": {"12": [0, 0]}}}, "drift"),
        ({"experiment": "arcsine", "drift": {"kind": "rank_based", "b": [1, -1]}, "x0": [0]}, "x0 has length"),
    ],
)
def test_config_errors(payload, message):
    with pytest.raises(ConfigError, match=message.replace("$", r"\$").replace("[", r"\[")):
        parse_config(payload, known=KNOWN)


def test_json_errors_report_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"experiment": "arcsine",\n  "T": }')
    with pytest.raises(ConfigError, match="line 2 column"):
        load_config(p, KNOWN)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json", KNOWN)


def test_drift_file_relative_to_config(tmp_path):
    _write(tmp_path / "d.json", {"kind": "rank_based", "b": [1, 0, -1]})
    cfg = load_config(_write(tmp_path / "c.json", {"experiment": "aggregation", "drift": "d.json", "output_dir": "out"}), KNOWN)
    assert cfg.drift.n == 3 and cfg.output_dir == tmp_path / "out"
    table = {"12": [1, -1], "21": [-1, 1]}
    assert load_drift({"kind": "general", "n": 2, "table": table}).n == 2


def test_seed_override(monkeypatch):
    monkeypatch.setenv("OFLAB_SEED", "17")
    assert parse_config({"experiment": "arcsine", "seed": 3}).seed == 17
    monkeypatch.setenv("OFLAB_SEED", "x")
    with pytest.raises(ConfigError):
        parse_config({"experiment": "arcsine"})


def _small(tmp_path, name="coincidence", **extra):
    return parse_config({"experiment": name, "paths": 10, "output_dir": str(tmp_path), **extra}, known=KNOWN)


def test_run_is_deterministic(tmp_path):
    a = run(_small(tmp_path / "a", seed=5))
    b = run(_small(tmp_path / "b", seed=5))
    assert [(m.name, m.value) for m in a.metrics] == [(m.name, m.value) for m in b.metrics]
    for name in ("coincidence.svg", "coincidence.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ja = json.loads((tmp_path / "a" / "report.json").read_text())
    jb = json.loads((tmp_path / "b" / "report.json").read_text())
    ja["config"].pop("output_dir"), jb["config"].pop("output_dir")
    assert ja == jb
    assert {"name", "value", "target", "tolerance", "passed"} <= set(ja["metrics"][0])


@pytest.mark.parametrize("name", sorted(KNOWN))
def test_every_experiment_runs(tmp_path, name):
    report = run(_small(tmp_path, name))
    assert report.metrics
    for artifact in report.artifacts:
        assert (tmp_path / artifact).exists()
    assert any(a.endswith(".svg") for a in report.artifacts)
    assert any(a.endswith(".csv") for a in report.artifacts)


def test_experiment_without_drift_default_needs_one(tmp_path):
    with pytest.raises(ConfigError):
        run(parse_config({"experiment": "coincidence", "x0": [0, 0, 0], "output_dir": str(tmp_path)}))


def test_metric_helpers():
    assert within("a", 1.01, 1.0, 0.02).passed
    assert not within("a", 1.03, 1.0, 0.02).passed
    assert at_most("b", 1.0, 1.0).passed
    assert holds("c", False).line().startswith("FAIL c:")
    rep = Report("x", {})
    rep.add(within("a", 1, 1, 0))
    assert rep.passed
    rep.add(at_most("b", 2, 1))
    assert not rep.passed


def test_csv_format(tmp_path):
    write_csv(tmp_path / "t.csv", ["x", "y"], [(0.1, 2), (1e-20, "s")])
    assert (tmp_path / "t.csv").read_bytes() == b"x,y\n0.1,2\n1e-20,s\n"


def test_plots_are_deterministic(tmp_path):
    series = [
        {"label": "a", "x": [1, 2, 3], "y": [3, 1, 2]},
        {"label": "b", "x": [1, 2], "y": [1, 1], "kind": "scatter"},
    ]
    for name in ("p1.svg", "p2.svg"):
        emit_plot(series, tmp_path / name, title="t", xlabel="x", ylabel="y")
    data = (tmp_path / "p1.svg").read_bytes()
    assert data == (tmp_path / "p2.svg").read_bytes()
    assert data.lstrip().startswith(b"<?xml")
    emit_plot([], tmp_path / "empty.svg")
    emit_plot([{"label": "seg", "x": [0, 1], "y": [0, 1]}], tmp_path / "seg.svg")
    emit_plot([{"label": "ladder", "x": [1e-2, 1e-3, 1e-4], "y": [1e-3, 1e-4, 1e-5]}], tmp_path / "ll.svg",
              logx=True, logy=True)
    assert (tmp_path / "empty.svg").stat().st_size > 0
