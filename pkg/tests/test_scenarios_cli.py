import csv
import json

import numpy as np
import pytest

from navgeom.cli import main
from navgeom.errors import IoError, ParseError, ValidationError
from navgeom.metric import WindKind
from navgeom.report import csv_text, to_json, write_json
from navgeom.scenarios import (
    SuiteReport,
    build,
    builtin_scenarios,
    emit_scenario,
    get_builtin,
    load_scenario,
    make_record,
    run_suite,
)


# -- scenarios ------------------------------------------------------------------


def test_builtins_build():
    names = [s.name for s in builtin_scenarios()]
    assert len(names) == len(set(names))
    assert build(get_builtin("funk_n2")).mild
    assert build(get_builtin("funk_n2")).wind.declared_sigma == 1.0
    assert build(get_builtin("constant_wind")).wind.declared_sigma == 0.0
    assert build(get_builtin("strong_wind_cone")).metric.wind_class.kind == WindKind.STRONG


def test_load_minimal_document():
    s = load_scenario("name: tiny\ndim: 2\n")
    assert s.wind == "zero" and s.volume == "bh"
    assert build(s).metric.wind_class.kind == WindKind.MILD


def test_load_flags_critical_wind():
    s = load_scenario("name: crit\ndim: 2\nwind: constant [1.0, 0.0]\n")
    assert build(s).metric.wind_class.kind == WindKind.CRITICAL


@pytest.mark.parametrize("doc", [
    "name: a\ndim: 1\n",
    "name: a\ndim: 2\ncolour: red\n",
    "name: a\ndim: two\n",
    "dim: 2\n",
    "name: a\ndim: 2\nvolume: lebesgue\n",
    "name: a\ndim: 2\ndomain: {kind: ball, radius: 1, shape: round}\n",
])
def test_validation_errors(doc):
    with pytest.raises(ValidationError):
        load_scenario(doc)


def test_bad_wind_rejected_on_build():
    with pytest.raises(ValidationError):
        build(load_scenario("name: a\ndim: 2\nwind: constant [1.0]\n"))


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        load_scenario("name: a\ndim: 2\nwind: [1, 2\n")
    assert info.value.line is not None and info.value.line >= 3
    assert info.value.column is not None


@pytest.mark.parametrize("s", builtin_scenarios(), ids=lambda s: s.name)
def test_emit_round_trip(s):
    assert load_scenario(emit_scenario(s)) == s


# -- suite ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def funk_report():
    return run_suite(get_builtin("funk_n2"), check_filter="transfer", seed=3)


def test_suite_passes_on_funk(funk_report):
    assert funk_report.records
    assert funk_report.ok
    assert all(r.recompute() == r.passed for r in funk_report.records)


def test_suite_euclidean_all_checks():
    rep = run_suite(get_builtin("euclidean_n2"), seed=0)
    assert rep.ok, [r for r in rep.records if not r.passed and not r.informational]


def test_filter_keeps_matching_ids(funk_report):
    assert all("transfer" in r.check_id for r in funk_report.records)


def test_suite_is_deterministic():
    a = run_suite(get_builtin("constant_wind"), check_filter="metric", seed=5)
    b = run_suite(get_builtin("constant_wind"), check_filter="metric", seed=5)
    assert to_json(a.as_dict()) == to_json(b.as_dict())


def test_tol_override_fails_everything_at_negative_tol():
    rep = run_suite(get_builtin("funk_n2"), check_filter="homogeneity", tol=-1.0)
    assert rep.records and not rep.ok


def test_summary_counts():
    recs = [
        make_record("s", "a", "x", 1.0, 1.0, 0.1),
        make_record("s", "b", "x", 2.0, 1.0, 0.1),
        make_record("s", "c", "x", 2.0, 1.0, 0.1, informational=True),
    ]
    assert SuiteReport(recs).summary == {"total": 2, "passed": 1, "failed": 1, "informational": 1}


# -- report writers ------------------------------------------------------------------


def test_empty_report_json():
    doc = json.loads(to_json(SuiteReport([]).as_dict()))
    assert doc["summary"]["total"] == 0 and doc["records"] == []
    assert "runtime" not in doc


def test_json_non_finite_is_null():
    assert json.loads(to_json({"x": float("nan"), "y": np.inf})) == {"x": None, "y": None}


def test_csv_full_precision():
    text = csv_text(["v"], [[0.1 + 0.2]])
    row = list(csv.reader(text.splitlines()))[1]
    assert float(row[0]) == 0.1 + 0.2
    assert row[0] == "0.30000000000000004"


def test_write_error(tmp_path):
    with pytest.raises(IoError):
        write_json({}, tmp_path / "missing" / "x.json")


# -- command line ----------------------------------------------------------------------


def test_cli_scenario_list(capsys):
    assert main(["scenario", "list", "--json"]) == 0
    assert {d["name"] for d in json.loads(capsys.readouterr().out)} >= {"funk_n2", "euclidean_n3"}


def test_cli_validate_file(tmp_path, capsys):
    path = tmp_path / "s.yaml"
    path.write_text("name: crit\ndim: 2\nwind: constant [1.0, 0.0]\n")
    assert main(["scenario", "validate", str(path), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["wind_class"]["kind"] == "critical"
    path.write_text("name: a\ndim: 1\n")
    assert main(["scenario", "validate", str(path)]) == 2


def test_cli_eval_metric(capsys):
    assert main(["eval", "metric", "constant_wind", "--point=0,0", "--vector=1,0"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2 / 3, abs=1e-12)


def test_cli_curvature_nonlinear(capsys):
    assert main(["curvature", "nonlinear", "funk_n2", "--point=0.5,0", "--function", "radius", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert list(out.values())[0] == pytest.approx(0.0, abs=1e-5)


def test_cli_geodesic_writes_polyline(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["geodesic", "direct", "funk_n2", "--point=0.1,0", "--vector=0,1", "--unit", "--time=0.3", f"--out={out}"]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["path", "t", "x0", "x1"] and len(rows) > 2


def test_cli_verify_and_exit_codes(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "funk_n2", "--filter", "homogeneity", f"--out={out}"]) == 0
    assert json.loads(out.read_text())["summary"]["failed"] == 0
    assert main(["verify", "funk_n2", "--filter", "homogeneity", "--tol=-1"]) == 1
    assert main(["verify", "nope"]) == 2
    assert main(["verify", "funk_n2", "--filter", "homogeneity", f"--out={tmp_path}/no/dir.json"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_cli_strong_wind_branch_error(capsys):
    code = main(["eval", "metric", "strong_wind_cone", "--point=0,0", "--vector=-1,0"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_cli_emit_scenario_round_trip(tmp_path):
    out = tmp_path / "f.yaml"
    assert main(["emit", "scenario", "funk_n3", f"--out={out}"]) == 0
    assert load_scenario(out.read_text()) == get_builtin("funk_n3")


def test_seed_environment(monkeypatch, capsys):
    monkeypatch.setenv("NAVGEOM_SEED", "7")
    assert main(["volume", "ht", "euclidean_n2", "--point=0,0", "--samples=2000", "--json"]) == 0
    a = capsys.readouterr().out
    assert main(["volume", "ht", "euclidean_n2", "--point=0,0", "--samples=2000", "--seed=7", "--json"]) == 0
    assert capsys.readouterr().out == a
