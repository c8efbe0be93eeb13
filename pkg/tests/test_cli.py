import csv
import json

import numpy as np
import pytest

from geomech import cli
from geomech.errors import ColumnMissing, SchemaError
from geomech.scenario import bundled_names, bundled_scenario, parse_scenario


def _run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_run_bundled_harmonic(tmp_path, capsys):
    code, out, _ = _run(["run", "harmonic-basic", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "PASS" in out
    with open(tmp_path / "harmonic-basic.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "q1", "q2", "q3", "p1", "p2", "p3", "energy"]
    assert len(rows) > 10
    report = json.loads((tmp_path / "harmonic-basic.report.json").read_text())
    assert report["passed"] is True
    assert report["seed"] == 0
    assert {c["name"] for c in report["checks"]} >= {"energy_rk_rel", "closed_form_error"}
    timing = json.loads((tmp_path / "harmonic-basic.timing.json").read_text())
    assert timing["wall_time_s"] > 0


def test_run_from_file(tmp_path, capsys):
    scn = bundled_scenario("harmonic-basic").model_dump(mode="json")
    scn["name"] = "from-file"
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scn))
    code, _, _ = _run(["run", str(path), "--out", str(tmp_path / "out")], capsys)
    assert code == 0
    assert (tmp_path / "out" / "from-file.report.json").exists()


def test_malformed_json_exits_2_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out_dir = tmp_path / "out"
    code, _, err = _run(["run", str(bad), "--out", str(out_dir)], capsys)
    assert code == 2
    assert "SchemaError" in err
    assert not out_dir.exists()


def test_schema_violation_exits_2(tmp_path, capsys):
    scn = bundled_scenario("harmonic-basic").model_dump(mode="json")
    scn["surprise"] = 1
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scn))
    code, _, _ = _run(["run", str(path), "--out", str(tmp_path / "out")], capsys)
    assert code == 2
    with pytest.raises(SchemaError):
        parse_scenario(json.dumps({**scn, "surprise": None, "kind": "nope"}))


def test_failing_bound_exits_1(tmp_path, capsys):
    scn = bundled_scenario("harmonic-basic").model_dump(mode="json")
    scn["bounds"] = {"closed_form_error": 1e-30}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scn))
    code, out, _ = _run(["run", str(path), "--out", str(tmp_path)], capsys)
    assert code == 1
    assert "[FAIL] closed_form_error" in out


def test_list_and_describe(capsys):
    code, out, _ = _run(["list"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) >= 10
    code, out, _ = _run(["describe", "kepler-moser"], capsys)
    assert code == 0
    assert "F(q,p)" in out and "ds^2_h" in out
    code, _, err = _run(["describe", "no-such-thing"], capsys)
    assert code == 2
    assert "UnknownScenario" in err


def test_unknown_run_target(capsys):
    code, _, _ = _run(["run", "no-such-scenario"], capsys)
    assert code == 2


def test_bad_arguments(capsys):
    assert _run(["frobnicate"], capsys)[0] == 2
    assert _run(["run", "harmonic-basic", "--seed", "-1"], capsys)[0] == 2


def test_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GEOMECH_OUT", str(tmp_path / "env"))
    code, _, _ = _run(["run", "harmonic-basic"], capsys)
    assert code == 0
    assert (tmp_path / "env" / "harmonic-basic.report.json").exists()


def test_seed_override_is_recorded(tmp_path, capsys):
    code, _, _ = _run(["run", "contact-harmonic", "--out", str(tmp_path), "--seed", "42"], capsys)
    assert code == 0
    report = json.loads((tmp_path / "contact-harmonic.report.json").read_text())
    assert report["seed"] == 42
    assert report["scenario"]["seed"] == 42


def test_reports_are_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        assert _run(["run", "contact-harmonic", "--out", str(tmp_path / sub)], capsys)[0] == 0
    a = (tmp_path / "a" / "contact-harmonic.report.json").read_bytes()
    b = (tmp_path / "b" / "contact-harmonic.report.json").read_bytes()
    assert a == b


def test_plotdata_circle(tmp_path, capsys):
    assert _run(["run", "harmonic-basic", "--out", str(tmp_path)], capsys)[0] == 0
    path = str(tmp_path / "harmonic-basic.csv")
    code, out, _ = _run(["plotdata", path, "--cols", "q1,p1", "--max-points", "50", "--json"], capsys)
    assert code == 0
    data = json.loads(out)
    q1, p1 = np.array(data["q1"]), np.array(data["p1"])
    assert len(q1) <= 50
    # unit-frequency coordinate traces a circle in (q1, p1)
    r = q1**2 + p1**2
    assert np.ptp(r) <= 1e-6
    code, out, _ = _run(["plotdata", path, "--cols", "t,energy"], capsys)
    assert code == 0
    assert out.startswith("# t energy")


def test_plotdata_missing_columns(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("t,q1,p1,energy\n")
    with pytest.raises(ColumnMissing):
        cli.read_columns(empty, ["q1"])
    assert _run(["plotdata", str(empty)], capsys)[0] == 2
    assert _run(["plotdata", str(tmp_path / "absent.csv")], capsys)[0] == 2
    full = tmp_path / "full.csv"
    full.write_text("t,q1\n0,1\n")
    assert _run(["plotdata", str(full), "--cols", "q7"], capsys)[0] == 2


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_scenarios_validate(name):
    scn = bundled_scenario(name)
    assert scn.name == name
