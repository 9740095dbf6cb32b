from __future__ import annotations

import json

import pytest

from bundlelink.cli import SCHEMA, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def test_check_preset_passes(capsys):
    code, rep = run_json(capsys, "check", "preset:example1?A=1", "--bundle", "orthogonal")
    assert code == 0 and rep["ok"] and rep["schema"] == SCHEMA
    assert rep["result"]["report"]["pass"]


def test_check_planar_circle_fails(capsys, tmp_path):
    p = tmp_path / "circle.json"
    p.write_text(json.dumps({"dim": 4, "coords": [{"cos": {"1": 1}}, {"sin": {"1": 1}}, {}, {}]}))
    code, rep = run_json(capsys, "check", str(p), "--bundle", "orthogonal")
    assert code == 1 and not rep["ok"]
    assert rep["result"]["error"] == "RankDeficiencyError"


def test_malformed_json_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 4,\n "coords": [\n')
    code, _, err = run(capsys, "check", str(p))
    assert code == 2 and "line" in err


def test_schema_violation_names_field(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"dim": 3, "coords": [{"cos": {"one": 1}}, {}, {}]}))
    code, rep = run_json(capsys, "check", str(p))
    assert code == 2 and "coords[0].cos" in rep["message"]


@pytest.mark.parametrize("grid", ["100", "32", "8192"])
def test_grid_bounds(capsys, grid):
    code, _, err = run(capsys, "selflink", "preset:example1?A=1", "--grid", grid)
    assert code == 2 and "--grid" in err


def test_selflink_intersection_table(capsys):
    code, rep = run_json(capsys, "selflink", "preset:example1?A=1.3", "--bundle", "orthogonal",
                         "--method", "intersection")
    body = rep["result"]
    assert code == 0 and body["value"] == 0 and len(body["intersections"]) == 2
    row = body["intersections"][0]
    assert {"t", "s", "fiber_coords", "sign_factor", "index", "contribution"} <= set(row)


def test_selflink_all_methods_text(capsys):
    code, out, _ = run(capsys, "selflink", "preset:example1?A=1", "--bundle", "osculating", "--method", "all")
    assert code == 0
    assert "value=1  agree" in out and out.count("+0.5") + out.count("-0.5") == 4
    assert "tol=0.05" in out  # defaults printed in every report


def test_json_round_trip(capsys):
    code, out, _ = run(capsys, "selflink", "preset:example2?A=1.6", "--bundle", "osculating",
                       "--method", "intersection", "--format", "json")
    rep = json.loads(out)
    assert json.loads(json.dumps(rep)) == rep
    assert rep["result"]["value"] == 3 and rep["settings"]["seeds"] == 128


def test_linking_hopf(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps({"dim": 3, "coords": [{"cos": {"1": 1}}, {"sin": {"1": 1}}, {}]}))
    b.write_text(json.dumps({"dim": 3, "coords": [{"const": 1, "cos": {"1": 1}}, {}, {"sin": {"1": 1}}]}))
    code, rep = run_json(capsys, "linking", str(a), str(b), "--method", "all", "--grid", "128")
    assert code == 0 and rep["result"]["value"] == -1
    assert set(rep["result"]["methods"]) == {"integral", "intersection", "gauss"}


def test_paper_table_intersections(capsys):
    code, rep = run_json(capsys, "paper-table", "--method", "intersection")
    assert code == 0 and rep["result"]["passed"] == 6
    assert [r["roots"] for r in rep["result"]["rows"]] == [4, 2, 4, 2, 6, 6]


def test_paper_table_coarse_grid_reports(capsys):
    # a coarse grid may fail; either way every cell reports a value or a reason
    code, rep = run_json(capsys, "paper-table", "--method", "integral", "--grid", "64")
    for row in rep["result"]["rows"]:
        assert row["values"]["integral"] is not None or row["errors"]
    assert code == (0 if rep["result"]["passed"] == 6 else 1)
