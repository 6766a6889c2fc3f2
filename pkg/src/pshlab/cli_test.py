import json

import pytest

from pshlab.cli import EXIT_OK, EXIT_USAGE, build_parser, main, scenario_from_args

PHI = json.dumps(
    {
        "kind": "log-sum",
        "alpha": 1.0,
        "gens": [{"dim": 2, "terms": [{"exp": [2, 0]}]}, {"dim": 2, "terms": [{"exp": [0, 3]}]}],
    }
)


# ##################################################################
# test lct prints the report
def test_lct_prints_the_report(capsys):
    code = main(["lct", "--phi", PHI, "--n", "2", "--x", "0", "0"])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["results"][0]["payload"]["value"] == pytest.approx(5 / 6)


# ##################################################################
# test complex coordinates parse
def test_complex_coordinates_parse():
    args = build_parser().parse_args(["lelong", "--phi", PHI, "--n", "2", "--x", "0.5+0.1j", "0"])
    task = scenario_from_args(args).tasks[0]
    assert task.x[0] == (0.5, 0.1)


# ##################################################################
# test failed task exits two
def test_failed_task_exits_two(capsys):
    assert main(["lelong", "--phi", PHI, "--n", "2", "--x", "0"]) == 2
    report = json.loads(capsys.readouterr().out)
    assert report["results"][0]["success"] is False


# ##################################################################
# test bad json exits one
def test_bad_json_exits_one(capsys):
    assert main(["lelong", "--phi", "{oops", "--n", "2", "--x", "0", "0"]) == EXIT_USAGE
    assert "line 1" in capsys.readouterr().err


# ##################################################################
# test usage error exits one
def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as info:
        main(["lct"])
    assert info.value.code == EXIT_USAGE


# ##################################################################
# test run writes json and csv
def test_run_writes_json_and_csv(tmp_path):
    scenario = {
        "schema_version": 1,
        "families": {"mono": {"phi": json.loads(PHI), "n": 2}},
        "tasks": [
            {"op": "scan", "family": "mono", "kind": "E", "c": 2.0, "grid": {"axes": [[-0.5, 0, 0.5], [0]]}},
        ],
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario), encoding="utf-8")
    out, table = tmp_path / "report.json", tmp_path / "cloud.csv"
    assert main(["run", str(path), "--out", str(out), "--csv", str(table), "--threads", "2"]) == EXIT_OK
    assert json.loads(out.read_text(encoding="utf-8"))["results"][0]["success"]
    assert len(table.read_text(encoding="utf-8").splitlines()) == 4


# ##################################################################
# test run of a missing scenario exits one
def test_run_of_a_missing_scenario_exits_one(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_USAGE
    assert "cannot read" in capsys.readouterr().err


# ##################################################################
# test catalog rows for the wang family
def test_catalog_rows_for_the_wang_family(capsys):
    assert main(["catalog", "--example", "wang", "--c", "1", "--depth", "2"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)["results"][0]["payload"]
    assert len(payload["rows"]) == 3


# ====================================================================
# family configs and grid specs


# ##################################################################
# family file
# a scenario-shaped config with two families; the first is the default
def family_file(tmp_path):
    line = {"kind": "log-sum", "alpha": 1.0, "gens": [{"dim": 2, "terms": [{"exp": [1, 0]}]}]}
    moving = [{"exp": [1, 0]}, {"exp": [0, 1], "coef": -1}]
    diag = {"kind": "log-sum", "alpha": 1.0, "gens": [{"dim": 2, "terms": moving}]}
    config = {
        "schema_version": 1,
        "families": {
            "mono": {"phi": json.loads(PHI), "n": 2},
            "line": {"phi": line, "n": 2},
            "diag": {"phi": diag, "n": 1, "m": 1},
        },
    }
    path = tmp_path / "families.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return str(path)


# ##################################################################
# test config picks a family by name
def test_config_picks_a_family_by_name(tmp_path, capsys):
    path = family_file(tmp_path)
    assert main(["lct", "--config", path, "--x", "0", "0"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["results"][0]["payload"]["value"] == pytest.approx(5 / 6)
    assert main(["lct", "--config", path, "--name", "line", "--x", "0", "0"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["results"][0]["payload"]["value"] == 1.0


# ##################################################################
# test inline family config
def test_inline_family_config(capsys):
    family = json.dumps({"phi": json.loads(PHI), "n": 2})
    assert main(["lelong", "--family", family, "--x", "0", "0"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["results"][0]["payload"]["value"] == 2.0


# ##################################################################
# test bad family configs exit one
# unknown names, missing files and schema errors are all usage errors
def test_bad_family_configs_exit_one(tmp_path, capsys):
    path = family_file(tmp_path)
    assert main(["lct", "--config", path, "--name", "nope", "--x", "0", "0"]) == EXIT_USAGE
    assert "unknown family 'nope'" in capsys.readouterr().err
    assert main(["lct", "--config", str(tmp_path / "missing.json"), "--x", "0"]) == EXIT_USAGE
    assert "cannot read family config" in capsys.readouterr().err
    assert main(["lct", "--config", json.dumps({"phi": json.loads(PHI)}), "--x", "0", "0"]) == EXIT_USAGE
    assert "families.cli.n" in capsys.readouterr().err


# ##################################################################
# test phi and config are exclusive
def test_phi_and_config_are_exclusive(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["lct", "--config", family_file(tmp_path), "--phi", PHI, "--n", "2", "--x", "0", "0"])
    assert info.value.code == EXIT_USAGE


# ##################################################################
# test tolerances reach the tasks
def test_tolerances_reach_the_tasks(tmp_path):
    path = family_file(tmp_path)
    parser = build_parser()
    cse = scenario_from_args(parser.parse_args(["cse", "--config", path, "--x", "0", "0", "--tol", "0.1"]))
    assert cse.tasks[0].tol == 0.1
    lelong = scenario_from_args(parser.parse_args(["lelong", "--config", path, "--x", "0", "0", "--tol", "0.2"]))
    assert lelong.tasks[0].tol == 0.2
    args = parser.parse_args(["restriction-scan", "--config", path, "--name", "diag", "--tol", "1e-6"])
    assert scenario_from_args(args).tasks[0].tol == 1e-6


# ##################################################################
# test lelong tolerance marks loose fits inconclusive
# every radial fit carries some uncertainty, so 1e-15 is never met
def test_lelong_tolerance_marks_loose_fits_inconclusive(capsys):
    argv = ["lelong", "--phi", PHI, "--n", "2", "--x", "0", "0", "--method", "radial", "--tol", "1e-15"]
    assert main(argv) == 2
    result = json.loads(capsys.readouterr().out)["results"][0]
    assert result["success"] is True
    assert result["inconclusive"] is True
    assert "exceeds tolerance" in result["notes"][0]


# ##################################################################
# test grid specs
# an integer is points per axis and a nested list gives the axes
def test_grid_specs(tmp_path):
    path = family_file(tmp_path)
    parser = build_parser()
    boxed = scenario_from_args(parser.parse_args(["scan", "--family", path, "--kind", "E", "--c", "1", "--grid", "5"]))
    assert boxed.tasks[0].grid.points == 5
    argv = ["scan", "--family", path, "--kind", "E", "--c", "1", "--grid", "[[0, 0.5], [0]]"]
    assert scenario_from_args(parser.parse_args(argv)).tasks[0].grid.axes == [[0.0, 0.5], [0.0]]
    argv = ["scan", "--family", path, "--kind", "E", "--c", "1", "--grid", '{"points": 7, "shrink": 0.5}']
    assert scenario_from_args(parser.parse_args(argv)).tasks[0].grid.shrink == 0.5


# ##################################################################
# test scan writes a cloud csv
def test_scan_writes_a_cloud_csv(tmp_path):
    table = tmp_path / "cloud.csv"
    argv = ["scan", "--family", family_file(tmp_path), "--kind", "E", "--c", "2", "--grid", "[[-0.5, 0, 0.5], [0]]"]
    assert main(argv + ["--out", str(table)]) == EXIT_OK
    lines = table.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("task,kind,c,index,coords")


# ##################################################################
# test bergman writes kernel samples
# one evaluated point plus four grid points; K vanishes on the pole z = w
def test_bergman_writes_kernel_samples(tmp_path):
    table = tmp_path / "kernel.csv"
    argv = ["bergman", "--family", family_file(tmp_path), "--name", "diag", "--c", "1", "--cap", "4"]
    argv += ["--grid", "[[0, 0.5], [0, 0.5]]", "--at", "0.5:0", "--out", str(table)]
    assert main(argv) == EXIT_OK
    lines = table.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "re_z,im_z,re_w,im_w,K,logK"
    assert len(lines) == 6
    assert sum(line.endswith(",-inf") for line in lines[1:]) == 2
    assert lines[1].startswith("0.5,0,0,0,")


# ##################################################################
# test bergman cap reaches the task
def test_bergman_cap_reaches_the_task(tmp_path):
    args = build_parser().parse_args(["bergman", "--family", family_file(tmp_path), "--c", "0.5", "--cap", "3"])
    assert scenario_from_args(args).tasks[0].degree_cap == 3


# ##################################################################
# test catalog grid values
# comma-separated or a JSON list, and csv output keeps one row per value
def test_catalog_grid_values(tmp_path):
    parser = build_parser()
    listed = scenario_from_args(parser.parse_args(["catalog", "--example", "li", "--grid", "[0, 0.5]"]))
    assert listed.tasks[0].grid == [0.0, 0.5]
    table = tmp_path / "rows.csv"
    assert main(["catalog", "--example", "li", "--grid", "0,0.5", "--out", str(table)]) == EXIT_OK
    lines = table.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert "w" in lines[0].split(",")
