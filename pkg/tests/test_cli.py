"""Tests for the node-sense command line."""
import json
import os
import sys

import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, ROOT)

from src.node_sense import __version__, position_prediction
from src.node_sense.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_mc_pi_prints_estimate(capsys):
    code, out, _ = run(capsys, "mc", "pi", "--samples", "1000", "--seed", "7")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"accepted", "total", "ratio", "estimate", "std_error"}
    assert payload["total"] == 1000
    assert out.count("\n") == 1


def test_repeated_runs_are_byte_identical(capsys):
    argv = ["mc", "pi", "--samples", "20000", "--seed", "3", "--streams", "4"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == second[0] == 0
    assert first[1] == second[1]


def test_global_seed_matches_subcommand_seed(capsys):
    _, local, _ = run(capsys, "mc", "pi", "--samples", "5000", "--seed", "9")
    _, global_, _ = run(capsys, "--seed", "9", "mc", "pi", "--samples", "5000")
    assert local == global_


def test_mc_integrate_constant(capsys):
    code, out, _ = run(capsys, "mc", "integrate", "--fn", "poly:2", "--b1", "0", "--b2", "3",
                       "--height", "2", "--samples", "100", "--seed", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["ratio"] == 1.0
    assert payload["estimate"] == 6.0


def test_mc_integrate_height_violation(capsys):
    code, _, err = run(capsys, "mc", "integrate", "--fn", "builtin:square", "--b1", "0", "--b2", "3",
                       "--height", "1", "--samples", "100")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "invalid_height_bound"


def test_mc_nodes_rejects_zero_total(capsys):
    code, _, err = run(capsys, "mc", "nodes", "--total", "0", "--fn", "builtin:identity",
                       "--b1", "0", "--b2", "1", "--height", "1", "--samples", "100")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "invalid_input"


def test_bad_sample_count_is_usage_error(capsys):
    code, _, err = run(capsys, "mc", "pi", "--samples", "0")
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "invalid_argument"


def test_mc_convergence_table(capsys, tmp_path):
    out_file = tmp_path / "rows.csv"
    code, out, _ = run(capsys, "mc", "convergence", "--sizes", "100,1000", "--seeds", "3",
                       "--out", str(out_file))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "samples,runs,mean_abs_error,median_abs_error,within_3sigma"
    assert len(lines) == 3
    assert len(out_file.read_text().strip().splitlines()) == 1 + 6


def test_coverage_csv(capsys, tmp_path):
    cells = write(tmp_path / "cells.csv", "id,x,y\na,3,4\nb,0,0\n\nc,30,0\n")
    code, out, _ = run(capsys, "coverage", "--center", "0,0", "--radius", "10", "--cells", cells)
    assert code == 0
    assert out.splitlines() == ["id,score,membership", "a,0.25,inside", "b,0.0,inside", "c,9.0,outside"]


def test_coverage_json_output(capsys, tmp_path):
    cells = write(tmp_path / "cells.csv", "id,x,y\na,3,4\n")
    code, out, _ = run(capsys, "--output", "json", "coverage", "--center", "0,0", "--radius", "5",
                       "--cells", cells)
    assert code == 0
    assert json.loads(out) == [{"id": "a", "score": 1.0, "membership": "boundary"}]


def test_coverage_bad_row(capsys, tmp_path):
    cells = write(tmp_path / "cells.csv", "id,x,y\na,3,four\n")
    code, _, err = run(capsys, "coverage", "--center", "0,0", "--radius", "5", "--cells", cells)
    assert code == 1
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "csv_format"
    assert "line 2" in error["message"]


def test_ips(capsys):
    code, out, _ = run(capsys, "ips", "--total", "10", "--cells", "3", "--blocks")
    assert code == 0
    payload = json.loads(out)
    assert (payload["per_cell"], payload["remainder"]) == (3, 1)
    assert payload["blocks"][1] == ["10.0.0.3", "10.0.0.4", "10.0.0.5"]
    assert payload["reserve"] == ["10.0.0.9"]


def test_fit_vertical(capsys, tmp_path):
    points = write(tmp_path / "points.csv", "x,y\n0,1\n1,3\n2,5\n")
    code, out, _ = run(capsys, "fit", "--method", "vertical", "--input", points)
    assert code == 0
    payload = json.loads(out)
    assert list(payload) == ["method", "a", "b", "r", "r2", "se_a", "se_b", "s", "residual", "n",
                             "vertical_line", "strength", "direction"]
    assert payload["a"] == pytest.approx(1.0)
    assert payload["b"] == pytest.approx(2.0)
    assert payload["n"] == 3
    assert (payload["strength"], payload["direction"]) == ("perfect", "positive")


def test_fit_identical_x_is_domain_error(capsys, tmp_path):
    points = write(tmp_path / "points.csv", "x,y\n2,1\n2,3\n2,5\n")
    code, out, err = run(capsys, "fit", "--method", "vertical", "--input", points)
    assert code == 1
    assert out == ""
    assert json.loads(err.strip().splitlines()[-1])["error"] == "degenerate_vertical"


def test_fit_perpendicular_vertical_line(capsys, tmp_path):
    points = write(tmp_path / "points.csv", "x,y\n2,1\n2,3\n2,5\n")
    code, out, _ = run(capsys, "fit", "--method", "perpendicular", "--input", points)
    assert code == 0
    payload = json.loads(out)
    assert payload["vertical_line"] is True
    assert payload["b"] is None
    assert payload["a"] == 2.0


def test_fit_emit_line(capsys, tmp_path):
    points = write(tmp_path / "points.csv", "x,y\n0,1\n1,3\n2,5\n")
    line_file = tmp_path / "line.csv"
    code, _, _ = run(capsys, "fit", "--input", points, "--emit-line", str(line_file),
                     "--range", "0:4", "--steps", "5")
    assert code == 0
    lines = line_file.read_text().splitlines()
    assert lines[0] == "x,y"
    assert len(lines) == 6


def test_exp_fit_and_eval(capsys, tmp_path):
    series = write(tmp_path / "series.csv", "t,y\n1,2\n2,4\n3,8\n")
    code, out, _ = run(capsys, "exp", "fit", "--model", "growth-decay", "--input", series)
    assert code == 0
    payload = json.loads(out)
    assert payload["kind"] == "growth"
    assert payload["scale"] == pytest.approx(1.0)

    code, out, _ = run(capsys, "exp", "eval", "--kind", "growth", "--scale", "2", "--rate", "0.5",
                       "--t", "2")
    assert code == 0
    assert float(out) == pytest.approx(5.436563657)


def test_exp_fit_zero_rate(capsys, tmp_path):
    series = write(tmp_path / "series.csv", "t,y\n1,3\n2,3\n")
    code, _, err = run(capsys, "exp", "fit", "--model", "growth-decay", "--input", series)
    assert code == 1
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "zero_rate"
    assert error["scale"] == pytest.approx(3.0)


def test_exp_curve_long_format(capsys):
    code, out, _ = run(capsys, "exp", "curve", "--kind", "modified", "--scale", "100",
                       "--rate", "0.1,0.5", "--t1", "0", "--t2", "10", "--steps", "11")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "rate,t,value"
    assert len(lines) == 1 + 22
    assert lines[1] == "0.1,0.0,0.0"


def test_predict_commands(capsys):
    code, out, _ = run(capsys, "predict", "midway", "--t1", "0", "--p1", "2", "--t2", "2", "--p2", "8")
    assert code == 0
    assert json.loads(out) == {"t": 1.0, "p": 4.0}

    code, out, _ = run(capsys, "predict", "means", "--t1", "2", "--t2", "8")
    assert json.loads(out) == {"am": 5.0, "hm": 3.2, "gm": 4.0}

    code, _, err = run(capsys, "predict", "extreme", "--t1", "1", "--p1", "2", "--t2", "1", "--p2", "3")
    assert code == 1


def test_sim(capsys, tmp_path):
    events = write(tmp_path / "events.csv",
                   "time,op,cell,node\n0,join,0,A\n1,join,0,B\n2,join,0,C\n3,leave,0,A\n4,join,1,D\n")
    log_file = tmp_path / "log.csv"
    code, out, _ = run(capsys, "sim", "--events", events, "--ips", "8", "--cells", "2",
                       "--log", str(log_file))
    assert code == 0
    payload = json.loads(out)
    assert payload["events"] == 5
    assert payload["cells"][0]["leader"] == "C"
    assert payload["cells"][0]["version"] == 3
    assert payload["cells"][1]["table"] == {"D": "10.0.0.4"}
    log = log_file.read_text().splitlines()
    assert log[0] == "time,op,cell,node,result,leader,version,ip"
    assert log[4] == "3,leave,0,A,handoff,C,3,10.0.0.0"


def test_sim_failure_reports_event(capsys, tmp_path):
    events = write(tmp_path / "events.csv", "time,op,cell,node\n0,leave,0,A\n")
    code, _, err = run(capsys, "sim", "--events", events, "--ips", "4", "--cells", "1")
    assert code == 1
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "not_a_member"
    assert error["event_index"] == 0


def test_unknown_subcommand(capsys):
    code, _, _ = run(capsys, "teleport")
    assert code == 2


def test_unknown_flag(capsys):
    code, _, _ = run(capsys, "mc", "pi", "--samples", "10", "--turbo")
    assert code == 2


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert __version__ in out
    assert "Philox" in out


def test_info(capsys):
    code, out, _ = run(capsys, "info")
    assert code == 0
    payload = json.loads(out)
    assert payload["version"] == __version__
    assert payload["sampling"]["chunk_size"] > 0
    assert payload["issues"] == []


def test_predict_midway_with_huge_positions(capsys):
    code, out, _ = run(capsys, "predict", "midway", "--t1", "0", "--p1", "1e200", "--t2", "2", "--p2", "1e200")
    assert code == 0
    payload = json.loads(out)
    assert payload["t"] == 1.0
    assert payload["p"] == pytest.approx(1e200, rel=1e-15)


def test_predict_extreme_overflow_is_domain_error(capsys):
    code, out, err = run(capsys, "predict", "extreme", "--t1", "0", "--p1", "1e-200", "--t2", "1", "--p2", "1e200")
    assert code == 1
    assert out == ""
    assert json.loads(err.strip().splitlines()[-1])["error"] == "overflow"


def test_invalid_result_is_not_a_usage_error(capsys, monkeypatch):
    def broken(s1, s2):
        return position_prediction.PositionSample(t=0.0, p=float("inf"))

    monkeypatch.setattr(position_prediction, "predict_midway", broken)
    code, _, err = run(capsys, "predict", "midway", "--t1", "0", "--p1", "2", "--t2", "2", "--p2", "8")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "invalid_result"


def test_non_utf8_input_is_csv_error(capsys, tmp_path):
    points = tmp_path / "points.csv"
    points.write_bytes(b"x,y\n0,1\n1,\xff3\n")
    code, out, err = run(capsys, "fit", "--input", str(points))
    assert code == 1
    assert out == ""
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "csv_format"
    assert error["message"].startswith("line 3:")


@pytest.mark.parametrize("argv", [
    ("mc", "pi", "--sam", "100"),
    ("--out", "csv", "info"),
    ("fit", "--inp", "points.csv"),
])
def test_abbreviated_flags_are_rejected(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2
