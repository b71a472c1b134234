import json
import logging

import pytest

from intmin import cli
from intmin.errors import (AmbiguousYes, EmptySlice, InfeasibleSlab, MalformedInstance,
                           MalformedOracle, NonConvergence, NonTermination, OracleInconsistency)
from intmin.transcript import Transcript


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def solve(tmp_path, instance, *flags):
    out = tmp_path / "report.json"
    code = cli.run(["solve", "--instance", instance, "--report", str(out), *flags])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_solve_quadratic(tmp_path):
    inst = write(tmp_path, "quad_3_-2.json", {"type": "quadratic", "target": [3, -2]})
    code, rep = solve(tmp_path, inst, "--radius", "8")
    assert code == 0
    assert rep["schema"] == "v1"
    assert rep["minimizer"] == [3, -2] and rep["objectiveValue"] == 0
    assert rep["config"]["R"] == 8
    assert set(rep["counts"]) >= {"soCalls", "eoCalls", "blocks", "dimReductions", "newtonIters", "lllCalls"}
    assert all(v >= 0 for v in rep["counts"].values())
    assert rep["potentials"][0]["phase"] == "init"
    assert len(rep["rho"]) == len([e for e in rep["events"]]) or rep["rho"]
    assert rep["wallTime"] >= 0


def test_solve_cut2(tmp_path):
    inst = write(tmp_path, "cut2.json", {"type": "table", "n": 2, "values": [0, 1, 1, 0]})
    code, rep = solve(tmp_path, inst)
    assert code == 0
    assert rep["objectiveValue"] == 0
    assert rep["minimizingSet"] in ([], [1, 2])
    assert rep["counts"]["eoCalls"] == 2 * rep["counts"]["soCalls"]


def test_solve_graph_cut(tmp_path):
    inst = write(tmp_path, "g.json", {"type": "graph_cut", "n": 3, "edges": [[1, 2, 2], [2, 3, 5]]})
    code, rep = solve(tmp_path, inst)
    assert code == 0 and rep["objectiveValue"] == 0
    assert rep["counts"]["eoCalls"] == 3 * rep["counts"]["soCalls"]


@pytest.mark.parametrize("content", [
    '{"type": "graph_cut", "n": 2}', "not json", '{"type": "quadratic", "target": [0.5]}', "[]",
])
def test_solve_malformed(tmp_path, content):
    code, rep = solve(tmp_path, write(tmp_path, "malformed.json", content))
    assert code == 2 and rep is None


def test_solve_missing_file(tmp_path):
    assert solve(tmp_path, str(tmp_path / "absent.json"))[0] == 2


def test_solve_nontermination(tmp_path):
    inst = write(tmp_path, "q.json", {"type": "quadratic", "target": [5, -7, 3]})
    code, rep = solve(tmp_path, inst, "--max-blocks", "1")
    assert code == 4
    assert rep["error"] == "NonTermination" and rep["counts"]["blocks"] == 1


def test_solve_writes_stdout(tmp_path, capsys):
    inst = write(tmp_path, "q.json", {"type": "quadratic", "target": [1]})
    assert cli.run(["solve", "--instance", inst, "--radius", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["minimizer"] == [1]


def test_report_determinism(tmp_path):
    inst = write(tmp_path, "q.json", {"type": "quadratic", "target": [2, -3, 1]})
    texts = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert cli.run(["solve", "--instance", inst, "--report", str(out)]) == 0
        data = json.loads(out.read_text())
        data.pop("wallTime")
        texts.append(json.dumps(data, sort_keys=True))
    assert texts[0] == texts[1]


@pytest.mark.parametrize("exc, code", [
    (MalformedInstance("x"), 2),
    (OracleInconsistency("x"), 3),
    (MalformedOracle("x"), 3),
    (AmbiguousYes([0.5]), 3),
    (InfeasibleSlab("x"), 3),
    (NonTermination("x", Transcript()), 4),
    (NonConvergence(1e-3, 500), 4),
    (EmptySlice("x"), 4),
])
def test_exit_codes(exc, code):
    assert cli.exit_code_for(exc) == code


def test_parse_sizes():
    assert cli.parse_sizes("3..6") == [3, 4, 5, 6]
    assert cli.parse_sizes("2,5") == [2, 5]
    for bad in ("x", "0..2", ""):
        with pytest.raises(Exception):
            cli.parse_sizes(bad)


def test_bench_quad(tmp_path, capsys):
    out = tmp_path / "bench.json"
    assert cli.run(["bench", "--family", "quad", "--sizes", "2..3", "--seeds", "2",
                    "--radius", "4", "--report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "log-log slope" in text
    rep = json.loads(out.read_text())
    assert len(rep["runs"]) == 4 and all(r["exact"] for r in rep["runs"])
    assert rep["fit"]["sizes"] == [2, 3]


def test_bench_sfm(capsys):
    assert cli.run(["bench", "--family", "sfm-cut", "--sizes", "3", "--seeds", "2"]) == 0
    assert "C in SO" in capsys.readouterr().out


def test_verify_suite(capsys):
    assert cli.run(["verify", "--suite", "lll"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2 and "[FAIL]" not in out


def test_bad_subcommand():
    with pytest.raises(SystemExit) as err:
        cli.run(["frobnicate"])
    assert err.value.code == 2


@pytest.mark.parametrize("value, level", [("off", logging.CRITICAL + 1), ("info", logging.INFO),
                                          ("trace", logging.DEBUG), ("bogus", logging.CRITICAL + 1)])
def test_log_levels(value, level):
    cli.configure_logging(value)
    assert logging.getLogger("intmin").level == level
