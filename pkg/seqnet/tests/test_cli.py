import json

import pytest

from seqnet.cli import EXIT_CONFIG, EXIT_ERROR, EXIT_OK, EXIT_REPRODUCTION, main
from seqnet.services.graph_core import path_from_edits
from seqnet.services.structures import quasi_complete
from seqnet.utils.file_manager import format_matrix, format_path, parse_path


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


# Test reproduction exit codes
def test_reproduce_nsg_table(workdir, capsys):
    assert main(["reproduce", "nsg_table", "--output-dir", "report"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == "max=QS"
    assert out.startswith("QC,7.3369")
    assert (workdir / "report" / "nsg_table.json").exists()


def test_reproduce_tight_tolerance(workdir, capsys):
    assert main(["reproduce", "nsg_table", "--tolerance", "1e-6", "--output-dir", "report"]) == EXIT_REPRODUCTION
    assert "reproduction failed" in capsys.readouterr().err


def test_reproduce_table2_alias(workdir, capsys):
    assert main(["reproduce", "table2", "--output-dir", "report"]) == EXIT_OK
    assert capsys.readouterr().out.strip().splitlines()[-1] == "max=QS"
    assert (workdir / "report" / "nsg_table.json").exists()


# Test design commands
def test_greedy_command(workdir, capsys):
    assert main(["greedy", "--nodes", "5", "--horizon", "4", "--output-dir", "greedy"]) == EXIT_OK
    assert "final=QC" in capsys.readouterr().out
    assert (workdir / "greedy" / "summary.json").exists()
    assert len(parse_path((workdir / "greedy" / "path.txt").read_text(encoding="utf-8"))) == 4


def test_optimal_command(workdir, capsys):
    args = ["optimal", "--nodes", "6", "--horizon", "5", "--discount", "geometric:0.9",
            "--utility", "kb", "--phi", "0.05", "--restrict-nsg", "--out", "json", "--output-dir", "dp"]
    assert main(args) == EXIT_OK
    summary = json.loads((workdir / "dp" / "summary.json").read_text(encoding="utf-8"))
    assert summary["mode"] == "optimal"
    assert all(p["is_nsg"] for p in summary["periods"])
    assert not (workdir / "dp" / "utilities.csv").exists()


def test_delegate_command(workdir):
    assert main(["delegate", "--nodes", "5", "--horizon", "4", "--output-dir", "d"]) == EXIT_OK
    summary = json.loads((workdir / "d" / "summary.json").read_text(encoding="utf-8"))
    assert len(summary["agents"]) == 4
    assert summary["final_class"] == "QC"

    assert main(["delegate", "--nodes", "4", "--horizon", "4", "--agents", "1,1,1,1",
                 "--output-dir", "d2"]) == EXIT_ERROR


def test_evaluate_and_repair_commands(workdir, capsys):
    s = path_from_edits(6, [(0, 1), (2, 3), (0, 2), (4, 5)])
    (workdir / "path.txt").write_text(format_path(s), encoding="utf-8")

    assert main(["evaluate", "--path", "path.txt", "--discount", "geometric:0.5", "--output-dir", "e"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("value=")

    assert main(["repair", "--path", "path.txt", "--k-max", "6", "--output-dir", "r"]) == EXIT_OK
    repaired = parse_path((workdir / "r" / "repaired_path.txt").read_text(encoding="utf-8"))
    assert len(repaired) == 4
    rows = (workdir / "r" / "repair.csv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "t,k,before,after,delta"
    assert len(rows) == 1 + 4 * 5


def test_equilibrium_command(workdir):
    (workdir / "g.txt").write_text(format_matrix(quasi_complete(5, 6)), encoding="utf-8")
    args = ["equilibrium", "--graph", "g.txt", "--psi", "quad:1,0.1,0.01", "--transform", "square",
            "--output-dir", "eq"]
    assert main(args) == EXIT_OK
    report = json.loads((workdir / "eq" / "equilibrium.json").read_text(encoding="utf-8"))
    assert report["converged"]
    assert report["lambda_max"] == pytest.approx(3.0)
    assert (workdir / "eq" / "equilibrium.csv").read_text(encoding="utf-8").startswith("node,action\n")

    assert main(["equilibrium", "--graph", "g.txt", "--psi", "linear:1,0.5", "--output-dir", "eq"]) == EXIT_ERROR


def test_weighted_step_and_enumerate_commands(workdir):
    assert main(["weighted-step", "--nodes", "4", "--output-dir", "w"]) == EXIT_OK
    assert (workdir / "w" / "weighted_step.csv").read_text(encoding="utf-8").splitlines()[0] == "i,j,dw"

    assert main(["enumerate-nsg", "--nodes", "7", "--links", "8", "--output-dir", "nsg"]) == EXIT_OK
    index = (workdir / "nsg" / "index.csv").read_text(encoding="utf-8").splitlines()
    assert index[0] == "class_id,degree_sequence,b2_at_phi"
    assert len(index) == 5
    assert (workdir / "nsg" / "nsg_004.dot").exists()


# Test error exit codes
def test_engine_errors_exit_one(workdir, capsys):
    assert main(["greedy", "--nodes", "4", "--horizon", "7"]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("error:")
    assert main(["evaluate", "--path", "missing.txt"]) == EXIT_ERROR


def test_config_errors_exit_three(workdir, capsys):
    (workdir / "bad.ini").write_text("[experiment]\nnodes = 4\nhorizon = 2\nspeed = fast\n", encoding="utf-8")
    assert main(["run", "bad.ini"]) == EXIT_CONFIG
    assert "line 4" in capsys.readouterr().err


def test_run_command(workdir, capsys):
    (workdir / "ok.ini").write_text("[experiment]\nnodes = 5\nhorizon = 3\n", encoding="utf-8")
    assert main(["run", "ok.ini", "--output-dir", "run"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result["final_class"] == "QC"


def test_weighted_step_needs_a_base(workdir):
    with pytest.raises(SystemExit):
        main(["weighted-step"])
