import json
import os

import pytest

from seqnet.core.errors import ConfigError, InvalidParameterError, ReproductionError
from seqnet.experiments import reproduce_nsg_table, run_config, run_nsg_table, nsg_table_csv, weighted_step_path
from seqnet.services.structures import is_weighted_nsg
from seqnet.utils.config_parser import parse_experiment_config

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "configs")


def write_config(tmp_path, body):
    path = tmp_path / "experiment.ini"
    path.write_text(body, encoding="utf-8")
    return str(path)


# Test the NSG comparison table
def test_run_nsg_table():
    report = run_nsg_table()
    assert report.passed
    assert report.maximizer == "QS"
    assert [row.label for row in report.rows] == ["QC", "QS", "G_hat", "G_bar"]
    rows = {row.label: row for row in report.rows}
    assert rows["QS"].deviation <= 5e-5
    assert rows["QC"].degrees == [4, 4, 3, 3, 2, 0, 0]
    assert all(set(row.creation) <= {"d", "i"} for row in report.rows)


def test_run_nsg_table_tight_tolerance_fails():
    report = run_nsg_table(1e-6)
    assert not report.passed
    assert report.maximizer == "QS"

    with pytest.raises(InvalidParameterError):
        run_nsg_table(0.0)


def test_nsg_table_csv():
    lines = nsg_table_csv(run_nsg_table()).splitlines()
    assert lines[0] == "label,creation,computed,published,deviation,ok,maximizer"
    assert len(lines) == 5
    assert lines[2].startswith("QS,") and lines[2].endswith(",true")


def test_reproduce_nsg_table(tmp_path):
    report = reproduce_nsg_table(output_dir=str(tmp_path))
    assert report.passed
    with open(tmp_path / "nsg_table.json", encoding="utf-8") as f:
        assert json.load(f)["maximizer"] == "QS"

    with pytest.raises(ReproductionError):
        reproduce_nsg_table(1e-6, output_dir=str(tmp_path / "tight"))
    assert (tmp_path / "tight" / "nsg_table.csv").exists()


# Test experiment files
def test_run_config_farsighted(tmp_path):
    summary = run_config(os.path.join(CONFIG_DIR, "farsighted_n7.ini"), str(tmp_path))
    assert summary.final_class == "QS"
    assert summary.value == pytest.approx(7.3374, abs=5e-5)
    assert len(summary.periods) == 8
    assert "summary.json" in summary.files
    assert (tmp_path / "period_8.dot").exists()
    assert (tmp_path / "utilities.csv").read_text(encoding="utf-8").startswith("t,utility,links,structure\n")


def test_run_config_myopic(tmp_path):
    summary = run_config(os.path.join(CONFIG_DIR, "myopic_n7.ini"), str(tmp_path))
    assert summary.final_class == "QC"
    assert all(p.is_qc for p in summary.periods)
    assert summary.epsilon == 1e-4


def test_run_config_parsed_greedy(tmp_path):
    config = parse_experiment_config(
        "[experiment]\nnodes = 5\nhorizon = 6\n\n[output]\nformats = csv\n"
    )
    summary = run_config(config, str(tmp_path))
    assert summary.mode == "greedy"
    assert summary.final_class == "QC"
    assert sorted(os.listdir(tmp_path)) == ["path.txt", "utilities.csv"]
    assert summary.files == ["path.txt", "utilities.csv"]


def test_run_config_delegate_with_discount_file(tmp_path):
    (tmp_path / "weights.txt").write_text("1 1 1\n", encoding="utf-8")
    path = write_config(tmp_path, """\
[experiment]
nodes = 4
horizon = 3
mode = delegate
agents = 4, 3, 2

[utility]
kind = kb
phi = 0.1

[discount]
schedule = file:weights.txt
""")
    summary = run_config(path, str(tmp_path / "out"))
    assert summary.agents == [4, 3, 2]
    assert summary.value == pytest.approx(sum(p.utility for p in summary.periods))


def test_run_config_weighted_step(tmp_path):
    config = parse_experiment_config(
        "[experiment]\nnodes = 5\nhorizon = 4\nmode = weighted-step\nresolution = 2\n"
    )
    summary = run_config(config, str(tmp_path))
    assert [p.links for p in summary.periods] == pytest.approx([1.0, 2.0, 3.0, 4.0])
    assert all(p.is_nsg for p in summary.periods)

    s = weighted_step_path(5, 3, 0.01, 2)
    assert all(is_weighted_nsg(G) for G in s)


def test_run_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        run_config(write_config(tmp_path, "[experiment]\nnodes = 4\nhorizon = 2\nspeed = 3\n"))
    config = parse_experiment_config(
        "[experiment]\nnodes = 4\nhorizon = 2\nmode = weighted-step\n\n[utility]\nkind = kb\n"
    )
    with pytest.raises(InvalidParameterError):
        run_config(config, str(tmp_path))
