import json
import shutil

import pytest
from click.testing import CliRunner

from conftest import DATA, REPO
from roadgrid.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def three_node(tmp_path):
    dest = tmp_path / "three_node"
    shutil.copytree(DATA / "three_node", dest)
    return dest


def test_solve_writes_bundle(runner, three_node, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["solve", "--config", str(three_node / "case1.cfg"),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    for name in ("meta.json", "trace.csv", "investment.csv", "power_state.csv",
                 "prices_electricity.csv", "prices_charging.csv", "od_flows.csv"):
        assert (out / name).exists(), name
    meta = json.loads((out / "meta.json").read_text())
    assert meta["converged"] is True
    assert meta["gap"] <= 1e-3


def test_oracle_and_certify_roundtrip(runner, three_node, tmp_path):
    out = tmp_path / "oracle_out"
    result = runner.invoke(main, ["oracle", "--config", str(three_node / "case1.cfg"),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["certify", "--config", str(three_node / "case1.cfg"),
                                  "--result", str(out)])
    assert result.exit_code == 0, result.output
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["verdict"] is True


def test_certify_admm_output(runner, three_node, tmp_path):
    out = tmp_path / "solve_out"
    assert runner.invoke(main, ["solve", "--config", str(three_node / "case1.cfg"),
                                "--out", str(out)]).exit_code == 0
    result = runner.invoke(main, ["certify", "--config", str(three_node / "case1.cfg"),
                                  "--result", str(out)])
    assert result.exit_code == 0, result.output


def test_report_renders_tables_and_figures(runner, three_node, tmp_path):
    out = tmp_path / "out"
    assert runner.invoke(main, ["solve", "--config", str(three_node / "case1.cfg"),
                                "--out", str(out)]).exit_code == 0
    result = runner.invoke(main, ["report", "--result", str(out)])
    assert result.exit_code == 0, result.output
    rep = out / "report"
    assert (rep / "convergence.png").exists()
    assert (rep / "prices.png").exists()
    assert (rep / "investment.png").exists()
    assert (rep / "expected_prices_electricity.csv").exists()
    assert (rep / "report.json").exists()


def test_solve_infeasible_exits_one_with_json(runner, three_node, tmp_path):
    # make the power case unservable: huge load at the non-charging bus, tiny lines
    case = three_node / "three_node_case.m"
    text = case.read_text()
    text = text.replace("\t1\t3\t50\t", "\t1\t3\t9000\t")
    case.write_text(text)
    result = runner.invoke(main, ["solve", "--config", str(three_node / "case1.cfg"),
                                  "--out", str(tmp_path / "x")])
    assert result.exit_code == 1
    err = json.loads(result.output.strip().splitlines()[-1])
    assert err["error"] == "Infeasible"
    assert err["scenario"] == "s000"


def test_nonconverged_exits_one(runner, three_node, tmp_path):
    cfg = three_node / "case1.cfg"
    cfg.write_text(cfg.read_text().replace("max_iter = 400", "max_iter = 1"))
    result = runner.invoke(main, ["solve", "--config", str(cfg),
                                  "--out", str(tmp_path / "x")])
    assert result.exit_code == 1
    err = json.loads(result.output.strip().splitlines()[-1])
    assert err["error"] == "NonConverged"


def test_bad_flags_exit_two(runner):
    assert runner.invoke(main, ["solve", "--nonsense"]).exit_code == 2
    assert runner.invoke(main, ["frobnicate"]).exit_code == 2


def test_sample_scenarios_deterministic(runner, three_node, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        result = runner.invoke(main, [
            "sample-scenarios", "--config", str(three_node / "case1.cfg"),
            "--count", "6", "--lo", "0.5", "--hi", "1.5", "--seed", "3",
            "--out", str(path)])
        assert result.exit_code == 0, result.output
    assert a.read_text() == b.read_text()
    from roadgrid.io import read_scenarios
    scens = read_scenarios(a)
    assert len(scens) == 6
    assert all(abs(s.probability - 1 / 6) < 1e-12 for s in scens)
