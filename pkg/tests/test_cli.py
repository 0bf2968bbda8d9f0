import json

import pandas as pd
import pytest
from typer.testing import CliRunner

from fockwalk.app.cli import typer_app
from fockwalk.handlers import on_validate as validation

runner = CliRunner()


def test_walk_zero_steps(tmp_path):
    out = tmp_path / "walk.csv"
    result = runner.invoke(typer_app, ["walk", "--steps", "0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out)
    assert list(table.columns) == ["step", "n", "probability"]
    assert len(table) == 27
    assert table.probability[0] == 1.0
    summary = json.loads((tmp_path / "walk.csv.summary.json").read_text())
    assert summary["config"]["n_max"] == 26


def test_hadamard_walk_json(tmp_path):
    out = tmp_path / "walk.json"
    result = runner.invoke(typer_app, ["walk", "--variant", "hadamard", "--steps", "5", "--out", str(out), "--format", "json"])
    assert result.exit_code == 0, result.output
    columns = json.loads(out.read_text())["columns"]
    table = pd.DataFrame(columns)
    assert table.groupby("step").probability.sum().tolist() == pytest.approx([1.0] * 6, abs=1e-12)


def test_protocol_output_is_reproducible(tmp_path):
    args = ["protocol", "--n-target", "2", "--steps", "12", "--sigma-n", "0.01", "--trajectories", "3", "--seed", "5"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(typer_app, args + ["--out", str(first)]).exit_code == 0
    assert runner.invoke(typer_app, args + ["--out", str(second)]).exit_code == 0
    assert first.read_bytes() == second.read_bytes()
    table = pd.read_csv(first)
    assert list(table.columns[:5]) == ["step", "fidelity", "fidelity_std", "leak", "coin_excited"]
    assert list(table.columns[5:]) == [f"p{n}" for n in range(31)]
    summary = json.loads((tmp_path / "a.csv.summary.json").read_text())
    assert summary["config"]["seed"] == 5
    assert summary["config"]["n_max"] == 30
    assert len(summary["config_digest"]) == 64


def test_protocol_from_config_file(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("n_target: 2\nsteps: 4\ngamma_c: 0.0\noutput_format: json\n")
    out = tmp_path / "run.json"
    result = runner.invoke(typer_app, ["protocol", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["columns"]["step"] == [0, 1, 2, 3, 4]
    assert payload["summary"]["config"]["gamma_c"] == 0.0


@pytest.mark.parametrize("args", [["--gamma-sted", "0.1"], ["--no-such-param", "1"], ["--format", "xml"], ["stray"]])
def test_config_errors_exit_2(args, tmp_path):
    result = runner.invoke(typer_app, ["protocol", "--steps", "1", "--out", str(tmp_path / "x.csv")] + args)
    assert result.exit_code == 2


def test_truncation_fault_exits_3(tmp_path):
    args = ["protocol", "--n-target", "2", "--n-max", "6", "--steps", "100", "--decay-hamiltonian", "true", "--gamma-c", "0"]
    result = runner.invoke(typer_app, args + ["--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 3


def test_fidelity_curve_analytic_only(tmp_path):
    out = tmp_path / "curve.json"
    result = runner.invoke(typer_app, ["fidelity-curve", "--analytic-only", "--targets", "[2, 4, 6]", "--rate-ratio", "0", "--out", str(out), "--format", "json"])
    assert result.exit_code == 0, result.output
    columns = json.loads(out.read_text())["columns"]
    assert columns["n_T"] == [2, 4, 6]
    assert len(set(columns["F_analytic"])) == 1


def test_fidelity_curve_without_targets():
    result = runner.invoke(typer_app, ["fidelity-curve", "--analytic-only", "--targets", "[]"])
    assert result.exit_code == 2
    assert "no targets" in result.output


@pytest.mark.slow
def test_fidelity_curve_tracks_the_budget(tmp_path):
    out = tmp_path / "curve.csv"
    result = runner.invoke(typer_app, ["fidelity-curve", "--targets", "[2, 4, 6]", "--out", str(out)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(out)
    assert (abs(table.F_numeric - table.F_analytic) <= 0.05).all()
    summary = json.loads((tmp_path / "curve.csv.summary.json").read_text())
    assert summary["alpha_estimate"] is not None


def test_validate_passes():
    result = runner.invoke(typer_app, ["validate"])
    assert result.exit_code == 0, result.output
    assert "FAIL" not in result.output


def test_validate_reports_failures(monkeypatch):
    monkeypatch.setitem(validation.CHECKS, "forced failure", lambda rng: (False, "forced"))
    result = runner.invoke(typer_app, ["validate"])
    assert result.exit_code == 4
    assert "forced failure" in result.output
