import json

import pandas as pd
import pytest

from main import main
from src.errors import LabError
from src.workflow_orchestrator import COMMANDS, WorkflowOrchestrator


def _report(output_dir, name):
    return json.loads((output_dir / f"{name}.json").read_text(encoding="utf-8"))


@pytest.mark.asyncio
async def test_exponents_command(write_config, tmp_path):
    orchestrator = WorkflowOrchestrator(str(write_config()))
    state = await orchestrator.run("exponents")
    assert state.exit_code == 0
    report = _report(tmp_path / "results", "exponents")
    assert report["command"] == "exponents"
    assert report["window"]["lower"] == pytest.approx(1.8)
    assert report["semilinear"]["p"] == pytest.approx(9.7)
    assert "threads" not in report["config"]


@pytest.mark.asyncio
async def test_solve_linear_command(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config())).run("solve-linear")
    assert state.exit_code == 0
    report = _report(tmp_path / "results", "linear")
    assert report["refinement_difference"] < 1e-10
    assert len(report["node_norms"]["t"]) == 33
    assert report["node_norms"]["du_l2"][0] == 0.0
    frame = pd.read_csv(tmp_path / "results" / "trajectory.csv")
    assert list(frame.columns) == ["t", "mode_index", "u_k", "du_k"]
    assert len(frame) == 33 * 6
    assert sorted(frame["mode_index"].unique()) == [1, 2, 3, 4, 5, 6]
    first = frame[frame["t"] == 0.0]
    assert first["u_k"].tolist() == pytest.approx([0.01, 0, 0, 0, 0, 0])


@pytest.mark.asyncio
async def test_solve_semilinear_command(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config())).run("solve-semilinear")
    assert state.exit_code == 0
    report = _report(tmp_path / "results", "semilinear")
    assert report["picard"]["converged"] is True
    assert report["existence"]["T"] <= 1.0
    assert report["uniqueness"]["max_difference"] < 1e-6


@pytest.mark.asyncio
async def test_zero_coupling_matches_linear_report(write_config, tmp_path):
    config = write_config({"nonlinearity": {"b": 2.0, "mu": 0.0}, "data": {"u0_scale": 0.001}})
    orchestrator = WorkflowOrchestrator(str(config))
    assert (await orchestrator.run("solve-semilinear")).exit_code == 0
    semilinear_csv = (tmp_path / "results" / "trajectory.csv").read_bytes()
    assert (await orchestrator.run("solve-linear")).exit_code == 0
    assert (tmp_path / "results" / "trajectory.csv").read_bytes() == semilinear_csv


@pytest.mark.asyncio
async def test_verify_laplace_passes(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config())).run("verify-laplace")
    report = _report(tmp_path / "results", "laplace")
    assert report["verdict"] == "PASS"
    assert state.exit_code == 0


@pytest.mark.asyncio
async def test_corrupted_laplace_check_fails(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config({"corruption": 1.1}))).run("verify-laplace")
    assert state.exit_code == 2
    assert _report(tmp_path / "results", "laplace")["verdict"] == "FAIL"


@pytest.mark.asyncio
async def test_constant_estimate_independent_of_threads(write_config, tmp_path):
    config = str(write_config())
    outputs = []
    for threads in (1, 3):
        out = tmp_path / f"threads_{threads}"
        state = await WorkflowOrchestrator(config, output_dir=str(out), threads=threads).run("estimate-constant")
        assert state.exit_code == 0
        outputs.append(((out / "constant.json").read_bytes(), (out / "draws.csv").read_bytes()))
    assert outputs[0] == outputs[1]


@pytest.mark.asyncio
async def test_mlf_eval_command(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config())).run("mlf-eval", alpha=2.0, beta=1.0, x=[0.0, -4.0])
    assert state.exit_code == 0
    values = _report(tmp_path / "results", "mlf")["values"]
    assert values[0]["value"] == pytest.approx(1.0, rel=1e-15)
    assert values[1]["value"] == pytest.approx(-0.4161468365471424, abs=1e-12)


@pytest.mark.asyncio
async def test_markdown_export(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config())).run("exponents", markdown=True)
    markdown = tmp_path / "results" / "exponents.md"
    assert str(markdown) in state.artifacts
    assert markdown.read_text(encoding="utf-8").startswith("# exponents 报告")


@pytest.mark.asyncio
async def test_unknown_command(write_config):
    with pytest.raises(LabError):
        await WorkflowOrchestrator(str(write_config())).run("plot")


@pytest.mark.asyncio
async def test_library_error_written(write_config, tmp_path):
    state = await WorkflowOrchestrator(str(write_config())).run("mlf-eval", alpha=1.5, beta=1.0, x=[1.0])
    assert state.exit_code == 1
    assert _report(tmp_path / "results", "error")["error_type"] == "DomainError"


def test_cli_exponents(write_config):
    assert main(["exponents", "--config", str(write_config())]) == 0


def test_cli_invalid_config_writes_error(write_config, tmp_path):
    out = tmp_path / "bad"
    code = main(["solve-linear", "--config", str(write_config({"alpha": 2.5})), "--out", str(out)])
    assert code == 1
    error = _report(out, "error")
    assert error["error_type"] == "ValidationError"
    assert "alpha" in error["message"]


def test_every_command_has_a_parser():
    for command in COMMANDS:
        with pytest.raises(SystemExit) as excinfo:
            main([command, "--help"])
        assert excinfo.value.code == 0


@pytest.mark.asyncio
async def test_exponents_on_box_without_override(write_config, tmp_path):
    box = {"kind": "rectangle", "lengths": [3.14159, 3.14159, 3.14159], "modes": 8}
    config = write_config({"domain": box, "exponents": {"d": None}})
    state = await WorkflowOrchestrator(str(config)).run("exponents")
    assert state.exit_code == 0
    report = _report(tmp_path / "results", "exponents")
    assert report["d"] == 3
    assert report["domain_dimension"] == 3
    assert report["d_overridden"] is False
    assert report["semilinear"]["gamma"] == pytest.approx(0.375)


@pytest.mark.asyncio
async def test_exponents_label_dimension_override(write_config, tmp_path):
    await WorkflowOrchestrator(str(write_config())).run("exponents")
    report = _report(tmp_path / "results", "exponents")
    assert report["d"] == 3
    assert report["domain_dimension"] == 1
    assert report["d_overridden"] is True


def test_cli_non_integer_thread_env_exits_with_validation_code(write_config, tmp_path, monkeypatch):
    monkeypatch.setenv("FWAVE_THREADS", "many")
    out = tmp_path / "bad_env"
    assert main(["exponents", "--config", str(write_config()), "--out", str(out)]) == 1
    error = _report(out, "error")
    assert error["error_type"] == "ValidationError"
    assert "FWAVE_THREADS" in error["message"]
