import json

import pandas as pd
import pytest

import cli
from models.schemas import DeltaReport, VerificationResult

EQUAL_PURE = {"P1": 0.5, "r1": 1.0, "r2": 1.0, "s": 0.4, "s_tilde": 0.5, "s_prime": 0.4, "s_tilde_prime": 0.5}
SYMMETRIC = {"q1": 0.4, "q2": 0.4, "q1_tilde": 0.5, "q2_tilde": 0.5, "t": 1.0, "t_tilde": 1.0}


def write_config(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def locc_config(tmp_path):
    return write_config(tmp_path, {"params": EQUAL_PURE, "schedules": {"A": SYMMETRIC, "B": SYMMETRIC}})


def test_discriminate_locc(locc_config, capsys):
    code, out, _ = run(["discriminate", "--protocol", "locc", "--config", locc_config], capsys)
    assert code == cli.EXIT_OK
    assert json.loads(out)["total_success"] == pytest.approx(0.84)


def test_discriminate_q_from_locc(locc_config, capsys):
    code, out, _ = run(["discriminate", "--protocol", "global", "--q-from-locc", "--config", locc_config], capsys)
    report = json.loads(out)
    assert code == cli.EXIT_OK
    assert report["protocol"] == "global"
    assert abs(report["details"]["delta"]) < 1e-12


def test_discriminate_operational(locc_config, capsys):
    code, out, _ = run(["discriminate", "--operational", "--config", locc_config], capsys)
    assert code == cli.EXIT_OK
    assert json.loads(out)["details"]["operational_residual"] < 1e-10


def test_missing_key_is_a_validation_error(tmp_path, capsys):
    config = write_config(tmp_path, {"schedules": {"A": SYMMETRIC}})
    code, _, err = run(["discriminate", "--config", config], capsys)
    assert code == cli.EXIT_INVALID
    assert "missing key params" in json.loads(err)["message"]


def test_unknown_key_is_rejected(tmp_path, capsys):
    config = write_config(tmp_path, {"params": EQUAL_PURE, "bogus": 1})
    code, _, err = run(["discriminate", "--config", config], capsys)
    assert code == cli.EXIT_INVALID
    assert "bogus" in json.loads(err)["keys"]


def test_malformed_json_reports_position(tmp_path, capsys):
    config = write_config(tmp_path, '{\n  "params": {,\n}')
    code, _, err = run(["discriminate", "--config", config], capsys)
    payload = json.loads(err)
    assert code == cli.EXIT_PARSE
    assert payload["line"] == 2
    assert payload["column"] > 0


def test_config_for_another_command(tmp_path, capsys):
    config = write_config(tmp_path, {"command": "verify"})
    code, _, _ = run(["discriminate", "--config", config], capsys)
    assert code == cli.EXIT_INVALID


def test_optimize_table_cell(tmp_path, capsys):
    params = {"P1": 0.5, "r1": 0.6, "r2": 0.6, "s": 0.4, "s_tilde": 0.3, "s_prime": 0.4, "s_tilde_prime": 0.3}
    config = write_config(tmp_path, {"params": params, "target": "global_mixed"})
    code, out, _ = run(["optimize", "--config", config, "--resolution", "1e-4"], capsys)
    result = json.loads(out)
    assert code == cli.EXIT_OK
    assert result["closed_form"]["value"] == pytest.approx(0.868)
    assert result["within_tolerance"] is True


def test_optimize_formula_only_and_infeasible(tmp_path, capsys):
    params = {"P1": 0.7, "r1": 0.5, "r2": 0.5, "s": 0.5, "s_tilde": 0.5, "s_prime": 0.5, "s_tilde_prime": 0.5}
    config = write_config(tmp_path, {"params": params})
    code, _, err = run(["optimize", "--config", config, "--formula-only"], capsys)
    assert code == cli.EXIT_INVALID
    assert json.loads(err)["error"] == "RelabelError"
    ok = write_config(tmp_path, {"params": {**params, "P1": 0.3}}, name="ok.json")
    code, out, _ = run(["optimize", "--config", ok, "--formula-only"], capsys)
    assert code == cli.EXIT_OK
    assert "oracle" not in json.loads(out)


def test_ssd_gap_from_flags(capsys):
    code, out, _ = run(["ssd", "--s", "0.16", "--s-prime", "0.36"], capsys)
    report = json.loads(out)
    assert code == cli.EXIT_OK
    assert report["label"] == "sym_ii"
    assert report["delta"] == pytest.approx(0.086528, abs=1e-9)


def test_hybrid_reproduce(tmp_path, capsys):
    params = {**EQUAL_PURE, "s": 0.5, "s_prime": 0.5}
    config = write_config(tmp_path, {"params": params})
    code, out, _ = run(["hybrid", "--protocol", "reproduce", "--config", config], capsys)
    assert code == cli.EXIT_OK
    assert json.loads(out)["details"]["delta"] == pytest.approx(0.125)


def test_verify_single_claim(capsys):
    code, out, _ = run(["verify", "hybrids", "--quick"], capsys)
    results = json.loads(out)
    assert code == cli.EXIT_OK
    assert [r["claim_id"] for r in results] == ["hybrids"]


def test_verify_failure_exit_code(monkeypatch, capsys):
    failing = VerificationResult(claim_id="hybrids", passed=False, worst_residual=1.0, n_checked=1,
                                 witness={"s": 0.5})
    monkeypatch.setattr(cli, "run_claims", lambda claim, seed=None, quick=False: [failing])
    code, _, _ = run(["verify", "hybrids"], capsys)
    assert code == cli.EXIT_VERIFY_FAILED


def test_sample_case_iii_gap_violation_exit_code(monkeypatch, capsys):
    monkeypatch.setattr("services.montecarlo.ssd_delta",
                        lambda s, s_prime: DeltaReport(label="case_iii", delta=-1e-3))
    code, _, err = run(["sample", "--protocol", "case_iii", "--n", "5", "--seed", "1"], capsys)
    payload = json.loads(err)
    assert code == cli.EXIT_VERIFY_FAILED
    assert payload["error"] == "GapViolationError"
    assert payload["witness"]["delta"] == -1e-3


def test_verify_unknown_claim(capsys):
    code, _, _ = run(["verify", "theorem9"], capsys)
    assert code == cli.EXIT_INVALID


def test_figure_csv(tmp_path, capsys):
    out = tmp_path / "fig6.csv"
    code, _, _ = run(["figure", "fig6", "-o", str(out), "--n", "10"], capsys)
    frame = pd.read_csv(out)
    assert code == cli.EXIT_OK
    assert frame["series"].nunique() == 4
    assert len(frame) == 40


def test_figure_params_from_config(tmp_path, capsys):
    out = tmp_path / "fig6.csv"
    config = write_config(tmp_path, {"target": "fig6", "figure_params": {"s": [0.3]}})
    code, _, _ = run(["figure", "--config", config, "-o", str(out), "--n", "10"], capsys)
    frame = pd.read_csv(out)
    assert code == cli.EXIT_OK
    assert frame["series"].nunique() == 1
    assert len(frame) == 10


def test_figure_params_unknown_key(tmp_path, capsys):
    config = write_config(tmp_path, {"target": "fig3", "figure_params": {"P2": 0.9}})
    code, _, err = run(["figure", "--config", config, "--n", "5"], capsys)
    assert code == cli.EXIT_INVALID
    assert json.loads(err)["error"] == "ParameterError"


def test_figure_bad_id(capsys):
    code, _, _ = run(["figure", "fig5"], capsys)
    assert code == cli.EXIT_INVALID


def test_sample_is_deterministic(locc_config, capsys):
    argv = ["sample", "--protocol", "locc", "--n", "2000", "--seed", "3", "--config", locc_config]
    code, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert code == cli.EXIT_OK
    assert first == second
    assert json.loads(first)["n_samples"] == 2000


def test_sample_csv_counts(locc_config, capsys):
    code, out, _ = run(["sample", "--n", "500", "--seed", "1", "--format", "csv", "--config", locc_config], capsys)
    assert code == cli.EXIT_OK
    assert out.splitlines()[0] == "pattern,count"
