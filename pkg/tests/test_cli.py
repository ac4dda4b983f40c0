import socket

import pytest

from components.managers.scenario_manager import save
from components.models.calibration import CalibrationResult
from components.models.measurement import SessionRecord
from components.models.reports import BudgetReport, StatsReport, TopologyReport
from components.models.scenario import StochasticModel
from meshprobe.cli import EXIT_FORMATION, EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_USAGE, main


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_is_deterministic(capsys, scenario_path):
    args = ["simulate", "--scenario", scenario_path("config1"), "--requests", 100, "--seed", 7]
    first = _run(capsys, *args)
    second = _run(capsys, *args)
    assert first[0] == EXIT_OK
    assert first[1] == second[1]
    session = SessionRecord.model_validate_json(first[1])
    assert session.request_count == 100
    assert session.seed == 7


def test_simulate_needs_a_seed(capsys, scenario_path):
    code, _, err = _run(capsys, "simulate", "--scenario", scenario_path("config1"))
    assert code == EXIT_USAGE
    assert err.splitlines()[-1].startswith("meshprobe-error: usage:")


def test_unknown_command_is_usage_error(capsys):
    assert _run(capsys, "fly")[0] == EXIT_USAGE


def test_budget_table_total(capsys, scenario_path):
    code, out, _ = _run(capsys, "budget", "--scenario", scenario_path("config1"))
    assert code == EXIT_OK
    total = next(line for line in out.splitlines() if line.strip().startswith("total"))
    assert total.split()[-1].startswith("81.58")


def test_budget_json_validates(capsys, scenario_path):
    code, out, _ = _run(capsys, "budget", "--scenario", scenario_path("config2"), "--format", "json")
    report = BudgetReport.model_validate_json(out)
    assert code == EXIT_OK
    assert report.budget.router_count == 4
    assert report.hop_count == 3
    assert report.floors.forward_us == 27208


def test_budget_for_unformed_network_charges_every_router(capsys, scenario_path):
    code, out, _ = _run(capsys, "budget", "--scenario", scenario_path("config4"), "--format", "json")
    report = BudgetReport.model_validate_json(out)
    assert code == EXIT_OK
    assert report.budget.router_count == 4
    assert any("Partial" in note for note in report.notes)


def test_topology_json_validates(capsys, scenario_path):
    code, out, _ = _run(capsys, "topology", "--scenario", scenario_path("config4"), "--format", "json")
    report = TopologyReport.model_validate_json(out)
    assert code == EXIT_OK
    assert report.formation.verdict.value == "Partial"
    assert report.formation.best_neighbor[1] == 3


def test_topology_table(capsys, scenario_path):
    code, out, _ = _run(capsys, "topology", "--scenario", scenario_path("config1"))
    assert code == EXIT_OK
    assert "note: verdict: Formed" in out
    assert "note: path: 1-2-3-4" in out


def test_config4_simulation_exits_with_formation_report(capsys, scenario_path):
    code, out, err = _run(capsys, "simulate", "--scenario", scenario_path("config4"), "--seed", 1)
    assert code == EXIT_FORMATION
    assert "verdict: Partial" in out
    assert err.splitlines()[-1].startswith("meshprobe-error: formation:")


def test_invalid_scenario_exits_2(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema_version": 7}')
    code, out, err = _run(capsys, "topology", "--scenario", path)
    assert code == EXIT_INVALID
    assert out == ""
    assert err.splitlines()[-1].startswith("meshprobe-error: scenario:")


def test_absent_device_exits_4(capsys):
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    code, _, err = _run(capsys, "live", "client", "--connect", f"127.0.0.1:{port}", "--requests", 2)
    assert code == EXIT_IO
    assert err.splitlines()[-1].startswith("meshprobe-error: io:")


def test_out_writes_file_only(capsys, tmp_path, scenario_path):
    target = tmp_path / "session.csv"
    code, out, _ = _run(capsys, "simulate", "--scenario", scenario_path("config2"),
                        "--requests", 20, "--seed", 3, "--format", "csv", "--out", target)
    assert code == EXIT_OK
    assert out == ""
    lines = target.read_text().splitlines()
    assert lines[0] == "seq,tx_ms,rx_ms,outcome"
    assert len(lines) == 1 + 20


def test_report_on_recorded_session(capsys, tmp_path, scenario_path):
    recorded = tmp_path / "session.json"
    _run(capsys, "simulate", "--scenario", scenario_path("config3"), "--requests", 50,
         "--seed", 5, "--out", recorded)
    code, out, _ = _run(capsys, "report", "--session", recorded, "--scenario", scenario_path("config3"))
    assert code == EXIT_OK
    report = StatsReport.model_validate_json(out)
    assert report.stats.n_requested == 50
    assert report.pooled_test_mean == pytest.approx(706.595)
    assert report.reported_mean == 706.6


def test_report_flags_pooling_discrepancy(capsys, tmp_path, scenario_path):
    recorded = tmp_path / "session.json"
    _run(capsys, "simulate", "--scenario", scenario_path("config2"), "--requests", 20,
         "--seed", 5, "--out", recorded)
    code, out, _ = _run(capsys, "report", "--session", recorded, "--scenario", scenario_path("config2"))
    report = StatsReport.model_validate_json(out)
    assert code == EXIT_OK
    assert report.pooled_test_mean == pytest.approx(485.815)
    assert report.notes and "485.58" in report.notes[0]


def test_report_counts_pd_over_two_seconds_despite_long_timeout(capsys, tmp_path, config1):
    protocol = config1.protocol.model_copy(update={"response_timeout": 10000.0})
    slow = save(
        config1.model_copy(update={"protocol": protocol, "stochastic": StochasticModel(contention_mean=2500.0)}),
        tmp_path / "slow.json",
    )
    recorded = tmp_path / "session.json"
    _run(capsys, "simulate", "--scenario", slow, "--requests", 10, "--seed", 2, "--out", recorded)
    code, out, _ = _run(capsys, "report", "--session", recorded, "--scenario", slow)
    report = StatsReport.model_validate_json(out)
    assert code == EXIT_OK
    assert report.stats.n_delivered == 10
    assert report.stats.realtime_violations == 10

def test_report_dataset_csv(capsys, tmp_path, scenario_path):
    recorded = tmp_path / "session.json"
    _run(capsys, "simulate", "--scenario", scenario_path("config1"), "--requests", 25,
         "--seed", 1, "--out", recorded)
    code, out, _ = _run(capsys, "report", "--session", recorded, "--format", "csv")
    lines = out.splitlines()
    assert code == EXIT_OK
    assert "index,size,mean_pd,partial" in lines
    assert lines[-1].split(",")[1] == "5"
    assert lines[-1].endswith("true")


def test_missing_session_file_is_io_error(capsys, tmp_path):
    code, _, _ = _run(capsys, "report", "--session", tmp_path / "absent.json")
    assert code == EXIT_IO


def test_calibrate(capsys, scenario_dir):
    code, out, _ = _run(capsys, "calibrate", "--targets", scenario_dir / "calibration_targets.json")
    assert code == EXIT_OK
    result = CalibrationResult.model_validate_json(out)
    assert result.max_residual <= 5.0
