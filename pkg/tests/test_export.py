import json

import pytest

from components.agents.export_agent import SESSION_COLUMNS, ExportAgent, OutputFormat
from components.agents.simulation_agent import run_session
from components.errors import ScenarioError
from components.models.budget import compute_budget
from components.models.measurement import summarize
from components.models.protocol import ProtocolParams


@pytest.fixture
def export():
    return ExportAgent()


@pytest.fixture(scope="module")
def session(config2):
    return run_session(config2, 60, seed=3)


def test_json_ends_with_single_newline(export, session):
    text = export.export_json(session)
    assert text.endswith("}\n") and not text.endswith("\n\n")
    assert json.loads(text)["request_count"] == 60


def test_csv_starts_with_header_then_rows(export, session):
    text = export.export_csv(export.session_rows(session), SESSION_COLUMNS)
    lines = text.splitlines()
    assert lines[0] == "seq,tx_ms,rx_ms,outcome"
    assert len(lines) == 1 + 60
    assert not any(line.startswith("#") for line in lines)
    assert "\r" not in text


def test_csv_header_without_rows(export):
    assert export.export_csv([], SESSION_COLUMNS) == "seq,tx_ms,rx_ms,outcome\n"


@pytest.mark.parametrize("suffix, fmt", [(".json", OutputFormat.JSON), (".csv", OutputFormat.CSV)])
def test_session_file_reads_back(tmp_path, export, session, suffix, fmt):
    path = tmp_path / f"{session.scenario}{suffix}"
    path.write_text(export.render(fmt, session, export.session_rows(session), SESSION_COLUMNS))
    restored = export.read_session(path)
    assert restored.model_copy(update={"seed": session.seed}) == session
    assert summarize(restored) == summarize(session)


def test_read_session_rejects_other_json(tmp_path, export):
    path = tmp_path / "nope.json"
    path.write_text('{"hello": 1}')
    with pytest.raises(ScenarioError):
        export.read_session(path)


def test_read_session_requires_columns(tmp_path, export):
    path = tmp_path / "nope.csv"
    path.write_text("seq,tx_ms\n0,1.0\n")
    with pytest.raises(ScenarioError):
        export.read_session(path)


def test_budget_table(export):
    budget = compute_budget(4, ProtocolParams())
    text = export.export_table(export.budget_rows(budget), ["component", "ms"],
                               title="budget", notes=export.budget_notes(budget, 3))
    total = [line for line in text.splitlines() if line.strip().startswith("total")]
    assert total and total[0].split()[-1] == "81.583"
    assert "3 inter-router hops" in text


def test_table_marks_missing_values(export, session):
    stats = summarize(session).model_copy(update={"mean_pd": None})
    text = export.export_table(export.stats_rows(stats), ["metric", "value"])
    mean_line = next(line for line in text.splitlines() if line.strip().startswith("mean_pd"))
    assert mean_line.split()[-1] == "-"


def test_empty_table(export):
    assert "(no rows)" in export.export_table([], ["a"])


def test_csv_session_counters_come_from_the_rows(tmp_path, export):
    path = tmp_path / "bench.csv"
    path.write_text(
        "seq,tx_ms,rx_ms,outcome\n"
        "0,0.0,120.0,Delivered\n"
        "1,121.0,,Lost\n"
        "2,131.0,,TimedOut\n"
        "3,2131.0,2250.0,Delivered\n"
    )
    restored = export.read_session(path)
    assert restored.scenario == "bench"
    assert restored.seed is None
    assert restored.request_count == 4
    assert restored.received_count == 2
    assert summarize(restored).pdr == 0.5
