"""
Export Agent - byte-stable JSON, CSV and table rendering of lab reports
"""
import csv
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from components.errors import ScenarioError
from components.models.budget import ROUTER_COUNT_NOTE, DelayBudget
from components.models.calibration import CalibrationResult
from components.models.measurement import ProbeOutcome, ProbeRecord, SessionRecord, SessionStats
from components.models.scenario import Coverage
from components.models.topology import FormationReport

SESSION_COLUMNS = ["seq", "tx_ms", "rx_ms", "outcome"]


class OutputFormat(str, Enum):
    """Report formats"""
    JSON = "json"
    CSV = "csv"
    TABLE = "table"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def _table_cell(value: Any) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:.3f}"
    return _cell(value)


class ExportAgent:
    """Renders reports; every output ends with a single LF"""

    def export_json(self, payload: Union[BaseModel, Dict[str, Any]]) -> str:
        data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"

    def export_csv(self, rows: List[Dict[str, Any]], fieldnames: Sequence[str]) -> str:
        """Header row first and always present, then one line per row"""
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in fieldnames])
        return output.getvalue()

    def export_table(self, rows: List[Dict[str, Any]], fieldnames: Sequence[str],
                     title: Optional[str] = None, notes: Sequence[str] = ()) -> str:
        frame = pd.DataFrame(rows, columns=list(fieldnames))
        for column in frame.columns:
            frame[column] = frame[column].map(_table_cell)
        lines = []
        if title:
            lines.append(title)
        lines.append(frame.to_string(index=False) if rows else "(no rows)")
        lines.extend(f"note: {n}" for n in notes)
        return "\n".join(lines) + "\n"

    def render(self, fmt: OutputFormat, payload: BaseModel, rows: List[Dict[str, Any]],
               fieldnames: Sequence[str], title: Optional[str] = None,
               notes: Sequence[str] = ()) -> str:
        if fmt == OutputFormat.JSON:
            return self.export_json(payload)
        if fmt == OutputFormat.CSV:
            return self.export_csv(rows, fieldnames)
        return self.export_table(rows, fieldnames, title, notes)

    # Row builders

    def session_rows(self, session: SessionRecord) -> List[Dict[str, Any]]:
        return [
            {"seq": p.seq, "tx_ms": p.tx_ms, "rx_ms": p.rx_ms, "outcome": p.outcome.value}
            for p in session.probes
        ]

    def stats_rows(self, stats: SessionStats) -> List[Dict[str, Any]]:
        fields = ["n_requested", "n_delivered", "n_lost", "n_timed_out", "pdr",
                  "mean_pd", "stddev_pd", "min_pd", "max_pd", "realtime_violations"]
        data = stats.model_dump()
        return [{"metric": name, "value": data[name]} for name in fields]

    def dataset_rows(self, stats: SessionStats) -> List[Dict[str, Any]]:
        return [block.model_dump() for block in stats.dataset_means]

    def budget_rows(self, budget: DelayBudget) -> List[Dict[str, Any]]:
        rows = [{"component": label, "ms": value} for label, value in budget.breakdown]
        rows.append({"component": "total", "ms": budget.total})
        return rows

    def budget_notes(self, budget: DelayBudget, hop_count: Optional[int] = None) -> List[str]:
        notes = [ROUTER_COUNT_NOTE]
        if hop_count is not None and hop_count != budget.router_count:
            notes.append(f"selected path: {budget.router_count} routers, {hop_count} inter-router hops")
        return notes

    def topology_rows(self, report: FormationReport) -> List[Dict[str, Any]]:
        rows = []
        for usable, edges in ((True, report.edges), (False, report.unusable_pairs)):
            for edge in edges:
                rows.append({
                    "a": edge.a,
                    "b": edge.b,
                    "distance_m": edge.distance,
                    "walls": edge.walls,
                    "attenuation_db": edge.attenuation,
                    "snr_db": edge.snr_metric,
                    "grade": edge.grade.value,
                    "usable": usable,
                })
        return sorted(rows, key=lambda r: (r["a"], r["b"]))

    def topology_notes(self, report: FormationReport, cover: Optional[Coverage] = None) -> List[str]:
        notes = [f"verdict: {report.verdict.value}"]
        if report.path is not None:
            notes.append(f"path: {'-'.join(str(h) for h in report.path.hops)} "
                         f"(cost {report.path.total_cost:.2f} dB)")
        for node, neighbor in sorted(report.best_neighbor.items()):
            where = report.regions.get(node)
            notes.append(f"router {node}{f' ({where})' if where else ''}: best neighbor "
                         f"{neighbor if neighbor is not None else '-'}")
        notes.append(f"components: {report.components}")
        if cover is not None:
            notes.append(f"coverage: linear {cover.linear:.2f} m, direct {cover.direct:.2f} m, "
                         f"per link {[round(d, 2) for d in cover.per_link]}")
        return notes

    def calibration_rows(self, result: CalibrationResult) -> List[Dict[str, Any]]:
        return [
            {
                "label": r.label,
                "attenuation_target": r.attenuation_target,
                "attenuation_fitted": r.attenuation_fitted,
                "snr_target": r.snr_target,
                "snr_fitted": r.snr_fitted,
            }
            for r in result.residuals
        ]

    # Readers

    def read_session(self, path: Union[str, Path]) -> SessionRecord:
        """
        Session from a JSON record or a probe CSV written by export_csv

        A CSV carries only the probe rows. The scenario is named after the file
        stem and the counters are rebuilt from the outcomes; no seed is recorded.
        """
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() != ".csv":
            try:
                return SessionRecord.model_validate_json(text)
            except ValueError as e:
                raise ScenarioError(f"{path}: not a session record: {e}", field="session")

        frame = pd.read_csv(io.StringIO(text), dtype={"outcome": str},
                            float_precision="round_trip")
        missing = [c for c in SESSION_COLUMNS if c not in frame.columns]
        if missing:
            raise ScenarioError(f"{path}: missing columns {missing}", field="session")

        probes = []
        for row in frame.itertuples(index=False):
            rx = None if pd.isna(row.rx_ms) else float(row.rx_ms)
            probes.append(ProbeRecord(
                seq=int(row.seq), tx_ms=float(row.tx_ms), rx_ms=rx, outcome=ProbeOutcome(row.outcome),
            ))
        delivered = sum(1 for p in probes if p.outcome == ProbeOutcome.DELIVERED)
        return SessionRecord(
            scenario=path.stem,
            request_count=len(probes),
            received_count=delivered,
            probes=probes,
        )
