"""
Report Schemas - JSON documents emitted by the CLI subcommands
"""
from typing import List, Optional

from pydantic import BaseModel, Field

from components.models.budget import DelayBudget, DirectionFloors
from components.models.measurement import SessionStats
from components.models.scenario import Coverage, ExpectedResults
from components.models.topology import FormationReport


class BudgetReport(BaseModel):
    """`budget` output"""

    scenario: str
    budget: DelayBudget
    hop_count: Optional[int] = None
    floors: DirectionFloors
    notes: List[str] = Field(default_factory=list)


class TopologyReport(BaseModel):
    """`topology` output"""

    scenario: str
    formation: FormationReport
    coverage: Coverage
    expected: Optional[ExpectedResults] = None


class StatsReport(BaseModel):
    """`report` output; pooled figures only when the session's scenario pins per-test means"""

    stats: SessionStats
    pooled_test_mean: Optional[float] = None
    reported_mean: Optional[float] = None
    notes: List[str] = Field(default_factory=list)
