"""
Scenario - one measurement configuration: building, routers, radio, protocol and stochastic model
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from components.models.floorplan import FloorPlan, Point2D, distance, polyline_length
from components.models.protocol import ProtocolParams
from components.models.radio import RadioParams
from components.models.topology import FormationVerdict, MeshNode, NodeRole, build_graph, diagnose

SCHEMA_VERSION = 1


class StochasticModel(BaseModel):
    """Contention delay (truncated Normal, per direction) and per-link loss"""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    contention_mean: float = Field(default=0.0, ge=0)
    contention_stddev: float = Field(default=0.0, ge=0)
    loss_scale: float = Field(default=0.0, ge=0, le=1)
    loss_anchor_db: float = 40.0
    loss_span_db: float = Field(default=100.0, gt=0)

    def per_link_loss(self, attenuation: float) -> float:
        """Loss probability of one link crossing in one direction"""
        fraction = (attenuation - self.loss_anchor_db) / self.loss_span_db
        return min(max(fraction, 0.0), 1.0) * self.loss_scale


class ExpectedResults(BaseModel):
    """Reference figures pinned for regression; all optional"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mean_pd: Optional[float] = None
    pdr: Optional[float] = None
    signal: Optional[float] = None
    snr: Optional[float] = None
    coverage: Optional[float] = None
    direct_coverage: Optional[float] = None
    direct_coverage_reported: Optional[float] = None
    test_means: Optional[List[float]] = None
    test_pdrs: Optional[List[float]] = None
    verdict: Optional[FormationVerdict] = None


class Scenario(BaseModel):
    """Validated scenario file"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = SCHEMA_VERSION
    name: str
    description: str = ""
    floor_plan: FloorPlan
    nodes: List[MeshNode]
    radio: RadioParams = Field(default_factory=RadioParams)
    protocol: ProtocolParams = Field(default_factory=ProtocolParams)
    stochastic: StochasticModel = Field(default_factory=StochasticModel)
    survey_route: Optional[List[Point2D]] = None
    expected: Optional[ExpectedResults] = None

    @model_validator(mode="after")
    def _check_nodes(self) -> "Scenario":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        if not self.nodes:
            raise ValueError("at least one node is required")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        gateways = [n for n in self.nodes if n.role == NodeRole.GATEWAY]
        if len(gateways) != 1:
            raise ValueError(f"exactly one Gateway is required, found {len(gateways)}")
        device_sides = [n for n in self.nodes if n.role == NodeRole.DEVICE_SIDE]
        if len(self.nodes) > 1 and len(device_sides) != 1:
            raise ValueError(f"exactly one DeviceSide node is required, found {len(device_sides)}")
        if len(self.nodes) == 1 and device_sides:
            raise ValueError("a single-node scenario uses its Gateway as device side")
        for node in self.nodes:
            if not self.floor_plan.extent.contains(node.position):
                raise ValueError(f"node {node.id} lies outside the floor plan extent")
        if self.survey_route is not None and len(self.survey_route) < 2:
            raise ValueError("survey_route needs at least two points")
        return self


class Coverage(BaseModel):
    """Distances spanned by the deployment, in meters"""

    linear: float
    direct: float
    per_link: List[float]
    hops: List[int]


def coverage(scenario: Scenario) -> Coverage:
    """
    Linear span (survey route, else straight device-side to gateway) and the
    hop-by-hop distances along the selected path

    Without a formed path the routers are chained in id order.
    """
    if len(scenario.nodes) == 1:
        only = scenario.nodes[0].id
        return Coverage(linear=0.0, direct=0.0, per_link=[], hops=[only])

    graph = build_graph(scenario.nodes, scenario.floor_plan, scenario.radio)
    report = diagnose(graph)
    if report.path is not None:
        hops = report.path.hops
    else:
        hops = sorted(n.id for n in scenario.nodes)

    per_link = [
        distance(graph.node(a).position, graph.node(b).position)
        for a, b in zip(hops, hops[1:])
    ]
    if scenario.survey_route:
        linear = polyline_length(scenario.survey_route)
    else:
        linear = distance(graph.device_side.position, graph.gateway.position)
    return Coverage(linear=linear, direct=sum(per_link), per_link=per_link, hops=hops)
