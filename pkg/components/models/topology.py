"""
Mesh Topology - router association graph, best-signal routing and formation diagnosis
"""
import heapq
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field

from components.errors import FormationFailure, ScenarioError
from components.models.floorplan import FloorPlan, Point2D
from components.models.radio import LinkGrade, LinkQuality, RadioParams, link_quality


class NodeRole(str, Enum):
    """Router roles"""
    DEVICE_SIDE = "DeviceSide"
    RELAY = "Relay"
    GATEWAY = "Gateway"


class FormationVerdict(str, Enum):
    """Overall network state"""
    FORMED = "Formed"
    PARTIAL = "Partial"
    FAILED = "Failed"


class MeshNode(BaseModel):
    """Mesh router placement"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: int = Field(ge=1)
    position: Point2D
    role: NodeRole = NodeRole.RELAY


class RoutePath(BaseModel):
    """Selected route from the device-side router to the gateway"""

    model_config = ConfigDict(frozen=True)

    hops: List[int]
    total_cost: float
    router_count: int


class EdgeReport(BaseModel):
    """One node pair with its link quality"""

    a: int
    b: int
    attenuation: float
    snr_metric: float
    distance: float
    walls: int
    grade: LinkGrade


class FormationReport(BaseModel):
    """Output of diagnose()"""

    verdict: FormationVerdict
    components: List[List[int]]
    best_neighbor: Dict[int, Optional[int]]
    regions: Dict[int, Optional[str]] = Field(default_factory=dict)
    edges: List[EdgeReport] = Field(default_factory=list)
    unusable_pairs: List[EdgeReport] = Field(default_factory=list)
    path: Optional[RoutePath] = None
    reachable_from_device: List[int] = Field(default_factory=list)


def _key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass
class MeshGraph:
    """Routers plus usable links; rejected pairs kept for reporting"""

    nodes: List[MeshNode]
    edges: Dict[Tuple[int, int], LinkQuality] = field(default_factory=dict)
    rejected_links: Dict[Tuple[int, int], LinkQuality] = field(default_factory=dict)
    regions: Dict[int, Optional[str]] = field(default_factory=dict)

    def node(self, node_id: int) -> MeshNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def quality(self, a: int, b: int) -> Optional[LinkQuality]:
        return self.edges.get(_key(a, b))

    def neighbors(self, node_id: int) -> List[int]:
        result = []
        for a, b in self.edges:
            if a == node_id:
                result.append(b)
            elif b == node_id:
                result.append(a)
        return sorted(result)

    @property
    def gateway(self) -> MeshNode:
        return next(n for n in self.nodes if n.role == NodeRole.GATEWAY)

    @property
    def device_side(self) -> MeshNode:
        """DeviceSide router; a lone gateway doubles as device side"""
        for node in self.nodes:
            if node.role == NodeRole.DEVICE_SIDE:
                return node
        return self.gateway

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(n.id for n in self.nodes)
        for (a, b), quality in self.edges.items():
            graph.add_edge(a, b, weight=quality.attenuation)
        return graph


def build_graph(nodes: List[MeshNode], plan: FloorPlan, params: RadioParams) -> MeshGraph:
    """Evaluate every node pair; usable links become edges"""
    if not nodes:
        raise ScenarioError("at least one node is required", field="nodes")
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise ScenarioError("node ids must be unique", field="nodes")
    if sum(1 for n in nodes if n.role == NodeRole.GATEWAY) != 1:
        raise ScenarioError("exactly one Gateway is required", field="nodes")

    ordered = sorted(nodes, key=lambda n: n.id)
    graph = MeshGraph(
        nodes=ordered,
        regions={n.id: plan.region_of(n.position) for n in ordered},
    )
    for first, second in itertools.combinations(ordered, 2):
        quality = link_quality(first.position, second.position, plan, params)
        target = graph.edges if quality.usable else graph.rejected_links
        target[_key(first.id, second.id)] = quality
    return graph


def best_path(graph: MeshGraph, src: int, dst: int) -> RoutePath:
    """
    Minimum total-attenuation route

    Ties go to fewer hops, then to the lexicographically smallest id sequence.
    Raises FormationFailure with the nodes reachable from src.
    """
    graph.node(src)
    graph.node(dst)

    # (cost, hops, path): the first pop of dst is optimal for the whole key
    heap = [(0.0, 0, (src,))]
    settled = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        here = path[-1]
        if here in settled:
            continue
        settled.add(here)
        if here == dst:
            return RoutePath(hops=list(path), total_cost=cost, router_count=len(path))
        for nxt in graph.neighbors(here):
            if nxt in settled:
                continue
            step = graph.edges[_key(here, nxt)].attenuation
            heapq.heappush(heap, (round(cost + step, 9), hops + 1, path + (nxt,)))

    raise FormationFailure(
        f"no usable path from router {src} to router {dst}",
        reachable=settled,
    )


def diagnose(graph: MeshGraph) -> FormationReport:
    """Components, per-router association and the overall verdict"""
    components = sorted(
        (sorted(c) for c in nx.connected_components(graph.to_networkx())),
        key=lambda c: c[0],
    )
    device = graph.device_side.id
    gateway = graph.gateway.id

    path = None
    reachable: List[int] = []
    try:
        path = best_path(graph, device, gateway)
        verdict = FormationVerdict.FORMED
        reachable = next(c for c in components if device in c)
    except FormationFailure as exc:
        reachable = exc.reachable
        verdict = FormationVerdict.FAILED if not graph.edges else FormationVerdict.PARTIAL

    best_neighbor: Dict[int, Optional[int]] = {}
    for node in graph.nodes:
        if node.id == gateway:
            best_neighbor[node.id] = None
            continue
        try:
            route = best_path(graph, node.id, gateway)
            best_neighbor[node.id] = route.hops[1]
        except FormationFailure:
            options = graph.neighbors(node.id)
            best_neighbor[node.id] = min(
                options,
                key=lambda other: (graph.edges[_key(node.id, other)].attenuation, other),
                default=None,
            )

    def _report(pair: Tuple[int, int], quality: LinkQuality) -> EdgeReport:
        return EdgeReport(
            a=pair[0],
            b=pair[1],
            attenuation=quality.attenuation,
            snr_metric=quality.snr_metric,
            distance=quality.distance,
            walls=quality.walls,
            grade=quality.grade,
        )

    return FormationReport(
        verdict=verdict,
        components=components,
        best_neighbor=best_neighbor,
        regions=dict(graph.regions),
        edges=[_report(k, q) for k, q in sorted(graph.edges.items())],
        unusable_pairs=[_report(k, q) for k, q in sorted(graph.rejected_links.items())],
        path=path,
        reachable_from_device=sorted(reachable),
    )
