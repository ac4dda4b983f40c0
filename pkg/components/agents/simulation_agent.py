"""
Simulation Agent - seeded discrete-event probe sessions over the routed mesh path
Virtual clock in integer µs ticks; reported times are ticks / 1000
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import simpy

from components.errors import FormationFailure, FrameError
from components.managers.event_bus import EventBus, EventType, get_event_bus
from components.models.budget import direction_floors
from components.models.measurement import ProbeOutcome, ProbeRecord, SessionRecord
from components.models.protocol import DeviceState, SyntheticSensor, decode, device_step
from components.models.scenario import Scenario
from components.models.topology import MeshGraph, RoutePath, best_path, build_graph, diagnose

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Request:
    seq: int
    byte: int
    return_delay_us: int
    return_lost: bool


@dataclass(frozen=True)
class _Response:
    seq: int
    frame: bytes


def route_for(scenario: Scenario, bus: Optional[EventBus] = None,
              graph: Optional[MeshGraph] = None) -> RoutePath:
    """Selected path, or FormationFailure carrying the diagnose report"""
    graph = graph or build_graph(scenario.nodes, scenario.floor_plan, scenario.radio)
    try:
        return best_path(graph, graph.device_side.id, graph.gateway.id)
    except FormationFailure as exc:
        report = diagnose(graph)
        (bus or get_event_bus()).publish_event(
            EventType.FORMATION_FAILED,
            {"scenario": scenario.name, "verdict": report.verdict.value, "reachable": exc.reachable},
            source="simulation",
        )
        raise FormationFailure(
            f"scenario '{scenario.name}' has no usable path ({report.verdict.value}); "
            "see the topology report",
            reachable=exc.reachable,
            report=report,
        ) from exc


class SimulationAgent:
    """Runs one scenario's probe sessions on a simpy clock"""

    def __init__(self, scenario: Scenario, bus: Optional[EventBus] = None):
        self.scenario = scenario
        self.bus = bus or get_event_bus()
        graph = build_graph(scenario.nodes, scenario.floor_plan, scenario.radio)
        self.route = route_for(scenario, self.bus, graph)
        self.link_attenuation = [
            graph.quality(a, b).attenuation
            for a, b in zip(self.route.hops, self.route.hops[1:])
        ]
        self.link_loss = [scenario.stochastic.per_link_loss(att) for att in self.link_attenuation]
        self.floors = direction_floors(self.route.router_count, scenario.protocol)

    def _contention_us(self, rng: np.random.Generator) -> List[int]:
        model = self.scenario.stochastic
        draws = rng.normal(model.contention_mean, model.contention_stddev, size=2)
        # truncated at zero
        return [int(round(max(float(d), 0.0) * 1000)) for d in draws]

    def _link_lost(self, rng: np.random.Generator) -> List[bool]:
        """Forward and return verdicts; always draws 2 x links uniforms"""
        links = len(self.link_loss)
        draws = rng.uniform(size=2 * links)
        loss = np.array(self.link_loss * 2) if links else np.zeros(0)
        lost = draws < loss
        return [bool(lost[:links].any()), bool(lost[links:].any())]

    def run_session(
        self,
        n_requests: int,
        seed: int,
        capture: Optional[List[bytes]] = None,
    ) -> SessionRecord:
        """
        Issue n_requests sequential probes

        A frame lost in either direction, or a response slower than the
        timeout, is recorded as TimedOut at tx + timeout. Late responses
        are discarded by sequence number.
        """
        if n_requests < 1:
            raise ValueError("n_requests must be >= 1")

        protocol = self.scenario.protocol
        rng = np.random.default_rng(seed)
        sensor = SyntheticSensor(seed)
        env = simpy.Environment()
        to_device = simpy.Store(env)
        to_client = simpy.Store(env)
        probes: List[ProbeRecord] = []

        def carry(delay_us: int, store: simpy.Store, item):
            yield env.timeout(delay_us)
            store.put(item)

        def device():
            state = DeviceState()
            while True:
                request = yield to_device.get()
                state, emission = device_step(state, request.byte, env.now, protocol, sensor)
                if emission is None:
                    continue
                if capture is not None:
                    capture.append(emission.frame)
                if request.return_lost:
                    continue
                delay = emission.at_us - env.now + request.return_delay_us
                env.process(carry(delay, to_client, _Response(request.seq, emission.frame)))

        def client():
            for seq in range(n_requests):
                forward_extra, return_extra = self._contention_us(rng)
                forward_lost, return_lost = self._link_lost(rng)
                tx = env.now
                self.bus.publish_event(EventType.PROBE_SENT, {"seq": seq, "tx_us": tx}, source="simulation")

                if not forward_lost:
                    request = _Request(
                        seq=seq,
                        byte=protocol.start_byte,
                        return_delay_us=self.floors.return_us + return_extra,
                        return_lost=return_lost,
                    )
                    env.process(carry(self.floors.forward_us + forward_extra, to_device, request))

                deadline = env.timeout(protocol.timeout_us)
                record = None
                while record is None:
                    pending = to_client.get()
                    fired = yield pending | deadline
                    if pending in fired:
                        response = fired[pending]
                        if response.seq != seq:
                            logger.debug(f"Discarding stale response {response.seq} during probe {seq}")
                            continue
                        try:
                            decode(response.frame)
                        except FrameError:
                            record = ProbeRecord(seq=seq, tx_ms=tx / 1000, outcome=ProbeOutcome.LOST)
                            continue
                        record = ProbeRecord(
                            seq=seq, tx_ms=tx / 1000, rx_ms=env.now / 1000,
                            outcome=ProbeOutcome.DELIVERED,
                        )
                    else:
                        pending.cancel()
                        record = ProbeRecord(seq=seq, tx_ms=tx / 1000, outcome=ProbeOutcome.TIMED_OUT)

                probes.append(record)
                self._publish(record)

        self.bus.publish_event(
            EventType.SESSION_STARTED,
            {"scenario": self.scenario.name, "seed": seed, "requests": n_requests, "hops": self.route.hops},
            source="simulation",
        )
        env.process(device())
        env.run(until=env.process(client()))

        session = SessionRecord(
            scenario=self.scenario.name,
            seed=seed,
            request_count=len(probes),
            received_count=sum(1 for p in probes if p.outcome == ProbeOutcome.DELIVERED),
            probes=probes,
        )
        self.bus.publish_event(
            EventType.SESSION_COMPLETED,
            {"scenario": session.scenario, "requested": session.request_count, "received": session.received_count},
            source="simulation",
        )
        return session

    def _publish(self, record: ProbeRecord):
        kind = {
            ProbeOutcome.DELIVERED: EventType.PROBE_DELIVERED,
            ProbeOutcome.TIMED_OUT: EventType.PROBE_TIMED_OUT,
            ProbeOutcome.LOST: EventType.PROBE_LOST,
        }[record.outcome]
        self.bus.publish_event(kind, record.model_dump(mode="json"), source="simulation")


def run_session(
    scenario: Scenario,
    n_requests: int,
    seed: int,
    bus: Optional[EventBus] = None,
    capture: Optional[List[bytes]] = None,
) -> SessionRecord:
    """Seeded simulated session; equal inputs give an identical record"""
    return SimulationAgent(scenario, bus).run_session(n_requests, seed, capture)
