"""
Measurement - probe records, half-RTT propagation delay, PDR and data-set statistics
"""
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from components.errors import ClockOrderError, CounterCorruptionError

DATASET_SIZE = 10
# a delivered probe slower than this (one-way) missed real time
REALTIME_THRESHOLD_MS = 2000.0


class ProbeOutcome(str, Enum):
    """What became of one request"""
    DELIVERED = "Delivered"
    LOST = "Lost"
    TIMED_OUT = "TimedOut"


class ProbeRecord(BaseModel):
    """One request/response exchange; times in ms"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seq: int = Field(ge=0)
    tx_ms: float
    rx_ms: Optional[float] = None
    outcome: ProbeOutcome

    @model_validator(mode="after")
    def _rx_matches_outcome(self) -> "ProbeRecord":
        if (self.rx_ms is not None) != (self.outcome == ProbeOutcome.DELIVERED):
            raise ValueError("rx_ms must be present exactly when the probe was delivered")
        return self


class SessionRecord(BaseModel):
    """Counters and probes of one session, simulated or live"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: str
    seed: Optional[int] = None
    request_count: int = Field(ge=0)
    received_count: int = Field(ge=0)
    probes: List[ProbeRecord] = Field(default_factory=list)

    @property
    def delivered(self) -> List[ProbeRecord]:
        return [p for p in self.probes if p.outcome == ProbeOutcome.DELIVERED]


class DatasetMean(BaseModel):
    """Mean PD over one block of consecutive delivered probes"""

    index: int
    size: int
    mean_pd: float
    partial: bool = False


class SessionStats(BaseModel):
    """Summary of one session; delay fields are None when nothing was delivered"""

    scenario: str
    seed: Optional[int] = None
    n_requested: int
    n_delivered: int
    n_lost: int = 0
    n_timed_out: int = 0
    pdr: float
    mean_pd: Optional[float] = None
    stddev_pd: Optional[float] = None
    min_pd: Optional[float] = None
    max_pd: Optional[float] = None
    dataset_means: List[DatasetMean] = Field(default_factory=list)
    realtime_violations: int = 0


def propagation_delay(tx: float, rx: float) -> float:
    """Half the round-trip time"""
    if rx < tx:
        raise ClockOrderError(f"rx {rx} ms precedes tx {tx} ms")
    return (rx - tx) / 2


def packet_delivery_ratio(requested: int, received: int) -> float:
    """Received over requested (the reported figures are all <= 100%)"""
    if requested < 1:
        raise CounterCorruptionError("no requests were counted")
    if received < 0 or received > requested:
        raise CounterCorruptionError(f"{received} responses counted for {requested} requests")
    return received / requested


def summarize(
    session: SessionRecord,
    realtime_threshold_ms: float = REALTIME_THRESHOLD_MS,
    dataset_size: int = DATASET_SIZE,
) -> SessionStats:
    """Delay statistics over delivered probes plus the PDR from the counters"""
    if session.request_count != len(session.probes):
        raise CounterCorruptionError(
            f"request_count {session.request_count} but {len(session.probes)} probes recorded"
        )
    delivered = session.delivered
    if session.received_count != len(delivered):
        raise CounterCorruptionError(
            f"received_count {session.received_count} but {len(delivered)} probes delivered"
        )
    pdr = packet_delivery_ratio(session.request_count, session.received_count)

    counts = {
        "n_lost": sum(1 for p in session.probes if p.outcome == ProbeOutcome.LOST),
        "n_timed_out": sum(1 for p in session.probes if p.outcome == ProbeOutcome.TIMED_OUT),
    }
    if not delivered:
        return SessionStats(
            scenario=session.scenario,
            seed=session.seed,
            n_requested=session.request_count,
            n_delivered=0,
            pdr=pdr,
            **counts,
        )

    delays = np.array([propagation_delay(p.tx_ms, p.rx_ms) for p in delivered])
    stddev = float(np.std(delays, ddof=1)) if len(delays) > 1 else 0.0

    blocks = []
    for index, start in enumerate(range(0, len(delays), dataset_size)):
        block = delays[start:start + dataset_size]
        blocks.append(DatasetMean(
            index=index,
            size=len(block),
            mean_pd=float(np.mean(block)),
            partial=len(block) < dataset_size,
        ))

    return SessionStats(
        scenario=session.scenario,
        seed=session.seed,
        n_requested=session.request_count,
        n_delivered=len(delivered),
        pdr=pdr,
        mean_pd=float(np.mean(delays)),
        stddev_pd=stddev,
        min_pd=float(delays.min()),
        max_pd=float(delays.max()),
        dataset_means=blocks,
        realtime_violations=int((delays > realtime_threshold_ms).sum()),
        **counts,
    )


def pooled_mean(test_means: Sequence[float]) -> float:
    """Equal-weight pooling of per-test means"""
    if not test_means:
        raise ValueError("nothing to pool")
    return float(np.mean(test_means))
