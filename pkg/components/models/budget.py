"""
Delay Budget - deterministic floor beneath the measured propagation delay
"""
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict

from components.models.protocol import FRAME_LENGTH, ProtocolParams, serial_tx_time

DEFAULT_PER_ROUTER_DELAY = 2.0
DEFAULT_WIFI_MODULE_MAX = 19.0

# the budget counts routers, not inter-router hops (4 routers -> 8 ms)
ROUTER_COUNT_NOTE = (
    "mesh term multiplies the router count, not the inter-router hop count "
    "(a 4-router chain has 3 hops but is charged 4 x per-router delay)"
)


class DelayBudget(BaseModel):
    """Budget components in ms"""

    model_config = ConfigDict(frozen=True)

    router_count: int
    serial_tx: float
    device_loop: float
    wifi_module: float
    mesh_routers: float
    total: float
    breakdown: List[Tuple[str, float]]


class DirectionFloors(BaseModel):
    """Minimum one-way delays in µs ticks"""

    model_config = ConfigDict(frozen=True)

    forward_us: int
    return_us: int


def compute_budget(
    router_count: int,
    params: ProtocolParams,
    per_router_delay: float = DEFAULT_PER_ROUTER_DELAY,
    wifi_module_max: float = DEFAULT_WIFI_MODULE_MAX,
) -> DelayBudget:
    if router_count < 0:
        raise ValueError("router_count must be >= 0")
    if per_router_delay < 0 or wifi_module_max < 0:
        raise ValueError("delay components must be >= 0")

    breakdown = [
        ("serial_tx", serial_tx_time(FRAME_LENGTH, params.serial_baud)),
        ("device_loop", params.device_loop_delay),
        ("wifi_module", wifi_module_max),
        ("mesh_routers", router_count * per_router_delay),
    ]
    values = dict(breakdown)
    return DelayBudget(
        router_count=router_count,
        serial_tx=values["serial_tx"],
        device_loop=values["device_loop"],
        wifi_module=values["wifi_module"],
        mesh_routers=values["mesh_routers"],
        total=sum(v for _, v in breakdown),
        breakdown=breakdown,
    )


def direction_floors(
    router_count: int,
    params: ProtocolParams,
    per_router_delay: float = DEFAULT_PER_ROUTER_DELAY,
    wifi_module_max: float = DEFAULT_WIFI_MODULE_MAX,
) -> DirectionFloors:
    """
    Per-direction deterministic delay

    Forward carries the single start byte, return carries the pose string;
    both cross the Wi-Fi module and every router. The device loop delay only
    spaces consecutive responses and is not part of either floor.
    """
    shared = wifi_module_max + router_count * per_router_delay
    forward = serial_tx_time(1, params.serial_baud) + shared
    back = serial_tx_time(FRAME_LENGTH, params.serial_baud) + shared
    return DirectionFloors(
        forward_us=int(round(forward * 1000)),
        return_us=int(round(back * 1000)),
    )
