"""
Live Agent - the probe protocol over raw TCP
The client sends the start byte, the device answers with one 22-byte pose string
"""
import asyncio
import logging
from enum import Enum
from typing import List, Optional, Tuple

from components.errors import FrameError, LiveSessionError
from components.managers.event_bus import EventBus, EventType, get_event_bus
from components.models.measurement import ProbeOutcome, ProbeRecord, SessionRecord
from components.models.protocol import (
    FRAME_LENGTH,
    DeviceState,
    ProtocolParams,
    SyntheticSensor,
    decode,
    device_step,
)

logger = logging.getLogger(__name__)


class LiveRole(str, Enum):
    """Which end of the link this process plays"""
    DEVICE = "Device"
    CLIENT = "Client"


def parse_address(address: str) -> Tuple[str, int]:
    """'host:port' -> (host, port)"""
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise LiveSessionError(f"address '{address}' is not host:port")
    return host or "127.0.0.1", int(port)


class DeviceServer:
    """Pose-string device; serves one client at a time"""

    def __init__(self, params: ProtocolParams, sensor: SyntheticSensor,
                 bus: Optional[EventBus] = None, max_sessions: Optional[int] = None,
                 capture: Optional[List[bytes]] = None):
        self.params = params
        self.sensor = sensor
        self.bus = bus or get_event_bus()
        self.max_sessions = max_sessions
        self.capture = capture
        self.sessions_served = 0
        self.frames_served = 0
        self._lock = asyncio.Lock()
        self._done = asyncio.Event()
        self._server: Optional[asyncio.AbstractServer] = None

    @property
    def port(self) -> int:
        return self._server.sockets[0].getsockname()[1]

    async def start(self, host: str, port: int) -> "DeviceServer":
        self._server = await asyncio.start_server(self._handle, host, port)
        logger.info(f"✅ Device listening on {host}:{self.port}")
        return self

    async def wait_closed(self):
        await self._done.wait()
        self._server.close()
        await self._server.wait_closed()

    def close(self):
        self._done.set()

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        async with self._lock:
            self.bus.publish_event(EventType.DEVICE_CONNECTED, {"peer": str(peer)}, source="device")
            loop = asyncio.get_running_loop()
            state = DeviceState()
            try:
                while True:
                    data = await reader.read(1)
                    if not data:
                        break
                    now_us = int(loop.time() * 1_000_000)
                    state, emission = device_step(state, data[0], now_us, self.params, self.sensor)
                    if emission is None:
                        continue
                    wait = (emission.at_us - now_us) / 1_000_000
                    if wait > 0:
                        await asyncio.sleep(wait)
                    writer.write(emission.frame)
                    await writer.drain()
                    self.frames_served += 1
                    if self.capture is not None:
                        self.capture.append(emission.frame)
            except ConnectionError as e:
                logger.warning(f"⚠️ Client {peer} dropped: {e}")
            finally:
                writer.close()
                try:
                    await writer.wait_closed()
                except ConnectionError:
                    pass
                self.sessions_served += 1
                self.bus.publish_event(EventType.DEVICE_DISCONNECTED, {"peer": str(peer)}, source="device")
                if self.max_sessions is not None and self.sessions_served >= self.max_sessions:
                    self._done.set()


async def serve_device(address: str, params: ProtocolParams, sensor_seed: int = 0,
                       max_sessions: Optional[int] = None, bus: Optional[EventBus] = None) -> int:
    """Run the device until max_sessions clients have come and gone; returns frames served"""
    host, port = parse_address(address)
    server = DeviceServer(params, SyntheticSensor(sensor_seed), bus, max_sessions)
    try:
        await server.start(host, port)
    except OSError as e:
        raise LiveSessionError(f"cannot listen on {address}: {e}") from e
    await server.wait_closed()
    return server.frames_served


class LiveClient:
    """Request loop: Tx stamp, start byte, read 22 bytes, Rx stamp"""

    def __init__(self, address: str, params: ProtocolParams, scenario: str = "live",
                 bus: Optional[EventBus] = None, capture: Optional[List[bytes]] = None):
        self.host, self.port = parse_address(address)
        self.address = address
        self.params = params
        self.scenario = scenario
        self.bus = bus or get_event_bus()
        self.capture = capture
        self._reader: Optional[asyncio.StreamReader] = None
        self._writer: Optional[asyncio.StreamWriter] = None

    async def _connect(self):
        try:
            self._reader, self._writer = await asyncio.wait_for(
                asyncio.open_connection(self.host, self.port),
                timeout=self.params.response_timeout / 1000,
            )
        except (OSError, asyncio.TimeoutError) as e:
            raise LiveSessionError(f"cannot connect to device at {self.address}: {e}") from e

    async def _reconnect(self, seq: int) -> bool:
        """Reconnect between requests; a failure costs this request, not the session"""
        try:
            await self._connect()
        except LiveSessionError as e:
            logger.warning(f"⚠️ Request {seq}: {e}")
            return False
        return True

    async def _disconnect(self):
        if self._writer is not None:
            self._writer.close()
            try:
                await self._writer.wait_closed()
            except (ConnectionResetError, BrokenPipeError):
                pass
        self._reader = self._writer = None

    async def run(self, n_requests: int) -> SessionRecord:
        if n_requests < 1:
            raise ValueError("n_requests must be >= 1")
        loop = asyncio.get_running_loop()
        origin = loop.time()

        def now_ms() -> float:
            return round((loop.time() - origin) * 1000, 3)

        await self._connect()
        self.bus.publish_event(
            EventType.SESSION_STARTED,
            {"scenario": self.scenario, "requests": n_requests, "device": self.address},
            source="client",
        )
        probes: List[ProbeRecord] = []
        try:
            for seq in range(n_requests):
                if self._writer is None and not await self._reconnect(seq):
                    record = ProbeRecord(seq=seq, tx_ms=now_ms(), outcome=ProbeOutcome.TIMED_OUT)
                    probes.append(record)
                    self.bus.publish_event(EventType.PROBE_TIMED_OUT, record.model_dump(mode="json"), source="client")
                    continue
                tx = now_ms()
                self.bus.publish_event(EventType.PROBE_SENT, {"seq": seq, "tx_ms": tx}, source="client")
                try:
                    self._writer.write(bytes([self.params.start_byte]))
                    await self._writer.drain()
                    frame = await asyncio.wait_for(
                        self._reader.readexactly(FRAME_LENGTH),
                        timeout=self.params.response_timeout / 1000,
                    )
                    rx = now_ms()
                    if self.capture is not None:
                        self.capture.append(frame)
                    decode(frame)
                    record = ProbeRecord(seq=seq, tx_ms=tx, rx_ms=max(rx, tx), outcome=ProbeOutcome.DELIVERED)
                    event = EventType.PROBE_DELIVERED
                except asyncio.TimeoutError:
                    # a late frame would desynchronize the stream
                    await self._disconnect()
                    record = ProbeRecord(seq=seq, tx_ms=tx, outcome=ProbeOutcome.TIMED_OUT)
                    event = EventType.PROBE_TIMED_OUT
                except FrameError as e:
                    logger.warning(f"⚠️ Probe {seq}: bad frame, {e}")
                    await self._disconnect()
                    record = ProbeRecord(seq=seq, tx_ms=tx, outcome=ProbeOutcome.LOST)
                    event = EventType.PROBE_LOST
                except (asyncio.IncompleteReadError, ConnectionError) as e:
                    logger.warning(f"⚠️ Probe {seq}: connection dropped, {e}")
                    await self._disconnect()
                    record = ProbeRecord(seq=seq, tx_ms=tx, outcome=ProbeOutcome.LOST)
                    event = EventType.PROBE_LOST
                probes.append(record)
                self.bus.publish_event(event, record.model_dump(mode="json"), source="client")
        finally:
            await self._disconnect()

        session = SessionRecord(
            scenario=self.scenario,
            seed=None,
            request_count=len(probes),
            received_count=sum(1 for p in probes if p.outcome == ProbeOutcome.DELIVERED),
            probes=probes,
        )
        self.bus.publish_event(
            EventType.SESSION_COMPLETED,
            {"scenario": session.scenario, "requested": session.request_count, "received": session.received_count},
            source="client",
        )
        return session


def live_session(role: LiveRole, address: str, n_requests: int, params: ProtocolParams,
                 scenario: str = "live", sensor_seed: int = 0,
                 max_sessions: Optional[int] = None) -> Optional[SessionRecord]:
    """
    Blocking entry point for either role

    Client returns the SessionRecord; Device serves until max_sessions
    clients have disconnected (forever when None) and returns None.
    """
    if role == LiveRole.CLIENT:
        return asyncio.run(LiveClient(address, params, scenario).run(n_requests))
    served = asyncio.run(serve_device(address, params, sensor_seed, max_sessions))
    logger.info(f"✅ Device served {served} frames")
    return None
