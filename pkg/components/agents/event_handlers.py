"""
Event Handlers - logging subscribers for session, probe and topology events
"""
import logging
from typing import Optional

from components.managers.event_bus import Event, EventBus, EventType, get_event_bus

logger = logging.getLogger(__name__)


class EventHandlers:
    """Turns bus events into log lines; progress every `progress_every` probes"""

    def __init__(self, bus: Optional[EventBus] = None, progress_every: int = 100):
        self.event_bus = bus or get_event_bus()
        self.progress_every = progress_every
        self.completed = 0
        self.timeouts = 0
        self._register_handlers()

    def _register_handlers(self):
        self.event_bus.subscribe(EventType.SESSION_STARTED, self.handle_session_started)
        self.event_bus.subscribe(EventType.SESSION_COMPLETED, self.handle_session_completed)
        self.event_bus.subscribe(EventType.PROBE_DELIVERED, self.handle_probe_done)
        self.event_bus.subscribe(EventType.PROBE_TIMED_OUT, self.handle_probe_timed_out)
        self.event_bus.subscribe(EventType.PROBE_LOST, self.handle_probe_lost)
        self.event_bus.subscribe(EventType.DEVICE_CONNECTED, self.handle_device_connected)
        self.event_bus.subscribe(EventType.DEVICE_DISCONNECTED, self.handle_device_disconnected)
        self.event_bus.subscribe(EventType.FORMATION_FAILED, self.handle_formation_failed)

    def handle_session_started(self, event: Event):
        self.completed = 0
        self.timeouts = 0
        data = event.data
        logger.info(f"🚀 Session '{data.get('scenario')}' started: {data.get('requests')} requests")

    def handle_session_completed(self, event: Event):
        data = event.data
        logger.info(
            f"✅ Session '{data.get('scenario')}' done: "
            f"{data.get('received')}/{data.get('requested')} responses"
        )

    def handle_probe_done(self, event: Event):
        self.completed += 1
        if self.progress_every and self.completed % self.progress_every == 0:
            logger.debug(f"{self.completed} probes answered")

    def handle_probe_timed_out(self, event: Event):
        self.timeouts += 1
        logger.debug(f"⚠️ Probe {event.data.get('seq')} timed out")

    def handle_probe_lost(self, event: Event):
        logger.warning(f"⚠️ Probe {event.data.get('seq')} lost (bad or missing frame)")

    def handle_device_connected(self, event: Event):
        logger.info(f"🔌 Client connected: {event.data.get('peer')}")

    def handle_device_disconnected(self, event: Event):
        logger.info(f"🔌 Client disconnected: {event.data.get('peer')}")

    def handle_formation_failed(self, event: Event):
        data = event.data
        logger.error(
            f"❌ Scenario '{data.get('scenario')}' did not form ({data.get('verdict')}); "
            f"reachable from device side: {data.get('reachable')}"
        )
