"""
Event Bus - in-process publish/subscribe for session lifecycle and probe events
Engines publish; logging and capture handlers subscribe
"""
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Deque, Dict, List, Optional

logger = logging.getLogger(__name__)


class EventType(str, Enum):
    """Lab event types"""
    # Session events
    SESSION_STARTED = "session.started"
    SESSION_COMPLETED = "session.completed"

    # Probe events
    PROBE_SENT = "probe.sent"
    PROBE_DELIVERED = "probe.delivered"
    PROBE_TIMED_OUT = "probe.timed_out"
    PROBE_LOST = "probe.lost"

    # Live transport events
    DEVICE_CONNECTED = "device.connected"
    DEVICE_DISCONNECTED = "device.disconnected"

    # Topology events
    FORMATION_FAILED = "topology.formation_failed"


@dataclass(frozen=True)
class Event:
    """One published lab event"""

    event_type: EventType
    data: Dict[str, Any]
    source: str = "lab"
    timestamp: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.event_type.value,
            "source": self.source,
            "timestamp": self.timestamp.isoformat(),
            "data": self.data,
        }


Handler = Callable[[Event], None]


class EventBus:
    """Synchronous dispatcher; handler errors are logged, never raised"""

    def __init__(self, max_history: int = 1000):
        self._handlers: Dict[EventType, List[Handler]] = {}
        self._wildcard: List[Handler] = []
        self._history: Deque[Event] = deque(maxlen=max_history)
        self.published: Counter = Counter()

    def subscribe(self, event_type: Optional[EventType], handler: Handler):
        """Register handler for one event type, or for every type when event_type is None"""
        bucket = self._wildcard if event_type is None else self._handlers.setdefault(event_type, [])
        bucket.append(handler)
        logger.debug(f"✅ Subscribed {getattr(handler, '__name__', handler)!s} to "
                     f"{event_type.value if event_type else '*'}")

    def unsubscribe(self, event_type: Optional[EventType], handler: Handler):
        bucket = self._wildcard if event_type is None else self._handlers.get(event_type, [])
        if handler in bucket:
            bucket.remove(handler)

    def publish(self, event: Event):
        self._history.append(event)
        self.published[event.event_type] += 1

        for handler in [*self._handlers.get(event.event_type, ()), *self._wildcard]:
            try:
                handler(event)
            except Exception as e:
                logger.error(f"❌ Handler {getattr(handler, '__name__', handler)!s} failed on "
                             f"{event.event_type.value}: {e}")

    def publish_event(self, event_type: EventType, data: Dict[str, Any],
                      source: str = "lab") -> Event:
        event = Event(event_type, data, source)
        self.publish(event)
        return event

    def get_event_history(self, event_type: Optional[EventType] = None,
                          limit: int = 100) -> List[Event]:
        """Most recent events, oldest first"""
        matching = [e for e in self._history if event_type is None or e.event_type == event_type]
        return matching[-limit:] if limit else matching

    def clear_history(self):
        self._history.clear()
        self.published.clear()


_event_bus: Optional[EventBus] = None


def get_event_bus() -> EventBus:
    """Process-wide bus, created on first use"""
    global _event_bus
    if _event_bus is None:
        _event_bus = EventBus()
    return _event_bus


def set_event_bus(event_bus: Optional[EventBus]):
    """Replace the process-wide bus; None resets it"""
    global _event_bus
    _event_bus = event_bus
