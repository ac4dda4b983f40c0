"""
Error types shared across the measurement lab
Each error maps to one CLI exit code (see meshprobe/cli.py)
"""
from typing import Any, Dict, List, Optional, Sequence


class MeshProbeError(Exception):
    """Base class for every error raised by the lab"""

    kind = "error"


class GeometryError(MeshProbeError):
    """Degenerate geometry (zero-length segment, bad wall, ...)"""

    kind = "geometry"


class RadioError(MeshProbeError):
    """Link query the radio model cannot answer (endpoint off the floor plan)"""

    kind = "radio"


class CalibrationError(MeshProbeError):
    """No grid point lands within tolerance of every target"""

    kind = "calibration"

    def __init__(self, message: str, residuals: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.residuals = residuals or []


class FormationFailure(MeshProbeError):
    """The device-side router has no usable path to the gateway"""

    kind = "formation"

    def __init__(self, message: str, reachable: Sequence[int] = (), report: Any = None):
        super().__init__(message)
        self.reachable = sorted(reachable)
        self.report = report


class EncodingError(MeshProbeError):
    """Accelerometer reading outside the 10-bit range"""

    kind = "encoding"


class FrameError(MeshProbeError):
    """Malformed pose string; offset points at the first bad byte"""

    kind = "frame"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ClockOrderError(MeshProbeError):
    """Receive timestamp earlier than transmit timestamp"""

    kind = "clock-order"


class CounterCorruptionError(MeshProbeError):
    """More responses counted than requests issued"""

    kind = "counter"


class ScenarioError(MeshProbeError):
    """Scenario file failed validation"""

    kind = "scenario"

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if field:
            location = f"{field}"
            if line:
                location += f" (line {line})"
            location += ": "
        super().__init__(f"{location}{message}")
        self.field = field
        self.line = line


class LiveSessionError(MeshProbeError):
    """Live transport could not be established"""

    kind = "io"
