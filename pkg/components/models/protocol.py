"""
Probe Protocol - pose-string codec, serial timing and the device endpoint state machine
Frame: "*AAAA BBBB CCCC DDDD \n", 22 bytes, four zero-padded 10-bit counts
"""
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from components.errors import EncodingError, FrameError

FRAME_LENGTH = 22
FRAME_START = ord("*")
FRAME_SEPARATOR = ord(" ")
FRAME_END = ord("\n")
MAX_COUNT = 1023

# byte offset of each 4-digit field
FIELD_OFFSETS = (1, 6, 11, 16)
SEPARATOR_OFFSETS = (5, 10, 15, 20)


class AccelReading(BaseModel):
    """Raw counts from the two accelerometers; 0..1023 each"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    acc_ax: int
    acc_ay: int
    acc_bx: int
    acc_by: int

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.acc_ax, self.acc_ay, self.acc_bx, self.acc_by)


class ProtocolParams(BaseModel):
    """Wire and device timing parameters"""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    start_byte: int = Field(default=0x7E, ge=0, le=255)
    device_loop_delay: float = Field(default=50.0, ge=0)
    serial_baud: float = Field(default=38400.0, gt=0)
    response_timeout: float = Field(default=2000.0, gt=0)

    @property
    def loop_delay_us(self) -> int:
        return int(round(self.device_loop_delay * 1000))

    @property
    def timeout_us(self) -> int:
        return int(round(self.response_timeout * 1000))


def encode(reading: AccelReading) -> bytes:
    """Reading to its 22-byte pose string"""
    for name, value in zip(("acc_ax", "acc_ay", "acc_bx", "acc_by"), reading.as_tuple()):
        if not 0 <= value <= MAX_COUNT:
            raise EncodingError(f"{name}={value} outside 0..{MAX_COUNT}")
    return ("*%04d %04d %04d %04d \n" % reading.as_tuple()).encode("ascii")


def decode(frame: bytes) -> AccelReading:
    """Pose string to reading; FrameError points at the first offending byte"""
    frame = bytes(frame)
    span = min(len(frame), FRAME_LENGTH)

    for offset in range(span):
        byte = frame[offset]
        if offset == 0:
            if byte != FRAME_START:
                raise FrameError("expected '*'", offset)
        elif offset in SEPARATOR_OFFSETS:
            if byte != FRAME_SEPARATOR:
                raise FrameError("expected space", offset)
        elif offset == FRAME_LENGTH - 1:
            if byte != FRAME_END:
                raise FrameError("expected newline", offset)
        elif not 0x30 <= byte <= 0x39:
            raise FrameError("expected digit", offset)

    if len(frame) != FRAME_LENGTH:
        raise FrameError(f"frame is {len(frame)} bytes, expected {FRAME_LENGTH}", span)

    values = []
    for start in FIELD_OFFSETS:
        value = int(frame[start:start + 4])
        if value > MAX_COUNT:
            raise FrameError(f"count {value} exceeds {MAX_COUNT}", start)
        values.append(value)
    return AccelReading(acc_ax=values[0], acc_ay=values[1], acc_bx=values[2], acc_by=values[3])


def serial_tx_time(n_bytes: int, baud: float) -> float:
    """
    Serial transfer time in ms

    8 bits per byte, start and stop bits not counted (176 bits for a frame).
    """
    if baud <= 0:
        raise ValueError("baud must be positive")
    return n_bytes * 8 / baud * 1000


class SyntheticSensor:
    """Seeded stream of accelerometer readings"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng([0xCE, seed])

    def read(self) -> AccelReading:
        ax, ay, bx, by = (int(v) for v in self._rng.integers(0, MAX_COUNT + 1, size=4))
        return AccelReading(acc_ax=ax, acc_ay=ay, acc_bx=bx, acc_by=by)


class DeviceState(BaseModel):
    """Device loop state on the µs clock"""

    model_config = ConfigDict(frozen=True)

    ready_at_us: int = 0
    pending_at_us: Optional[int] = None


class Emission(BaseModel):
    """Pose string leaving the device at a given instant"""

    model_config = ConfigDict(frozen=True)

    at_us: int
    frame: bytes


def device_step(
    state: DeviceState,
    input_byte: int,
    now_us: int,
    params: ProtocolParams,
    sensor: SyntheticSensor,
) -> Tuple[DeviceState, Optional[Emission]]:
    """
    Feed one received byte to the device loop

    Idle: answer at once, then sleep for the loop delay. During the delay one
    start byte is queued and answered when the delay ends; further start
    bytes before that answer goes out are dropped.
    """
    if input_byte != params.start_byte:
        return state, None
    if state.pending_at_us is not None and now_us < state.pending_at_us:
        return state, None

    at_us = max(now_us, state.ready_at_us)
    emission = Emission(at_us=at_us, frame=encode(sensor.read()))
    next_state = DeviceState(
        ready_at_us=at_us + params.loop_delay_us,
        pending_at_us=at_us if at_us > now_us else None,
    )
    return next_state, emission
