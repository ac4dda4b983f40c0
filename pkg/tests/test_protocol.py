import numpy as np
import pytest

from components.errors import EncodingError, FrameError
from components.models.protocol import (
    FIELD_OFFSETS,
    FRAME_LENGTH,
    AccelReading,
    DeviceState,
    ProtocolParams,
    SyntheticSensor,
    decode,
    device_step,
    encode,
    serial_tx_time,
)


def _reading(ax, ay, bx, by):
    return AccelReading(acc_ax=ax, acc_ay=ay, acc_bx=bx, acc_by=by)


@pytest.mark.parametrize("values, frame", [
    ((0, 0, 0, 0), b"*0000 0000 0000 0000 \n"),
    ((1023, 1023, 1023, 1023), b"*1023 1023 1023 1023 \n"),
    ((512, 300, 7, 64), b"*0512 0300 0007 0064 \n"),
])
def test_encode_examples(values, frame):
    assert encode(_reading(*values)) == frame
    assert decode(frame) == _reading(*values)


def test_encode_rejects_out_of_range():
    with pytest.raises(EncodingError):
        encode(_reading(1024, 0, 0, 0))
    with pytest.raises(EncodingError):
        encode(_reading(0, -1, 0, 0))


def test_random_readings_survive_the_codec():
    rng = np.random.default_rng(1)
    for values in rng.integers(0, 1024, size=(10_000, 4)):
        reading = _reading(*(int(v) for v in values))
        frame = encode(reading)
        assert len(frame) == FRAME_LENGTH
        assert frame[0:1] == b"*" and frame[-2:] == b" \n"
        assert decode(frame) == reading


def test_truncated_frame_reports_offset_21():
    frame = encode(_reading(1, 2, 3, 4))[:21]
    with pytest.raises(FrameError) as info:
        decode(frame)
    assert info.value.offset == 21


def test_overlong_frame_rejected():
    with pytest.raises(FrameError) as info:
        decode(encode(_reading(1, 2, 3, 4)) + b"x")
    assert info.value.offset == FRAME_LENGTH


def test_corruption_at_every_position_reports_that_offset():
    frame = encode(_reading(512, 300, 7, 64))
    for offset in range(FRAME_LENGTH):
        corrupted = bytearray(frame)
        corrupted[offset] = ord("x")
        with pytest.raises(FrameError) as info:
            decode(bytes(corrupted))
        assert info.value.offset == offset


def test_count_above_1023_rejected_at_field_start():
    with pytest.raises(FrameError) as info:
        decode(b"*0512 0300 2000 0064 \n")
    assert info.value.offset == FIELD_OFFSETS[2]


def test_serial_tx_time():
    assert serial_tx_time(22, 38400) == pytest.approx(4.583, abs=0.001)
    assert serial_tx_time(0, 38400) == 0
    assert serial_tx_time(22, 48000) == pytest.approx(3.667, abs=0.001)
    assert serial_tx_time(44, 38400) == pytest.approx(2 * serial_tx_time(22, 38400))


def test_serial_tx_time_needs_positive_baud():
    with pytest.raises(ValueError):
        serial_tx_time(22, 0)


def test_device_answers_start_byte_when_idle():
    params = ProtocolParams()
    state, emission = device_step(DeviceState(), params.start_byte, 1000, params, SyntheticSensor(3))
    assert emission is not None
    assert emission.at_us == 1000
    assert len(emission.frame) == FRAME_LENGTH
    assert state.ready_at_us == 1000 + 50_000


def test_device_ignores_other_bytes():
    params = ProtocolParams()
    state = DeviceState()
    new_state, emission = device_step(state, ord("x"), 0, params, SyntheticSensor())
    assert emission is None
    assert new_state == state


def test_second_start_byte_waits_for_loop_delay():
    params = ProtocolParams()
    sensor = SyntheticSensor(0)
    state, first = device_step(DeviceState(), params.start_byte, 0, params, sensor)
    state, second = device_step(state, params.start_byte, 10_000, params, sensor)
    assert first.at_us == 0
    assert second.at_us == 50_000


def test_start_bytes_beyond_one_pending_are_dropped():
    params = ProtocolParams()
    sensor = SyntheticSensor(0)
    state, _ = device_step(DeviceState(), params.start_byte, 0, params, sensor)
    state, queued = device_step(state, params.start_byte, 10_000, params, sensor)
    state, dropped = device_step(state, params.start_byte, 20_000, params, sensor)
    assert queued is not None and dropped is None
    # once the queued answer is out the device accepts again
    state, later = device_step(state, params.start_byte, 60_000, params, sensor)
    assert later.at_us == 100_000


def test_emissions_match_start_bytes_for_sequential_client():
    params = ProtocolParams()
    sensor = SyntheticSensor(5)
    state, emitted, now = DeviceState(), 0, 0
    for byte in [params.start_byte, ord("a"), params.start_byte, ord("\n"), params.start_byte]:
        state, emission = device_step(state, byte, now, params, sensor)
        if emission is not None:
            emitted += 1
            now = emission.at_us + 1
        now += 5_000
    assert emitted == 3


def test_sensor_stream_is_seeded():
    a, b = SyntheticSensor(9), SyntheticSensor(9)
    assert [a.read() for _ in range(5)] == [b.read() for _ in range(5)]
    assert SyntheticSensor(9).seed == 9
