import asyncio
import socket

import pytest

from components.agents.live_agent import DeviceServer, LiveClient, LiveRole, live_session, parse_address
from components.agents.simulation_agent import run_session
from components.errors import LiveSessionError
from components.models.measurement import ProbeOutcome, summarize
from components.models.protocol import AccelReading, ProtocolParams, SyntheticSensor, encode

FAST = ProtocolParams(device_loop_delay=5.0, response_timeout=1000.0)


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


async def _loopback(n_requests, params, seed=0, capture=None):
    server = await DeviceServer(params, SyntheticSensor(seed), max_sessions=1).start("127.0.0.1", 0)
    client = LiveClient(f"127.0.0.1:{server.port}", params, scenario="loopback", capture=capture)
    session = await client.run(n_requests)
    await asyncio.wait_for(server.wait_closed(), timeout=5)
    return session, server


def test_parse_address():
    assert parse_address("127.0.0.1:9000") == ("127.0.0.1", 9000)
    assert parse_address(":9000") == ("127.0.0.1", 9000)
    with pytest.raises(LiveSessionError):
        parse_address("localhost")
    with pytest.raises(LiveSessionError):
        parse_address("localhost:http")


def test_loopback_session():
    session, server = asyncio.run(_loopback(100, ProtocolParams()))
    stats = summarize(session)
    assert stats.pdr == 1.0
    assert stats.mean_pd < 50
    assert server.frames_served == 100
    assert session.seed is None


def test_live_frames_match_simulated_frames(config1):
    live_frames, sim_frames = [], []
    asyncio.run(_loopback(20, FAST, seed=8, capture=live_frames))
    run_session(config1, 20, seed=8, capture=sim_frames)
    assert live_frames == sim_frames


def test_absent_device_raises():
    client = LiveClient(f"127.0.0.1:{_free_port()}", FAST)
    with pytest.raises(LiveSessionError):
        asyncio.run(client.run(3))


def test_live_session_client_role_without_device():
    with pytest.raises(LiveSessionError):
        live_session(LiveRole.CLIENT, f"127.0.0.1:{_free_port()}", 3, FAST)


def test_silent_device_times_out():
    async def scenario():
        async def swallow(reader, writer):
            while await reader.read(1):
                pass
            writer.close()

        server = await asyncio.start_server(swallow, "127.0.0.1", 0)
        port = server.sockets[0].getsockname()[1]
        params = ProtocolParams(response_timeout=50.0)
        try:
            return await LiveClient(f"127.0.0.1:{port}", params).run(3)
        finally:
            server.close()
            await server.wait_closed()

    session = asyncio.run(scenario())
    assert [p.outcome for p in session.probes] == [ProbeOutcome.TIMED_OUT] * 3
    assert session.received_count == 0


def test_device_survives_a_killed_client():
    async def scenario():
        server = await DeviceServer(FAST, SyntheticSensor(1), max_sessions=2).start("127.0.0.1", 0)
        _, writer = await asyncio.open_connection("127.0.0.1", server.port)
        writer.write(bytes([FAST.start_byte]))
        await writer.drain()
        writer.transport.abort()

        session = await LiveClient(f"127.0.0.1:{server.port}", FAST).run(5)
        await asyncio.wait_for(server.wait_closed(), timeout=5)
        return session, server

    session, server = asyncio.run(scenario())
    assert session.received_count == 5
    assert server.sessions_served == 2


def test_device_lost_mid_session_keeps_the_record():
    frame = encode(AccelReading(acc_ax=512, acc_ay=500, acc_bx=7, acc_by=1023))

    async def scenario():
        listening = []

        async def answer_twice_then_vanish(reader, writer):
            for _ in range(2):
                await reader.readexactly(1)
                writer.write(frame)
                await writer.drain()
            listening[0].close()
            writer.close()

        server = await asyncio.start_server(answer_twice_then_vanish, "127.0.0.1", 0)
        listening.append(server)
        port = server.sockets[0].getsockname()[1]
        try:
            return await LiveClient(f"127.0.0.1:{port}", FAST).run(5)
        finally:
            server.close()
            await asyncio.wait_for(server.wait_closed(), timeout=5)

    session = asyncio.run(scenario())
    outcomes = [p.outcome for p in session.probes]
    assert outcomes[:2] == [ProbeOutcome.DELIVERED] * 2
    assert outcomes[2] == ProbeOutcome.LOST
    assert outcomes[3:] == [ProbeOutcome.TIMED_OUT] * 2
    assert session.request_count == 5
    assert session.received_count == 2
    assert summarize(session).pdr == 0.4

def test_requests_must_be_positive():
    with pytest.raises(ValueError):
        asyncio.run(LiveClient("127.0.0.1:1", FAST).run(0))
