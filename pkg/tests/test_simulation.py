import pytest

from components.agents.simulation_agent import SimulationAgent, run_session
from components.errors import FormationFailure
from components.managers.event_bus import EventType
from components.models.measurement import ProbeOutcome, summarize
from components.models.protocol import FRAME_LENGTH, decode
from components.models.scenario import StochasticModel
from components.models.topology import FormationVerdict

FLOOR_PD_MS = (27208 + 31583) / 2000


def _quiet(scenario):
    return scenario.model_copy(update={"stochastic": StochasticModel()})


def test_config1_delivers_everything(config1):
    stats = summarize(run_session(config1, 200, seed=1))
    assert stats.pdr == 1.0
    assert stats.n_delivered == 200


def test_no_contention_gives_the_floor_exactly(config1):
    session = run_session(_quiet(config1), 50, seed=3)
    stats = summarize(session)
    assert stats.pdr == 1.0
    assert stats.mean_pd == pytest.approx(FLOOR_PD_MS, abs=1e-9)
    assert stats.stddev_pd == pytest.approx(0.0, abs=1e-9)


def test_floors_follow_the_route(config1):
    agent = SimulationAgent(config1)
    assert agent.route.hops == [1, 2, 3, 4]
    assert agent.floors.forward_us == 27208
    assert agent.floors.return_us == 31583
    assert all(loss == 0 for loss in agent.link_loss)


def test_same_seed_same_record(config2):
    assert run_session(config2, 150, seed=42) == run_session(config2, 150, seed=42)


def test_different_seeds_differ(config2):
    assert run_session(config2, 150, seed=1) != run_session(config2, 150, seed=2)


def test_probes_are_sequential(config3):
    session = run_session(config3, 300, seed=5)
    timeout_ms = config3.protocol.response_timeout
    for previous, current in zip(session.probes, session.probes[1:]):
        done = previous.rx_ms if previous.rx_ms is not None else previous.tx_ms + timeout_ms
        assert current.tx_ms == pytest.approx(done, abs=1e-9)
    assert [p.seq for p in session.probes] == list(range(300))


def test_config2_pdr_band(config2):
    stats = summarize(run_session(config2, 1000, seed=7))
    assert 0.85 <= stats.pdr <= 0.91


@pytest.mark.parametrize("name", ["config1", "config2", "config3"])
def test_calibrated_figures(name, request):
    scenario = request.getfixturevalue(name)
    stats = summarize(run_session(scenario, 1000, seed=2024))
    expected = scenario.expected
    assert stats.mean_pd == pytest.approx(expected.mean_pd, rel=0.10)
    assert abs(stats.pdr - expected.pdr) <= 0.03


def test_delay_grows_and_delivery_drops_with_configuration(config1, config2, config3):
    for seed in range(20):
        stats = [summarize(run_session(s, 1000, seed)) for s in (config1, config2, config3)]
        means = [s.mean_pd for s in stats]
        pdrs = [s.pdr for s in stats]
        assert means[0] < means[1] < means[2], seed
        assert pdrs[0] > pdrs[1] > pdrs[2], seed


def test_no_probe_beats_the_floor(config1, config2, config3):
    for scenario in (config1, config2, config3):
        agent = SimulationAgent(scenario)
        floor_ms = (agent.floors.forward_us + agent.floors.return_us) / 1000
        for seed in range(10):
            for probe in agent.run_session(200, seed).delivered:
                assert probe.rx_ms - probe.tx_ms >= floor_ms - 1e-9


def test_lost_frames_never_deliver(config3):
    session = run_session(config3, 300, seed=9)
    for probe in session.probes:
        if probe.outcome != ProbeOutcome.DELIVERED:
            assert probe.rx_ms is None
        else:
            assert probe.rx_ms >= probe.tx_ms


def test_capture_holds_every_device_frame(config1):
    frames = []
    run_session(config1, 40, seed=4, capture=frames)
    assert len(frames) == 40
    for frame in frames:
        assert len(frame) == FRAME_LENGTH
        decode(frame)


def test_tiny_timeout_times_everything_out(config1):
    protocol = config1.protocol.model_copy(update={"response_timeout": 1.0})
    session = run_session(config1.model_copy(update={"protocol": protocol}), 30, seed=1)
    assert all(p.outcome == ProbeOutcome.TIMED_OUT for p in session.probes)
    assert summarize(session).pdr == 0


def test_requests_must_be_positive(config1):
    with pytest.raises(ValueError):
        run_session(config1, 0, seed=1)


def test_config4_does_not_run(config4, event_bus):
    with pytest.raises(FormationFailure) as info:
        run_session(config4, 10, seed=1)
    assert info.value.report.verdict == FormationVerdict.PARTIAL
    assert info.value.reachable == [1, 2, 3]
    assert event_bus.get_event_history(EventType.FORMATION_FAILED)


def test_session_events_published(config1, event_bus):
    run_session(config1, 5, seed=1)
    assert len(event_bus.get_event_history(EventType.PROBE_SENT)) == 5
    assert len(event_bus.get_event_history(EventType.PROBE_DELIVERED)) == 5
    completed = event_bus.get_event_history(EventType.SESSION_COMPLETED)
    assert completed[-1].data["received"] == 5


def test_slow_mesh_counts_realtime_violations(config1):
    # responses take over two seconds each way but still beat a long timeout
    protocol = config1.protocol.model_copy(update={"response_timeout": 10000.0})
    slow = config1.model_copy(update={
        "protocol": protocol,
        "stochastic": StochasticModel(contention_mean=2500.0),
    })
    stats = summarize(run_session(slow, 20, seed=1))
    assert stats.n_delivered == 20
    assert stats.min_pd > 2000.0
    assert stats.realtime_violations == 20
