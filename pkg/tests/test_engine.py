import pytest

from mbmac import engine


def test_same_instant_events_fire_in_schedule_order():
    sim = engine.Simulator()
    fired = []
    for tag in "abc":
        sim.schedule(100, engine.TIMER, None, fired.append, tag)
    sim.schedule(50, engine.TIMER, None, fired.append, "first")
    sim.run_until(1000)
    assert fired == ["first", "a", "b", "c"]


def test_cancelled_event_never_fires():
    sim = engine.Simulator()
    fired = []
    h = sim.schedule(10, engine.TIMER, None, fired.append, 1)
    assert sim.cancel(h)
    assert not sim.cancel(h)
    sim.run_until(100)
    assert fired == []
    assert not h.pending


def test_scheduling_in_the_past_is_rejected():
    sim = engine.Simulator()
    sim.schedule(10, engine.TIMER, None, lambda: None)
    sim.run_until(20)
    with pytest.raises(engine.SchedulingError):
        sim.schedule(5, engine.TIMER, None, lambda: None)


def test_run_until_stops_at_horizon_and_resumes():
    sim = engine.Simulator()
    seen = []
    sim.schedule(5, engine.TIMER, None, lambda: seen.append(sim.now))
    sim.schedule(15, engine.TIMER, None, lambda: seen.append(sim.now))
    sim.run_until(10)
    assert seen == [5] and sim.now == 10
    sim.run_until(20)
    assert seen == [5, 15]
    assert sim.stats.processed[engine.TIMER] == 2


def test_unit_conversions():
    assert engine.us(9) == 9000
    assert engine.us(6.6667) == 6667
    assert engine.seconds(1.5) == 1_500_000_000


def test_rng_streams_are_independent_and_reproducible():
    a1 = engine.RngStream(7, "mobility")
    a2 = engine.RngStream(7, "mobility")
    b = engine.RngStream(7, "flows")
    xs = [a1.random() for _ in range(5)]
    assert xs == [a2.random() for _ in range(5)]
    assert xs != [b.random() for _ in range(5)]
    assert engine.stream_seed(1, "x") != engine.stream_seed(2, "x")
