"""Property checks over randomly generated inputs."""

import math
import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mbmac import ConfigError, engine, parse_scenario, simulate
from mbmac.mac.common import CW_VALUES, BackoffState, cw_on_result
from mbmac.mac.proposed import WindowPeriodError, compute_window_period, window_lower_bound
from mbmac.mobility import GaussMarkovParams, GMState, gm_step
from mbmac.radio import beam_reception_outcome
from mbmac.routing import node_disjoint_routes, shortest_path

from scenarios import node


@given(st.lists(st.integers(0, 50), min_size=1, max_size=40))
def test_events_fire_in_time_then_fifo_order(times):
    sim = engine.Simulator()
    fired = []
    for i, t in enumerate(times):
        sim.schedule(t, engine.TIMER, None, fired.append, (t, i))
    sim.run_until(100)
    assert fired == sorted(fired)


@given(st.lists(st.tuples(st.integers(0, 100), st.integers(1, 30)), max_size=8))
def test_an_arrival_survives_exactly_when_nothing_overlaps_it(spans):
    intervals = [(s, s + d) for s, d in spans]
    ok = beam_reception_outcome(intervals)
    for i, (s, e) in enumerate(intervals):
        clash = any(s < e2 and s2 < e for j, (s2, e2) in enumerate(intervals) if j != i)
        assert ok[i] is (not clash)


@given(st.dictionaries(st.integers(0, 5), st.lists(st.integers(0, 10_000), max_size=5),
                       max_size=4),
       st.integers(0, 20_000))
def test_window_validation_matches_its_bounds(delays, requested):
    sifs = 10_000
    lower = window_lower_bound(delays)
    try:
        assert compute_window_period(delays, sifs, requested) == requested
        assert lower <= requested < sifs
    except WindowPeriodError:
        assert not lower <= requested < sifs


@given(st.lists(st.booleans(), max_size=30))
def test_contention_window_stays_on_the_ladder(outcomes):
    b = BackoffState()
    for ok in outcomes:
        cw_on_result(b, ok)
        assert b.cw in CW_VALUES


@st.composite
def graphs(draw):
    n = draw(st.integers(2, 12))
    edges = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=30))
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    return {k: sorted(v) for k, v in adj.items()}


@given(graphs(), st.integers(1, 4))
def test_routes_are_valid_and_node_disjoint(adj, k):
    src, dst = 0, max(adj)
    routes = node_disjoint_routes(adj, src, dst, k)
    assert len(routes) <= k
    inner = set()
    for r in routes:
        assert r[0] == src and r[-1] == dst
        assert all(b in adj[a] for a, b in zip(r, r[1:]))
        assert not inner & set(r[1:-1])
        inner |= set(r[1:-1])
    assert len({r for r in routes if len(r) == 2}) <= 1
    first = shortest_path(adj, src, dst)
    assert (routes[0] if routes else None) == first


@given(st.integers(0, 2**32), st.floats(0.0, 1.0))
def test_mobility_never_leaves_the_area(seed, alpha):
    p = GaussMarkovParams(alpha=alpha, mean_speed=300.0)
    rng = random.Random(seed)
    s = GMState(rng.uniform(0, 10_000), rng.uniform(0, 10_000), 40.0, 0.0, 0.0)
    for _ in range(50):
        s = gm_step(s, p, rng, 1.0)
        assert 0 <= s.x <= p.width and 0 <= s.y <= p.height and s.speed >= 0


@st.composite
def static_scenarios(draw):
    """A multi-beam hub with a few single-beam neighbors sending to it or receiving from it."""
    k = draw(st.integers(1, 4))
    nodes = [node(0, 5000, 5000, {"num_beams": 8})]
    flows = []
    for i in range(1, k + 1):
        angle = draw(st.floats(0, 6.28))
        dist = draw(st.floats(1800, 2900))  # spread stays under the window
        nodes.append(node(i, 5000 + dist * math.cos(angle), 5000 + dist * math.sin(angle), peer=0))
        inbound = draw(st.booleans())
        flows.append({"src": i if inbound else 0, "dst": 0 if inbound else i,
                      "rate_bps": draw(st.sampled_from([5e5, 1e6, 3e6]))})
    raw = {"name": "prop", "nodes": nodes, "flows": flows, "routing": {"k": 1},
           "mac": {"variant": draw(st.sampled_from(["basic", "proposed"])),
                   "window_period_us": 9.9},
           "sim": {"duration_s": 0.3, "seed": draw(st.integers(0, 1000))}}
    return raw


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(static_scenarios())
def test_random_static_scenarios_hold_every_runtime_invariant(raw):
    try:
        cfg = parse_scenario(raw)
    except ConfigError as exc:        # spread too wide for the window
        assert exc.code.startswith("window")
        return
    res = simulate(cfg)               # debug mode raises on any invariant breach
    for s in res.stats.values():
        assert s.delivered + s.dropped <= s.generated
