import pytest

from mbmac import load_scenario
from mbmac.radio import Position
from mbmac.routing import (RouteSet, compute_route_set, neighbor_table, node_disjoint_routes,
                           shortest_path)


def positions_of(name):
    return {n.id: n.position for n in load_scenario(name).nodes}


def test_line_topology_has_one_route():
    pos = {i: Position(i * 1000.0, 0.0) for i in range(5)}
    adj = neighbor_table(pos, 1500)
    assert adj[0] == [1] and adj[2] == [1, 3]
    assert node_disjoint_routes(adj, 0, 4, 4) == [(0, 1, 2, 3, 4)]


def test_parallel_paths_are_all_found():
    adj = {0: [1, 2, 3], 1: [0, 9], 2: [0, 9], 3: [0, 9], 9: [1, 2, 3]}
    assert node_disjoint_routes(adj, 0, 9, 4) == [(0, 1, 9), (0, 2, 9), (0, 3, 9)]
    assert node_disjoint_routes(adj, 0, 9, 2) == [(0, 1, 9), (0, 2, 9)]


def test_direct_link_is_used_once():
    adj = {0: [1, 9], 1: [0, 9], 9: [0, 1]}
    assert node_disjoint_routes(adj, 0, 9, 4) == [(0, 9), (0, 1, 9)]


def test_reference_layout_route_through_the_hub():
    pos = positions_of("fig1-cpt")
    adj = neighbor_table(pos, 3000)
    assert shortest_path(adj, 1, 6) == (1, 5, 6)


def test_unreachable_destination():
    adj = {0: [1], 1: [0], 2: []}
    assert shortest_path(adj, 0, 2) is None
    assert node_disjoint_routes(adj, 0, 2, 4) == []


def test_route_set_round_robin_and_invalidation():
    rs = RouteSet(0, [(0, 1, 9), (0, 2, 9)], 0)
    assert [rs.next_route() for _ in range(3)] == [(0, 1, 9), (0, 2, 9), (0, 1, 9)]
    rs.invalidate((0, 1, 9))
    assert rs.alive == [(0, 2, 9)]
    rs.invalidate((0, 2, 9))
    assert rs.next_route() is None


def test_overlapping_routes_are_refused():
    with pytest.raises(AssertionError):
        RouteSet(0, [(0, 1, 9), (0, 1, 2, 9)], 0)


def test_compute_route_set_from_positions():
    pos = {0: Position(0, 0), 1: Position(1000, 1000), 2: Position(1000, -1000),
           9: Position(2000, 0)}
    rs = compute_route_set(3, pos, 1500, 0, 9, 4, 42)
    assert rs.flow_id == 3 and rs.computed_at == 42
    assert rs.routes == [(0, 1, 9), (0, 2, 9)]
