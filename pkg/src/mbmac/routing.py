"""Oracle neighbor discovery and node-disjoint multipath routes."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .radio import Position, azimuth


def neighbor_table(positions: dict[int, Position], radius: float) -> dict[int, list[int]]:
    ids = sorted(positions)
    adj: dict[int, list[int]] = {n: [] for n in ids}
    for i, a in enumerate(ids):
        pa = positions[a]
        for b in ids[i + 1:]:
            if pa.distance(positions[b]) <= radius:
                adj[a].append(b)
                adj[b].append(a)
    return adj


def neighbor_azimuths(positions: dict[int, Position], adj: dict[int, list[int]], node: int):
    return {n: azimuth(positions[node], positions[n]) for n in adj[node]}


def shortest_path(adj: dict[int, list[int]], src: int, dst: int, banned: set[int] = frozenset(),
                  banned_edges: set[tuple[int, int]] = frozenset()) -> tuple[int, ...] | None:
    """BFS with neighbors visited in ascending id order."""
    prev = {src: None}
    q = deque([src])
    while q:
        u = q.popleft()
        if u == dst:
            break
        for v in sorted(adj.get(u, ())):
            if v in prev or (v in banned and v != dst) or (u, v) in banned_edges:
                continue
            prev[v] = u
            q.append(v)
    if dst not in prev:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return tuple(reversed(path))


def node_disjoint_routes(adj: dict[int, list[int]], src: int, dst: int, k: int) -> list[tuple[int, ...]]:
    routes: list[tuple[int, ...]] = []
    banned: set[int] = set()
    banned_edges: set[tuple[int, int]] = set()
    while len(routes) < k:
        p = shortest_path(adj, src, dst, banned, banned_edges)
        if p is None:
            break
        routes.append(p)
        if len(p) == 2:
            banned_edges.add((src, dst))
        banned.update(p[1:-1])
    return routes


@dataclass
class RouteSet:
    flow_id: int
    routes: list[tuple[int, ...]]
    computed_at: int
    dead: set[tuple[int, ...]] = field(default_factory=set)
    _rr: int = 0

    def __post_init__(self):
        self.check_disjoint()

    def check_disjoint(self) -> None:
        seen: set[int] = set()
        for r in self.routes:
            mid = set(r[1:-1])
            assert not (mid & seen), f"routes of flow {self.flow_id} share nodes {mid & seen}"
            seen |= mid

    @property
    def alive(self) -> list[tuple[int, ...]]:
        return [r for r in self.routes if r not in self.dead]

    def next_route(self) -> tuple[int, ...] | None:
        alive = self.alive
        if not alive:
            return None
        r = alive[self._rr % len(alive)]
        self._rr += 1
        return r

    def invalidate(self, route: tuple[int, ...]) -> None:
        if route in self.routes:
            self.dead.add(route)


def compute_route_set(flow_id: int, positions: dict[int, Position], radius: float, src: int,
                      dst: int, k: int, now: int) -> RouteSet:
    adj = neighbor_table(positions, radius)
    return RouteSet(flow_id, node_disjoint_routes(adj, src, dst, k), now)
