"""Node placement and Gauss-Markov mobility."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .radio import Position


@dataclass
class GaussMarkovParams:
    mean_speed: float = 40.0
    speed_sigma: float = 5.0
    direction_sigma: float = 0.3
    alpha: float = 0.75
    update_interval: float = 1.0
    width: float = 10_000.0
    height: float = 10_000.0


@dataclass
class GMState:
    x: float
    y: float
    speed: float
    direction: float
    mean_direction: float


def _reflect(v: float, bound: float) -> tuple[float, bool]:
    flipped = False
    # a step never exceeds the world size, so one or two folds suffice
    for _ in range(4):
        if v < 0:
            v, flipped = -v, not flipped
        elif v > bound:
            v, flipped = 2 * bound - v, not flipped
        else:
            break
    return v, flipped


def gm_step(state: GMState, params: GaussMarkovParams, rng: random.Random, dt: float) -> GMState:
    """Advance one Gauss-Markov step: new speed/direction, then move for ``dt``."""
    a = params.alpha
    k = math.sqrt(max(0.0, 1.0 - a * a))
    speed = a * state.speed + (1 - a) * params.mean_speed + k * params.speed_sigma * rng.gauss(0, 1)
    direction = (a * state.direction + (1 - a) * state.mean_direction
                 + k * params.direction_sigma * rng.gauss(0, 1))
    speed = max(speed, 0.0)
    x = state.x + speed * math.cos(direction) * dt
    y = state.y + speed * math.sin(direction) * dt
    mean_dir = state.mean_direction
    x, fx = _reflect(x, params.width)
    y, fy = _reflect(y, params.height)
    if fx:
        direction, mean_dir = math.pi - direction, math.pi - mean_dir
    if fy:
        direction, mean_dir = -direction, -mean_dir
    return GMState(x, y, speed, direction, mean_dir)


class StaticMobility:
    mobile = False

    def __init__(self, positions: dict[int, Position]):
        self.positions = dict(positions)

    def position(self, node_id: int, t: int) -> Position:
        return self.positions[node_id]


@dataclass
class GaussMarkovMobility:
    """Piecewise-linear trajectories between Gauss-Markov update instants."""

    params: GaussMarkovParams
    rng: random.Random
    states: dict[int, GMState] = field(default_factory=dict)
    mobile: bool = True

    def __post_init__(self):
        self._t0 = 0
        self._t1 = 0
        self._seg: dict[int, tuple[float, float, float, float]] = {}
        self._memo_t = -1
        self._memo: dict[int, Position] = {}

    @classmethod
    def random_placement(cls, node_ids, params: GaussMarkovParams, rng: random.Random):
        states = {}
        for n in node_ids:
            d = rng.uniform(0, 2 * math.pi)
            states[n] = GMState(rng.uniform(0, params.width), rng.uniform(0, params.height),
                                params.mean_speed, d, d)
        m = cls(params, rng, states)
        m.advance(0)
        return m

    def advance(self, t_ns: int) -> None:
        """Fix the segment [t_ns, t_ns + update_interval] for every node."""
        dt = self.params.update_interval
        self._t0 = t_ns
        self._t1 = t_ns + int(round(dt * 1e9))
        self._memo_t = -1
        for n in sorted(self.states):
            s = self.states[n]
            nxt = gm_step(s, self.params, self.rng, dt)
            self._seg[n] = (s.x, s.y, nxt.x - s.x, nxt.y - s.y)
            self.states[n] = nxt

    def position(self, node_id: int, t: int) -> Position:
        if t != self._memo_t:
            self._snapshot(t)
        return self._memo[node_id]

    def _snapshot(self, t: int) -> None:
        # everyone's position at t in one pass; the medium asks for all of them anyway
        span = self._t1 - self._t0
        f = min(max((t - self._t0) / span, 0.0), 1.0) if span else 0.0
        self._memo_t = t
        self._memo = {n: Position(x0 + dx * f, y0 + dy * f)
                      for n, (x0, y0, dx, dy) in self._seg.items()}
