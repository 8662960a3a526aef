"""Geometry, sectored antennas and the shared wireless medium."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from . import engine

SPEED_OF_LIGHT = 3.0e8


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class AntennaConfig:
    """A switched-beam antenna with ``num_beams`` equal sectors.

    ``steerable`` antennas have a single beam of ``beamwidth`` degrees that is
    pointed at the current peer. ``active_beams`` restricts a multi-beam node to
    a subset of its sectors (``None`` means all of them).
    """

    num_beams: int = 1
    boresight_offset: float = 0.0
    steerable: bool = False
    beamwidth: float = 45.0
    active_beams: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.num_beams < 1:
            raise ValueError("num_beams must be >= 1")
        if not 0.0 <= self.boresight_offset < 360.0:
            raise ValueError("boresight_offset must be in [0, 360)")
        if self.steerable and self.num_beams != 1:
            raise ValueError("a steerable antenna has exactly one beam")
        if self.active_beams is not None:
            bad = [b for b in self.active_beams if not 0 <= b < self.num_beams]
            if bad:
                raise ValueError(f"active beams {bad} outside 0..{self.num_beams - 1}")

    @property
    def sector_width(self) -> float:
        return 360.0 / self.num_beams

    @property
    def usable_beams(self) -> tuple[int, ...]:
        if self.active_beams is None:
            return tuple(range(self.num_beams))
        return tuple(sorted(self.active_beams))

    @property
    def capacity(self) -> int:
        return len(self.usable_beams)

    @property
    def is_multibeam(self) -> bool:
        return self.capacity > 1


@dataclass(frozen=True)
class ChannelModel:
    bit_rate: float = 5e6
    comm_radius: float = 3000.0
    propagation_speed: float = SPEED_OF_LIGHT

    @property
    def max_propagation(self) -> int:
        return propagation_delay(self.comm_radius, self.propagation_speed)


def azimuth(src: Position, dst: Position) -> float:
    """Counterclockwise angle from +x of the vector src->dst, in [0, 360)."""
    dx, dy = dst.x - src.x, dst.y - src.y
    if dx == 0 and dy == 0:
        raise ValueError("azimuth undefined for coincident positions")
    deg = math.degrees(math.atan2(dy, dx)) % 360.0
    # -0.0 and tiny negatives can round to exactly 360.0
    return 0.0 if deg >= 360.0 else deg


def beam_for_direction(antenna: AntennaConfig, az: float) -> int:
    rel = (az - antenna.boresight_offset) % 360.0
    beam = int(rel // antenna.sector_width)
    return min(beam, antenna.num_beams - 1)


def in_sector(az: float, start: float, width: float) -> bool:
    return (az - start) % 360.0 < width


def propagation_delay(distance: float, speed: float = SPEED_OF_LIGHT) -> int:
    """Propagation delay in ns, rounded to the nearest ns."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return engine.us(distance / speed * 1e6)


def transmission_delay(size_bytes: int, rate: float) -> int:
    """Airtime in ns of ``size_bytes`` at ``rate`` bits/s."""
    if size_bytes <= 0 or rate <= 0:
        raise ValueError("size and rate must be positive")
    return engine.us(size_bytes * 8 / rate * 1e6)


def beam_reception_outcome(intervals: list[tuple[int, int]]) -> list[bool]:
    """Decodability of arrivals on one receiver beam.

    Each interval is ``(start, end)``; any temporal overlap with another arrival
    corrupts both (no capture). Returns one flag per interval, True meaning ok.
    """
    ok = [True] * len(intervals)
    for i, (s1, e1) in enumerate(intervals):
        for j in range(i + 1, len(intervals)):
            s2, e2 = intervals[j]
            if s1 < e2 and s2 < e1:
                ok[i] = ok[j] = False
    return ok


@dataclass
class Arrival:
    tx_node: int
    tx_beam: int
    rx_beam: int
    frame: object
    start: int
    end: int
    corrupted: bool = False
    lost: bool = False


@dataclass
class TransmissionRecord:
    tx_node: int
    tx_beam: int
    frame: object
    air_start: int
    air_end: int


@dataclass
class Medium:
    """Delivers transmissions to the receive beams of nodes in range.

    Nodes registered here must provide ``position(t)``, ``tx_contains(beam,
    az, t)``, ``rx_beam_for(az, t)``, ``is_transmitting(t)`` and the callbacks
    ``on_energy_start``, ``on_energy_end`` and ``on_frame``.
    """

    sim: engine.Simulator
    channel: ChannelModel
    nodes: dict = field(default_factory=dict)
    arrivals: dict = field(default_factory=dict)
    tx_log: list = field(default_factory=list)
    keep_log: bool = False
    losses: Counter = field(default_factory=Counter)

    def attach(self, node) -> None:
        self.nodes[node.id] = node
        self.arrivals[node.id] = {}

    def broadcast_on_beam(self, rec: TransmissionRecord) -> int:
        """Schedule arrival events for every node the beam reaches."""
        if self.keep_log:
            self.tx_log.append(rec)
        now = rec.air_start
        tx = self.nodes[rec.tx_node]
        tx_pos = tx.position(now)
        reached = 0
        radius = self.channel.comm_radius
        speed = self.channel.propagation_speed
        for nid, rx in self.nodes.items():
            if nid == rec.tx_node:
                continue
            rx_pos = rx.position(now)
            d = tx_pos.distance(rx_pos)
            if d > radius or d == 0:
                continue
            if not tx.tx_contains(rec.tx_beam, azimuth(tx_pos, rx_pos), now):
                continue
            delay = propagation_delay(d, speed)
            self.sim.schedule(rec.air_start + delay, engine.ARRIVAL_START, nid,
                              self._arrival_start, rx, rec, tx_pos, rec.air_end + delay)
            reached += 1
        return reached

    def _arrival_start(self, rx, rec: TransmissionRecord, tx_pos: Position, end: int) -> None:
        now = self.sim.now
        beam = rx.rx_beam_for(azimuth(rx.position(now), tx_pos), now)
        if beam is None:
            self.losses[(rx.id, "deaf", rec.frame.kind.value)] += 1
            return
        arr = Arrival(rec.tx_node, rec.tx_beam, beam, rec.frame, now, end)
        if rx.is_transmitting(now):
            arr.lost = True
        current = self.arrivals[rx.id].setdefault(beam, [])
        for other in current:
            if other.end > now:
                other.corrupted = True
                arr.corrupted = True
        current.append(arr)
        self.sim.schedule(end, engine.ARRIVAL_END, rx.id, self._arrival_end, rx, arr)
        rx.on_energy_start(beam, arr)

    def _arrival_end(self, rx, arr: Arrival) -> None:
        current = self.arrivals[rx.id][arr.rx_beam]
        current.remove(arr)
        if arr.lost:
            self.losses[(rx.id, "half_duplex", arr.frame.kind.value)] += 1
        elif arr.corrupted:
            self.losses[(rx.id, "collision", arr.frame.kind.value)] += 1
        else:
            rx.on_frame(arr.frame, arr.rx_beam, arr)
        rx.on_energy_end(arr.rx_beam, arr)

    def beam_energy(self, node_id: int, beam: int, now: int) -> bool:
        return any(a.end > now for a in self.arrivals[node_id].get(beam, ()))

    def any_energy(self, node_id: int, now: int) -> bool:
        return any(a.end > now for arrs in self.arrivals[node_id].values() for a in arrs)

    def abort_receptions(self, node_id: int, now: int) -> None:
        """Half-duplex: a node that starts transmitting loses what it is receiving."""
        for arrs in self.arrivals[node_id].values():
            for a in arrs:
                if a.end > now:
                    a.lost = True
