"""Frames, per-beam NAV tables and queues, node-based backoff."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .. import engine
from ..radio import transmission_delay


class FrameKind(enum.Enum):
    RTS = "RTS"
    CTS = "CTS"
    DATA = "DATA"
    ACK = "ACK"
    N_RTS = "N_RTS"
    N_CTS = "N_CTS"

    @property
    def is_notification(self) -> bool:
        return self in (FrameKind.N_RTS, FrameKind.N_CTS)


RTS, CTS, DATA, ACK, N_RTS, N_CTS = (FrameKind.RTS, FrameKind.CTS, FrameKind.DATA,
                                     FrameKind.ACK, FrameKind.N_RTS, FrameKind.N_CTS)

# the response each kind solicits
RESPONSE_TO = {RTS: CTS, CTS: DATA, DATA: ACK}


@dataclass
class MacParams:
    """Timing and size constants, all times in ns."""

    slot: int = engine.us(20)
    sifs: int = engine.us(10)
    difs: int = engine.us(50)
    cw_min: int = 16
    cw_max: int = 1024
    short_retry_limit: int = 7
    long_retry_limit: int = 4
    rts_bytes: int = 20
    cts_bytes: int = 14
    ack_bytes: int = 14
    n_rts_bytes: int | None = None
    n_cts_bytes: int | None = None
    queue_capacity: int = 50
    window_period: int = engine.us(9)
    data_wp_multiplier: float = 1.0
    role_switch_slots: int = 3
    timeout_slots: int = 2

    def size_of(self, kind: FrameKind, data_bytes: int = 1500) -> int:
        if kind is RTS:
            return self.rts_bytes
        if kind is CTS:
            return self.cts_bytes
        if kind is ACK:
            return self.ack_bytes
        if kind is N_RTS:
            return self.n_rts_bytes or self.rts_bytes
        if kind is N_CTS:
            return self.n_cts_bytes or self.cts_bytes
        return data_bytes


@dataclass
class Packet:
    """A network-layer payload travelling along ``path``."""

    uid: int
    flow_id: int
    seq: int
    size_bytes: int
    gen_time: int
    path: tuple[int, ...]
    route_id: tuple[int, ...] = ()
    holder: int = -1
    srl: int = 0
    lrl: int = 0
    done: bool = False

    def next_hop(self, node_id: int) -> int | None:
        try:
            i = self.path.index(node_id)
        except ValueError:
            return None
        return self.path[i + 1] if i + 1 < len(self.path) else None


@dataclass
class Frame:
    kind: FrameKind
    src: int
    dst: int
    nav_duration: int
    size_bytes: int
    flow_id: int = -1
    seq: int = -1
    gen_time: int = -1
    packet: Packet | None = None
    data_bytes: int = 0

    def __post_init__(self):
        if self.nav_duration < 0:
            raise ValueError("nav_duration must be non-negative")


@dataclass
class NavEntry:
    neighbor: int
    nav_expiry: int = 0
    potential_tx: bool = False
    upstream: bool = False


@dataclass
class BeamState:
    beam: int
    capacity: int = 50
    nav_table: dict[int, NavEntry] = field(default_factory=dict)
    queue: deque = field(default_factory=deque)
    busy_until: int = 0
    overflow_drops: int = 0

    def entry(self, neighbor: int) -> NavEntry:
        e = self.nav_table.get(neighbor)
        if e is None:
            e = self.nav_table[neighbor] = NavEntry(neighbor)
        return e

    def nav_expiry(self) -> int:
        return max((e.nav_expiry for e in self.nav_table.values()), default=0)

    def enqueue(self, packet: Packet) -> bool:
        if len(self.queue) >= self.capacity:
            self.overflow_drops += 1
            return False
        self.queue.append(packet)
        return True

    def potential_neighbors(self) -> list[int]:
        return sorted(n for n, e in self.nav_table.items() if e.potential_tx or e.upstream)


CW_VALUES = frozenset(16 * 2 ** i for i in range(7))


@dataclass
class BackoffState:
    cw: int = 16
    cw_min: int = 16
    cw_max: int = 1024

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        assert self.cw_min <= self.cw <= self.cw_max and self.cw & (self.cw - 1) == 0, \
            f"contention window {self.cw} outside powers of two in [{self.cw_min}, {self.cw_max}]"


def cw_on_result(backoff: BackoffState, any_beam_succeeded: bool,
                 failed: list[Packet] = (), counter: str = "srl") -> BackoffState:
    """Node-based backoff: one success on any beam resets the window."""
    if any_beam_succeeded:
        backoff.cw = backoff.cw_min
    else:
        backoff.cw = min(2 * backoff.cw, backoff.cw_max)
    for p in failed:
        setattr(p, counter, getattr(p, counter) + 1)
    backoff.check()
    return backoff


def nav_update(beam_state: BeamState, neighbor: int, until: int) -> NavEntry:
    e = beam_state.entry(neighbor)
    e.nav_expiry = max(e.nav_expiry, until)
    return e


def mark_potential_transmitter(beam_state: BeamState, neighbor: int) -> NavEntry:
    e = beam_state.entry(neighbor)
    e.potential_tx = True
    return e


def classify(frame: Frame, me: int, awaiting: FrameKind | None) -> bool:
    """True if ``frame`` is desired.

    Undesired: addressed elsewhere, any notification, or anything other than
    the awaited response while a response is pending.
    """
    if frame.dst != me or frame.kind.is_notification:
        return False
    if awaiting is not None:
        return frame.kind is awaiting
    return frame.kind is RTS


def handshake_nav_duration(kind: FrameKind, data_bytes: int, rate: float, params: MacParams,
                           max_prop: int, wp_allowance: int = 0) -> int:
    """Handshake time remaining after a frame of ``kind`` ends, in ns."""
    t_cts = transmission_delay(params.cts_bytes, rate)
    t_ack = transmission_delay(params.ack_bytes, rate)
    t_data = transmission_delay(data_bytes, rate)
    sifs = params.sifs
    if kind in (RTS, N_RTS):
        return 3 * sifs + t_cts + t_data + t_ack + 2 * max_prop + wp_allowance
    if kind in (CTS, N_CTS):
        return 2 * sifs + t_data + t_ack + 2 * max_prop + wp_allowance
    if kind is DATA:
        return sifs + t_ack + max_prop
    return 0
