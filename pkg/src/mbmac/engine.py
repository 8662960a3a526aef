"""Discrete-event scheduler with an integer-nanosecond clock.

Events fire in ``(fire_at, seq)`` order, so two events scheduled for the same
instant are delivered in the order they were scheduled.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable

NS_PER_US = 1_000
NS_PER_S = 1_000_000_000

# event kinds
ARRIVAL_START = "frame-arrival-start"
ARRIVAL_END = "frame-arrival-end"
TIMER = "timer-expiry"
TRAFFIC = "traffic-arrival"
MOBILITY = "mobility-update"
DISCOVERY = "neighbor-discovery"
SAMPLE = "metrics-sample"

EVENT_KINDS = (ARRIVAL_START, ARRIVAL_END, TIMER, TRAFFIC, MOBILITY, DISCOVERY, SAMPLE)


def us(value: float) -> int:
    """Microseconds to integer nanoseconds (round half to even)."""
    return int(round(value * NS_PER_US))


def seconds(value: float) -> int:
    return int(round(value * NS_PER_S))


class SchedulingError(RuntimeError):
    """An event was scheduled before the current clock."""


class EventHandle:
    __slots__ = ("fire_at", "seq", "kind", "target", "callback", "args", "cancelled", "fired")

    def __init__(self, fire_at, seq, kind, target, callback, args):
        self.fire_at = fire_at
        self.seq = seq
        self.kind = kind
        self.target = target
        self.callback = callback
        self.args = args
        self.cancelled = False
        self.fired = False

    @property
    def pending(self) -> bool:
        return not (self.cancelled or self.fired)

    def __lt__(self, other: "EventHandle") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)

    def __repr__(self) -> str:
        return f"<Event {self.kind} t={self.fire_at}ns seq={self.seq} node={self.target}>"


@dataclass
class RunStats:
    processed: Counter = field(default_factory=Counter)
    end_time: int = 0

    @property
    def total(self) -> int:
        return sum(self.processed.values())


class Simulator:
    def __init__(self, check_order: bool = True):
        self.now = 0
        self._heap: list[EventHandle] = []
        self._seq = 0
        self.check_order = check_order
        self._last = (-1, -1)
        self.stats = RunStats()

    def schedule(self, fire_at: int, kind: str, target: Any,
                 callback: Callable[..., None], *args) -> EventHandle:
        if fire_at < self.now:
            raise SchedulingError(
                f"{kind} for node {target} at {fire_at}ns is before now={self.now}ns")
        handle = EventHandle(int(fire_at), self._seq, kind, target, callback, args)
        self._seq += 1
        heapq.heappush(self._heap, handle)
        return handle

    def schedule_in(self, delay: int, kind: str, target: Any,
                    callback: Callable[..., None], *args) -> EventHandle:
        return self.schedule(self.now + delay, kind, target, callback, *args)

    @staticmethod
    def cancel(handle: EventHandle | None) -> bool:
        if handle is None or not handle.pending:
            return False
        handle.cancelled = True
        return True

    def peek_time(self) -> int | None:
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].fire_at if self._heap else None

    def run_until(self, t_end: int) -> RunStats:
        heap = self._heap
        processed = self.stats.processed
        while heap:
            ev = heap[0]
            if ev.fire_at > t_end:
                break
            heapq.heappop(heap)
            if ev.cancelled:
                continue
            if self.check_order:
                key = (ev.fire_at, ev.seq)
                assert key > self._last, f"event order violated: {key} after {self._last}"
                self._last = key
            self.now = ev.fire_at
            ev.fired = True
            processed[ev.kind] += 1
            ev.callback(*ev.args)
        self.now = max(self.now, t_end)
        self.stats.end_time = self.now
        return self.stats


def stream_seed(seed: int, stream_id: str) -> int:
    """Derive a 64-bit seed for a named random stream."""
    digest = hashlib.sha256(f"{seed}:{stream_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class RngStream(random.Random):
    """``random.Random`` keyed by ``(seed, stream_id)``."""

    def __new__(cls, seed: int, stream_id: str):
        return super().__new__(cls)

    def __init__(self, seed: int, stream_id: str):
        self.seed_value = seed
        self.stream_id = stream_id
        super().__init__(stream_seed(seed, stream_id))
