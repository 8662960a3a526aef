"""CBR flows, per-flow delivery accounting and summary metrics."""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field

DROP_REASONS = ("overflow", "retry_limit", "no_route")


@dataclass
class CbrFlow:
    flow_id: int
    src: int
    dst: int
    rate_bps: float
    packet_bytes: int = 1500
    start: int = 0
    stop: int | None = None

    @property
    def rate_pps(self) -> float:
        return self.rate_bps / (self.packet_bytes * 8)

    @property
    def inter_arrival(self) -> int:
        """Gap between packets in ns (4 ms for 3 Mbps of 1500-byte packets)."""
        return int(round(1e9 / self.rate_pps))


@dataclass
class FlowStats:
    flow_id: int
    generated: int = 0
    delivered: int = 0
    drops: Counter = field(default_factory=Counter)
    delays: list[tuple[int, int]] = field(default_factory=list)

    def drop(self, reason: str) -> None:
        if reason not in DROP_REASONS:
            raise ValueError(f"unknown drop reason {reason!r}")
        self.drops[reason] += 1

    @property
    def dropped(self) -> int:
        return sum(self.drops.values())


@dataclass(frozen=True)
class RouteUsageSample:
    t: int
    flow_id: int
    active_routes: int


def throughput(stats: FlowStats, horizon_s: float, packet_bytes: int = 1500) -> float:
    if horizon_s <= 0:
        raise ValueError("horizon must be positive")
    return stats.delivered * packet_bytes * 8 / horizon_s


def pdr(stats: FlowStats) -> float | None:
    if stats.generated == 0:
        return None
    return stats.delivered / stats.generated


def e2e_delay(stats: FlowStats) -> float | None:
    """Mean source-queue-to-destination delay in seconds."""
    if not stats.delays:
        return None
    return sum(d - g for g, d in stats.delays) / len(stats.delays) / 1e9


def pooled_e2e_delay(all_stats) -> float | None:
    delays = [d - g for s in all_stats for g, d in s.delays]
    return sum(delays) / len(delays) / 1e9 if delays else None


def mean_flow_delay(all_stats) -> float | None:
    per_flow = [v for v in (e2e_delay(s) for s in all_stats) if v is not None]
    return statistics.fmean(per_flow) if per_flow else None


def extra_route_utilization(proposed: list[RouteUsageSample], basic: list[RouteUsageSample]) -> float:
    """Percent of sampling instants where the proposed run used more routes."""
    key = lambda s: (s.t, s.flow_id)  # noqa: E731
    a = {key(s): s.active_routes for s in proposed}
    b = {key(s): s.active_routes for s in basic}
    if a.keys() != b.keys():
        raise ValueError("route-usage samples are not paired")
    if not a:
        return 0.0
    more = sum(1 for k in a if a[k] > b[k])
    return 100.0 * more / len(a)
