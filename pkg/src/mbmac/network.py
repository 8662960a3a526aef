"""One simulation run: nodes, medium, traffic, routes and bookkeeping."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace

from . import engine
from .config import ScenarioConfig
from .mac import VARIANTS
from .mac.common import DATA, Frame, Packet
from .mac.node import InvariantError, MacNode
from .metrics import CbrFlow, FlowStats, RouteUsageSample
from .mobility import GaussMarkovMobility, StaticMobility
from .radio import AntennaConfig, Medium, TransmissionRecord
from .routing import RouteSet, compute_route_set, neighbor_table

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t_ns", "node", "beam", "event", "frame_kind", "src", "dst")


@dataclass
class RunResult:
    config: ScenarioConfig
    flows: list[CbrFlow]
    stats: dict[int, FlowStats]
    samples: list[RouteUsageSample]
    node_counts: dict[int, Counter]
    events: engine.RunStats
    trace: list[tuple] = field(default_factory=list)
    route_history: list[tuple[int, int, tuple]] = field(default_factory=list)

    @property
    def horizon_s(self) -> float:
        return self.config.duration_s


class Network:
    """Builds the node population for ``cfg`` and runs it to completion."""

    def __init__(self, cfg: ScenarioConfig, trace: bool = False, debug: bool = True):
        self.cfg = cfg
        self.debug = debug
        self.tracing = trace
        self.trace: list[tuple] = []
        self.sim = engine.Simulator(check_order=debug)
        self.medium = Medium(self.sim, cfg.channel)
        self.node_counts: dict[int, Counter] = defaultdict(Counter)
        self.flows: list[CbrFlow] = []
        self.stats: dict[int, FlowStats] = {}
        self.live: dict[int, int] = {}
        self.live_flow: dict[int, int] = {}
        self.routes: dict[int, RouteSet] = {}
        self.route_history: list[tuple[int, int, tuple]] = []
        self.samples: list[RouteUsageSample] = []
        self._usage: dict[int, set] = defaultdict(set)
        self._uid = 0
        self._seq: Counter = Counter()
        self.adj: dict[int, list[int]] = {}
        self._build()

    # ------------------------------------------------------------ building
    def _build(self) -> None:
        cfg = self.cfg
        antennas = {n.id: n.antenna for n in cfg.nodes}
        peers = {n.id: n.default_peer for n in cfg.nodes}
        if cfg.is_mobile:
            mob_rng = engine.RngStream(cfg.seed, "mobility")
            self.mobility = GaussMarkovMobility.random_placement(
                [n.id for n in cfg.nodes], cfg.mobile.gm, mob_rng)
            flow_rng = engine.RngStream(cfg.seed, "flows")
            ids = sorted(antennas)
            template = cfg.flows[0] if cfg.flows else None
            rate = template.rate_bps if template else 3e6
            size = template.packet_bytes if template else 1500
            picks = flow_rng.sample(ids, 2 * cfg.mobile.num_flows)
            for i in range(cfg.mobile.num_flows):
                src, dst = picks[2 * i], picks[2 * i + 1]
                self.flows.append(CbrFlow(i, src, dst, rate, size))
                for end in (src, dst):
                    antennas[end] = AntennaConfig(num_beams=cfg.mobile.endpoint_beams)
        else:
            self.mobility = StaticMobility({n.id: n.position for n in cfg.nodes})
            for i, f in enumerate(cfg.flows):
                stop = engine.seconds(f.stop_s) if f.stop_s is not None else None
                self.flows.append(CbrFlow(i, f.src, f.dst, f.rate_bps, f.packet_bytes,
                                          engine.seconds(f.start_s), stop))
        cls = VARIANTS[cfg.variant]
        self.nodes: dict[int, MacNode] = {}
        for nid in sorted(antennas):
            node = cls(nid, self.sim, self.medium, antennas[nid], replace(cfg.mac),
                       self.mobility, self, peers.get(nid), self.debug)
            self.nodes[nid] = node
            self.medium.attach(node)
        for f in self.flows:
            self.stats[f.flow_id] = FlowStats(f.flow_id)

        # discovery first so that t=0 traffic already has routes
        self.sim.schedule(0, engine.DISCOVERY, None, self._discover)
        if cfg.is_mobile:
            step = engine.seconds(cfg.mobile.gm.update_interval)
            self.sim.schedule(step, engine.MOBILITY, None, self._move, step)
        for f in self.flows:
            self.sim.schedule(f.start, engine.TRAFFIC, f.src, self._generate, f)
        self.sim.schedule(engine.seconds(cfg.sample_s), engine.SAMPLE, None, self._sample)

    def positions(self, t: int) -> dict:
        return {n: self.mobility.position(n, t) for n in self.nodes}

    # ------------------------------------------------------- periodic work
    def _move(self, step: int) -> None:
        self.mobility.advance(self.sim.now)
        self.sim.schedule_in(step, engine.MOBILITY, None, self._move, step)

    def _discover(self) -> None:
        now = self.sim.now
        pos = self.positions(now)
        self.adj = neighbor_table(pos, self.cfg.channel.comm_radius)
        for f in self.flows:
            rs = compute_route_set(f.flow_id, pos, self.cfg.channel.comm_radius, f.src, f.dst,
                                   self.cfg.routing.k, now)
            self.routes[f.flow_id] = rs
            self.route_history.append((now, f.flow_id, tuple(rs.routes)))
        if self.cfg.is_mobile:
            self._orient_relays()
            self.sim.schedule_in(engine.seconds(self.cfg.routing.refresh_s), engine.DISCOVERY,
                                 None, self._discover)

    def _orient_relays(self) -> None:
        upstream: dict[int, int] = {}
        for rs in self.routes.values():
            for r in rs.routes:
                for a, b in zip(r, r[1:]):
                    upstream.setdefault(b, a)
        for nid, node in self.nodes.items():
            if not node.single_beam:
                continue
            node.default_peer = upstream.get(nid)
            if node.last_upstream is not None and node.last_upstream not in self.adj[nid]:
                node.last_upstream = None
            node.kick()

    def _sample(self) -> None:
        now = self.sim.now
        for f in self.flows:
            rs = self.routes.get(f.flow_id)
            current = set(rs.routes) if rs is not None else set()
            used = len(self._usage[f.flow_id] & current)
            self.samples.append(RouteUsageSample(now, f.flow_id, used))
        self._usage.clear()
        self.sim.schedule_in(engine.seconds(self.cfg.sample_s), engine.SAMPLE, None, self._sample)

    # ------------------------------------------------------------- traffic
    def _generate(self, flow: CbrFlow) -> None:
        now = self.sim.now
        if flow.stop is None or now + flow.inter_arrival < flow.stop:
            self.sim.schedule_in(flow.inter_arrival, engine.TRAFFIC, flow.src, self._generate, flow)
        st = self.stats[flow.flow_id]
        st.generated += 1
        rs = self.routes.get(flow.flow_id)
        route = rs.next_route() if rs is not None else None
        if route is None:
            st.drop("no_route")
            return
        self._uid += 1
        seq = self._seq[flow.flow_id]
        self._seq[flow.flow_id] += 1
        p = Packet(self._uid, flow.flow_id, seq, flow.packet_bytes, now, route, route)
        self._admit(p, self.nodes[flow.src])

    def _admit(self, p: Packet, node: MacNode) -> None:
        self.live[p.uid] = node.id
        self.live_flow[p.uid] = p.flow_id
        reason = node.enqueue(p, p.next_hop(node.id))
        if reason is not None:
            self._drop(p, reason, node)

    def _drop(self, p: Packet, reason: str, node: MacNode) -> bool:
        if self.live.get(p.uid) != node.id:
            return False
        del self.live[p.uid]
        del self.live_flow[p.uid]
        self.stats[p.flow_id].drop(reason)
        self._count(node, f"drop_{reason}")
        return True

    # ------------------------------------------------------ node callbacks
    def resolve_next_hop(self, p: Packet, node: MacNode) -> int | None:
        nh = p.next_hop(node.id)
        if nh is not None and (not self.cfg.is_mobile or nh in self.adj.get(node.id, ())):
            return nh
        # the neighbor table says the link is gone
        self._drop(p, "no_route", node)
        self.on_route_failure(p.flow_id, p.route_id)
        return None

    def drop(self, p: Packet, reason: str, node: MacNode) -> None:
        self._drop(p, reason, node)

    def retry_drop(self, p: Packet, node: MacNode) -> None:
        if self._drop(p, "retry_limit", node):
            self.on_route_failure(p.flow_id, p.route_id)

    def on_route_failure(self, flow_id: int, route: tuple) -> None:
        if not self.cfg.is_mobile:
            return  # rediscovery on a fixed topology returns the same routes
        rs = self.routes.get(flow_id)
        if rs is not None:
            rs.invalidate(route)

    def forwarded(self, p: Packet, node: MacNode) -> None:
        self._count(node, "forwarded")

    def receive_data(self, p: Packet, node: MacNode, src: int) -> None:
        if p.uid in node.seen:
            self._count(node, "duplicate")
            return
        node.seen.add(p.uid)
        if p.uid not in self.live:
            return
        if node.id == p.path[-1]:
            st = self.stats[p.flow_id]
            st.delivered += 1
            st.delays.append((p.gen_time, self.sim.now))
            del self.live[p.uid]
            del self.live_flow[p.uid]
            self._count(node, "delivered")
            return
        # the sender keeps its own copy until it sees the ACK
        self._admit(replace(p, srl=0, lrl=0), node)

    def on_transmit(self, node: MacNode, rec: TransmissionRecord) -> None:
        f = rec.frame
        if self.debug and rec.air_start != node.sim.now:
            raise InvariantError("frames of one transmission must share a start instant")
        self._count(node, f"tx_{f.kind.value}")
        if f.kind is DATA and f.packet is not None:
            self._usage[f.packet.flow_id].add(f.packet.route_id)
        self._trace(node, rec.tx_beam, "tx", f)

    def on_receive(self, node: MacNode, beam: int, frame: Frame) -> None:
        self._count(node, f"rx_{frame.kind.value}")
        self._trace(node, beam, "rx", frame)

    def on_discard(self, node: MacNode, beam: int, frame: Frame, reason: str) -> None:
        self._count(node, f"discard_{reason}")
        self._trace(node, beam, f"discard_{reason}", frame)

    def on_flag(self, node: MacNode, beam: int, frame: Frame) -> None:
        self._count(node, "flag")
        self._trace(node, beam, "flag", frame)

    def on_cycle(self, node: MacNode, ok: list[int], failed: list[int]) -> None:
        self._count(node, "cycle")
        if self.tracing:
            self.trace.append((self.sim.now, node.id, -1, "cycle", "", len(ok), len(failed)))

    def on_window_event(self, node: MacNode, what: str) -> None:
        self._count(node, f"window_{what}")
        if self.tracing:
            self.trace.append((self.sim.now, node.id, -1, f"window_{what}", "", "", ""))

    def _count(self, node: MacNode, key: str) -> None:
        self.node_counts[node.id][key] += 1

    def _trace(self, node: MacNode, beam: int, event: str, frame: Frame) -> None:
        if self.tracing:
            self.trace.append((self.sim.now, node.id, beam, event, frame.kind.value,
                               frame.src, frame.dst))

    # ----------------------------------------------------------- finishing
    def check_conservation(self) -> None:
        in_flight = Counter(self.live_flow.values())
        for fid, st in self.stats.items():
            total = st.delivered + st.dropped + in_flight[fid]
            if total != st.generated:
                raise InvariantError(
                    f"flow {fid}: generated {st.generated} != delivered {st.delivered} + "
                    f"dropped {st.dropped} + in flight {in_flight[fid]}")
        if self.debug:
            queued = {p.uid: n.id for n in self.nodes.values() for bs in n.beams.values()
                      for p in bs.queue if self.live.get(p.uid) == n.id}
            missing = set(self.live) - set(queued)
            if missing:
                raise InvariantError(f"live packets missing from their holder's queue: "
                                     f"{sorted(missing)[:5]}")

    def run(self) -> RunResult:
        events = self.sim.run_until(engine.seconds(self.cfg.duration_s))
        for (nid, reason, kind), n in sorted(self.medium.losses.items()):
            self.node_counts[nid][f"lost_{reason}_{kind}"] += n
        for node in self.nodes.values():
            node.backoff.check()
        self.check_conservation()
        return RunResult(self.cfg, self.flows, self.stats, self.samples, dict(self.node_counts),
                         events, self.trace, self.route_history)


def simulate(cfg: ScenarioConfig, trace: bool = False, debug: bool = True) -> RunResult:
    return Network(cfg, trace=trace, debug=debug).run()
