"""Multi-beam CSMA/CA node: contention, handshakes and reception windows.

The base class owns everything both MAC variants share. Subclasses decide
which decoded frames join a reception batch, what to do with frames that
arrive too late, and how channel access resumes after a cycle.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

from .. import engine
from ..radio import (AntennaConfig, ChannelModel, Medium, TransmissionRecord, azimuth,
                     beam_for_direction, in_sector, transmission_delay)
from .common import (ACK, CTS, DATA, N_CTS, N_RTS, RTS, BackoffState, BeamState, Frame,
                     FrameKind, MacParams, Packet, classify, cw_on_result,
                     handshake_nav_duration, mark_potential_transmitter, nav_update)

log = logging.getLogger(__name__)


class Phase(enum.Enum):
    IDLE = "idle"
    RX_RTS = "rx-rts"
    AWAIT_CTS = "await-cts"
    AWAIT_DATA = "await-data"
    AWAIT_ACK = "await-ack"


AWAITED = {Phase.AWAIT_CTS: CTS, Phase.AWAIT_DATA: DATA, Phase.AWAIT_ACK: ACK}


class InvariantError(AssertionError):
    pass


@dataclass
class Link:
    """One beam's part in the current handshake."""

    beam: int
    peer: int
    packet: Packet | None = None
    data_bytes: int = 0


@dataclass
class WindowState:
    kind: FrameKind
    first_at: int
    window_end: int
    total_desired_frames: int
    no_of_frames: int = 0
    sifs_timer: engine.EventHandle | None = None
    window_timer: engine.EventHandle | None = None
    accepted: list = field(default_factory=list)

    @property
    def beams(self) -> set[int]:
        return {b for b, _ in self.accepted}


class MacNode:
    variant = "base"

    def __init__(self, node_id: int, sim: engine.Simulator, medium: Medium, antenna: AntennaConfig,
                 params: MacParams, mobility, network, default_peer: int | None = None,
                 debug: bool = True):
        self.id = node_id
        self.sim = sim
        self.medium = medium
        self.channel: ChannelModel = medium.channel
        self.antenna = antenna
        self.params = params
        self.mobility = mobility
        self.network = network
        self.debug = debug
        self.beams: dict[int, BeamState] = {
            b: BeamState(b, params.queue_capacity) for b in antenna.usable_beams}
        self.backoff = BackoffState(params.cw_min, params.cw_min, params.cw_max)
        self.phase = Phase.IDLE
        self.links: dict[int, Link] = {}
        self.pending: set[int] = set()
        self.deferred: set[int] = set()
        self.cycle_ok: list[Packet] = []
        self.cycle_failed: list[tuple[Packet, str]] = []
        self.window: WindowState | None = None
        self.resp_timer: engine.EventHandle | None = None
        self.contend_timer: engine.EventHandle | None = None
        self.wake_timer: engine.EventHandle | None = None
        self.defer_until = 0
        self.tx_start = -1
        self.tx_end = -1
        self.tx_centers: dict[int, float] = {}
        self.default_peer = default_peer
        self.point_peer = default_peer
        self.last_upstream: int | None = None
        self.seen: set[int] = set()
        self._remapped_at = -1
        self.window_cancels = 0
        self.window_expiries = 0
        self.max_prop = self.channel.max_propagation
        rate = self.channel.bit_rate
        self.t_cts = transmission_delay(params.cts_bytes, rate)
        self.t_ack = transmission_delay(params.ack_bytes, rate)

    # ---------------------------------------------------------------- geometry
    @property
    def single_beam(self) -> bool:
        return self.antenna.steerable

    def position(self, t: int):
        return self.mobility.position(self.id, t)

    def peer_position(self, peer: int, t: int):
        return self.medium.nodes[peer].position(t)

    def beam_to(self, peer: int, t: int) -> int | None:
        if self.single_beam:
            return 0
        b = beam_for_direction(self.antenna, azimuth(self.position(t), self.peer_position(peer, t)))
        return b if b in self.beams else None

    def _steer_center(self, peer: int, t: int) -> float:
        return azimuth(self.position(t), self.peer_position(peer, t))

    def tx_contains(self, beam: int, az: float, t: int) -> bool:
        if self.single_beam:
            half = self.antenna.beamwidth / 2
            return in_sector(az, self.tx_centers[beam] - half, self.antenna.beamwidth)
        return beam_for_direction(self.antenna, az) == beam

    def rx_beam_for(self, az: float, t: int) -> int | None:
        if self.single_beam:
            if self.point_peer is None:
                return None
            center = self._steer_center(self.point_peer, t)
            half = self.antenna.beamwidth / 2
            return 0 if in_sector(az, center - half, self.antenna.beamwidth) else None
        b = beam_for_direction(self.antenna, az)
        return b if b in self.beams else None

    def is_transmitting(self, t: int) -> bool:
        return self.tx_start <= t < self.tx_end

    # --------------------------------------------------------------- sensing
    def nav_blocked_until(self, beam: int, peer: int | None, now: int) -> int:
        """Latest unexpired NAV that blocks transmitting on ``beam`` (0 if clear)."""
        bs = self.beams[beam]
        if not self.single_beam:
            exp = bs.nav_expiry()
            return exp if exp > now else 0
        if peer is None:
            return 0
        center = self._steer_center(peer, now)
        half = self.antenna.beamwidth / 2
        worst = 0
        for n, e in bs.nav_table.items():
            if e.nav_expiry <= now or e.nav_expiry <= worst:
                continue
            if n == peer or in_sector(self._steer_center(n, now), center - half,
                                      self.antenna.beamwidth):
                worst = e.nav_expiry
        return worst

    def nav_clear(self, beam: int, peer: int | None, now: int) -> bool:
        return self.nav_blocked_until(beam, peer, now) == 0

    def beam_is_idle(self, beam: int, peer: int | None, now: int) -> bool:
        if self.is_transmitting(now):
            return False
        if self.medium.beam_energy(self.id, beam, now):
            return False
        return self.nav_clear(beam, peer, now)

    def attainable_capacity(self, now: int) -> int:
        if self.single_beam:
            return 1
        free = sum(1 for bs in self.beams.values() if bs.nav_expiry() <= now)
        return max(free, 1)

    # ---------------------------------------------------------------- queues
    def queue_for(self, next_hop: int) -> BeamState | None:
        b = self.beam_to(next_hop, self.sim.now)
        return None if b is None else self.beams[b]

    def enqueue(self, packet: Packet, next_hop: int) -> str | None:
        """Queue ``packet`` on the beam facing ``next_hop``; returns a drop reason."""
        bs = self.queue_for(next_hop)
        if bs is None:
            return "no_route"
        if not bs.enqueue(packet):
            return "overflow"
        packet.holder = self.id
        self.kick()
        return None

    def queued(self) -> int:
        return sum(len(bs.queue) for bs in self.beams.values())

    def _remap_queues(self, now: int) -> None:
        if self.single_beam or not self.mobility.mobile or now == self._remapped_at:
            return
        self._remapped_at = now
        moved = []
        for b, bs in self.beams.items():
            if b in self.links:
                continue
            keep = []
            for p in bs.queue:
                nh = p.next_hop(self.id)
                nb = self.beam_to(nh, now) if nh is not None else b
                if nb is None or nb == b or nb in self.links:
                    keep.append(p)
                else:
                    moved.append((nb, p))
            if len(keep) != len(bs.queue):
                bs.queue.clear()
                bs.queue.extend(keep)
        for nb, p in moved:
            if not self.beams[nb].enqueue(p):
                self.network.drop(p, "overflow", self)

    def _head(self, bs: BeamState, now: int) -> tuple[Packet, int] | None:
        """Head-of-line packet with a usable next hop; stale ones are resolved."""
        while bs.queue:
            p = bs.queue[0]
            nh = self.network.resolve_next_hop(p, self)
            if nh is not None:
                return p, nh
            bs.queue.popleft()
        return None

    def candidates(self, now: int) -> list[tuple[int, Packet, int]]:
        self._remap_queues(now)
        out = []
        for b, bs in self.beams.items():
            head = self._head(bs, now)
            if head is not None:
                out.append((b, head[0], head[1]))
        return out

    # ------------------------------------------------------------ contention
    def kick(self) -> None:
        """Start contending if the node is free and has traffic."""
        now = self.sim.now
        if (self.phase is not Phase.IDLE or self.window is not None
                or self.contend_timer is not None or self.is_transmitting(now)):
            return
        if now < self.defer_until:
            self._wake_at(self.defer_until)
            return
        cands = self.candidates(now)
        if not cands:
            self._point_idle()
            return
        if self.single_beam:
            self.point_peer = cands[0][2]
        blocked_until = []
        for b, _, nh in cands:
            if self.medium.beam_energy(self.id, b, now):
                continue
            nav = self.nav_blocked_until(b, nh, now)
            if nav:
                blocked_until.append(nav)
                continue
            delay = self.params.difs + self.backoff.cw * self.params.slot
            self.contend_timer = self.sim.schedule_in(delay, engine.TIMER, self.id,
                                                      self._contention_expired)
            return
        if blocked_until:
            self._wake_at(min(blocked_until))

    def _wake_at(self, t: int) -> None:
        if self.wake_timer is not None and self.wake_timer.pending and self.wake_timer.fire_at <= t:
            return
        self.sim.cancel(self.wake_timer)
        self.wake_timer = self.sim.schedule(t, engine.TIMER, self.id, self._wake)

    def _wake(self) -> None:
        self.wake_timer = None
        self.kick()

    def _abort_contention_if_blocked(self) -> None:
        if self.contend_timer is None:
            return
        now = self.sim.now
        for b, _, nh in self.candidates(now):
            if self.beam_is_idle(b, nh, now):
                return
        self.sim.cancel(self.contend_timer)
        self.contend_timer = None

    def _cancel_contention(self) -> None:
        self.sim.cancel(self.contend_timer)
        self.contend_timer = None

    def _point_idle(self) -> None:
        if self.single_beam and self.phase is Phase.IDLE:
            if self.last_upstream is not None and self.last_upstream in self.medium.nodes:
                self.point_peer = self.last_upstream
            elif self.default_peer is not None:
                self.point_peer = self.default_peer

    def _contention_expired(self) -> None:
        self.contend_timer = None
        now = self.sim.now
        ready = []
        for b, p, nh in self.candidates(now):
            if self.single_beam:
                self.point_peer = nh
            if self.beam_is_idle(b, nh, now):
                ready.append(Link(b, nh, p, p.size_bytes))
        if not ready:
            self.kick()
            return
        frames = []
        for link in ready:
            nav = handshake_nav_duration(RTS, link.data_bytes, self.channel.bit_rate, self.params,
                                         self.max_prop, self.wp_allowance(RTS))
            frames.append((link.beam, Frame(RTS, self.id, link.peer, nav, self.params.rts_bytes,
                                            data_bytes=link.data_bytes)))
        self.links = {l.beam: l for l in ready}
        self.pending = set(self.links)
        self.deferred = set()
        self.cycle_ok, self.cycle_failed = [], []
        self.phase = Phase.AWAIT_CTS
        self._transmit(frames, N_RTS)
        timeout = self.params.sifs + self.t_cts + 2 * self.max_prop + \
            self.params.timeout_slots * self.params.slot
        self.resp_timer = self.sim.schedule(self.tx_end + timeout, engine.TIMER, self.id,
                                            self._response_timeout)

    # ---------------------------------------------------------- transmission
    def wp_allowance(self, kind: FrameKind) -> int:
        return 0

    def notification_beams(self, exclude: set[int], now: int,
                           flagged_only: bool = False) -> list[tuple[int, int]]:
        """(beam, addressee) pairs that should hear an N-RTS/N-CTS."""
        if self.single_beam:
            return []
        out = []
        for b, bs in self.beams.items():
            if b in exclude or self.medium.beam_energy(self.id, b, now):
                continue
            if bs.nav_expiry() > now:
                continue
            if flagged_only:
                targets = sorted(n for n, e in bs.nav_table.items() if e.potential_tx)
            else:
                targets = bs.potential_neighbors()
            if not targets and bs.queue and not flagged_only:
                nh = bs.queue[0].next_hop(self.id)
                if nh is not None:
                    targets = [nh]
            if targets:
                out.append((b, targets[0]))
        return out

    def _transmit(self, frames: list[tuple[int, Frame]], notify: FrameKind | None = None,
                  flagged_only: bool = False) -> None:
        now = self.sim.now
        rate = self.channel.bit_rate
        if notify is not None:
            ends = [now + transmission_delay(f.size_bytes, rate) + f.nav_duration for _, f in frames]
            hs_end = max(ends)
            used = {b for b, _ in frames}
            size = self.params.size_of(notify)
            n_end = now + transmission_delay(size, rate)
            nav = max(hs_end - n_end, 0)
            if nav > 0:
                for b, dst in self.notification_beams(used, now, flagged_only):
                    frames.append((b, Frame(notify, self.id, dst, nav, size)))
                    for e in self.beams[b].nav_table.values():
                        e.potential_tx = False
        self._cancel_contention()
        self.medium.abort_receptions(self.id, now)
        self.tx_start = now
        end = now
        seen_beams = set()
        for beam, frame in frames:
            if self.debug:
                if beam in seen_beams:
                    raise InvariantError(f"node {self.id}: two frames on beam {beam}")
                if frame.kind in (RTS, CTS, N_RTS, N_CTS) and not self.nav_clear(beam, frame.dst, now):
                    raise InvariantError(
                        f"node {self.id}: {frame.kind.value} on NAV-blocked beam {beam} at {now}")
            seen_beams.add(beam)
            dur = transmission_delay(frame.size_bytes, rate)
            if self.single_beam:
                self.tx_centers[beam] = self._steer_center(frame.dst, now)
                self.point_peer = frame.dst
            rec = TransmissionRecord(self.id, beam, frame, now, now + dur)
            self.network.on_transmit(self, rec)
            self.medium.broadcast_on_beam(rec)
            end = max(end, now + dur)
        self.tx_end = end
        self.sim.schedule(end, engine.TIMER, self.id, self._tx_done)

    def _tx_done(self) -> None:
        self.kick()

    # ------------------------------------------------------------- reception
    def on_energy_start(self, beam: int, arrival) -> None:
        if self.contend_timer is not None:
            self._abort_contention_if_blocked()

    def on_energy_end(self, beam: int, arrival) -> None:
        if self.phase is Phase.IDLE and self.contend_timer is None:
            self.kick()

    def on_frame(self, frame: Frame, beam: int, arrival) -> None:
        now = self.sim.now
        if self.debug and not (arrival.start >= self.tx_end or arrival.end <= self.tx_start):
            raise InvariantError(f"node {self.id}: decoded a frame while transmitting")
        self.network.on_receive(self, beam, frame)
        if frame.dst != self.id or frame.kind.is_notification:
            if frame.nav_duration > 0:
                nav_update(self.beams[beam], frame.src, now + frame.nav_duration)
                self._abort_contention_if_blocked()
            if frame.dst == self.id:
                self.on_notification(frame, beam)
            return
        awaiting = AWAITED.get(self.phase)
        if classify(frame, self.id, awaiting) and self._acceptable(frame, beam, now):
            self.on_desired(frame, beam)
        else:
            self.on_undesired_addressed(frame, beam)

    def _acceptable(self, frame: Frame, beam: int, now: int) -> bool:
        if frame.kind is RTS:
            if self.is_transmitting(now):
                return False
            if self.window is not None and beam in self.window.beams:
                return False
            return self.nav_clear(beam, frame.src, now)
        link = self.links.get(beam)
        return beam in self.pending and link is not None and link.peer == frame.src

    # hooks --------------------------------------------------------------
    def on_desired(self, frame: Frame, beam: int) -> None:
        raise NotImplementedError

    def on_undesired_addressed(self, frame: Frame, beam: int) -> None:
        raise NotImplementedError

    def on_notification(self, frame: Frame, beam: int) -> None:
        pass

    def after_tx_cycle(self, any_success: bool) -> None:
        pass

    # ------------------------------------------------------ window machinery
    def open_window(self, frame: Frame, beam: int, window_period: int | None,
                    total: int) -> WindowState:
        now = self.sim.now
        if self.phase is Phase.IDLE:
            self._cancel_contention()
            self.phase = Phase.RX_RTS
            self.links, self.pending, self.deferred = {}, set(), set()
        self.sim.cancel(self.resp_timer)
        self.resp_timer = None
        end = now + (window_period or 0)
        w = WindowState(frame.kind, now, end, total)
        w.sifs_timer = self.sim.schedule_in(self.params.sifs, engine.TIMER, self.id,
                                            self._on_sifs_expiry)
        if window_period:
            if self.debug and not 0 < window_period < self.params.sifs:
                raise InvariantError(f"window period {window_period}ns not below SIFS")
            w.window_timer = self.sim.schedule(end, engine.TIMER, self.id, self._on_window_expiry)
        self.window = w
        self.accept(frame, beam)
        return w

    def accept(self, frame: Frame, beam: int) -> None:
        w = self.window
        w.accepted.append((beam, frame))
        w.no_of_frames += 1
        if self.single_beam:
            self.point_peer = frame.src
        if self.debug and w.window_timer is not None and w.no_of_frames > w.total_desired_frames:
            raise InvariantError("no_of_frames exceeded total_desired_frames")
        if w.window_timer is not None and w.no_of_frames == w.total_desired_frames:
            cancelled = self.sim.cancel(w.window_timer)
            if self.debug and not cancelled:
                raise InvariantError("window timer was not pending at completion")
            self.window_cancels += 1
            self.network.on_window_event(self, "cancel")

    def _on_window_expiry(self) -> None:
        w = self.window
        if self.debug and w is not None and w.no_of_frames >= w.total_desired_frames:
            raise InvariantError("window timer fired after the batch was complete")
        self.window_expiries += 1
        self.network.on_window_event(self, "expire")

    # ------------------------------------------------------------- responses
    def _on_sifs_expiry(self) -> None:
        w = self.window
        self.window = None
        if w is not None:
            self.sim.cancel(w.window_timer)
        now = self.sim.now
        accepted = w.accepted if w else []
        if self.phase is Phase.RX_RTS:
            self._respond_cts(accepted, now)
        elif self.phase is Phase.AWAIT_CTS:
            self._respond_data(accepted, now)
        elif self.phase is Phase.AWAIT_DATA:
            self._respond_ack(accepted, now)
        elif self.phase is Phase.AWAIT_ACK:
            for beam, _ in accepted:
                self.cycle_ok.append(self.links[beam].packet)
                self.pending.discard(beam)
            self._fail_pending("lrl")
            self._conclude_tx_cycle()

    def _respond_cts(self, accepted, now: int) -> None:
        frames, links = [], {}
        for beam, rts in accepted:
            if not self.nav_clear(beam, rts.src, now):
                continue
            nav = handshake_nav_duration(CTS, rts.data_bytes, self.channel.bit_rate, self.params,
                                         self.max_prop, self.wp_allowance(CTS))
            frames.append((beam, Frame(CTS, self.id, rts.src, nav, self.params.cts_bytes,
                                       data_bytes=rts.data_bytes)))
            links[beam] = Link(beam, rts.src, None, rts.data_bytes)
            e = self.beams[beam].nav_table.get(rts.src)
            if e is not None:
                e.potential_tx = False
        if not frames:
            self._end_rx_cycle()
            return
        self.links, self.pending = links, set(links)
        self.phase = Phase.AWAIT_DATA
        self._transmit(frames, N_CTS)
        t_data = transmission_delay(max(l.data_bytes for l in links.values()), self.channel.bit_rate)
        timeout = self.params.sifs + t_data + 2 * self.max_prop + \
            self.params.timeout_slots * self.params.slot + self.wp_allowance(DATA)
        self.resp_timer = self.sim.schedule(self.tx_end + timeout, engine.TIMER, self.id,
                                            self._response_timeout)

    def _respond_data(self, accepted, now: int) -> None:
        frames = []
        for beam, _ in accepted:
            link = self.links[beam]
            p = link.packet
            nav = handshake_nav_duration(DATA, p.size_bytes, self.channel.bit_rate, self.params,
                                         self.max_prop)
            frames.append((beam, Frame(DATA, self.id, link.peer, nav, p.size_bytes, p.flow_id,
                                       p.seq, p.gen_time, packet=p, data_bytes=p.size_bytes)))
            self.pending.discard(beam)
        self._fail_pending("srl")
        if not frames:
            self._conclude_tx_cycle()
            return
        self.pending = {b for b, _ in frames}
        self.phase = Phase.AWAIT_ACK
        # only senders flagged during the exchange hear about it here
        self._transmit(frames, N_RTS, flagged_only=True)
        timeout = self.params.sifs + self.t_ack + 2 * self.max_prop + \
            self.params.timeout_slots * self.params.slot
        self.resp_timer = self.sim.schedule(self.tx_end + timeout, engine.TIMER, self.id,
                                            self._response_timeout)

    def _respond_ack(self, accepted, now: int) -> None:
        frames = []
        for beam, data in accepted:
            frames.append((beam, Frame(ACK, self.id, data.src, 0, self.params.ack_bytes,
                                       data.flow_id, data.seq)))
            self.beams[beam].entry(data.src).upstream = True
            self.last_upstream = data.src
            self.network.receive_data(data.packet, self, data.src)
        if not frames:
            self._end_rx_cycle()
            return
        self._transmit(frames)
        self.phase = Phase.IDLE
        self.links, self.pending = {}, set()
        # the ACK burst ends the receive cycle; contention resumes from _tx_done

    def _end_rx_cycle(self) -> None:
        self.phase = Phase.IDLE
        self.links, self.pending = {}, set()
        self.kick()

    def _fail_pending(self, counter: str) -> None:
        for beam in sorted(self.pending):
            if beam in self.deferred:
                continue
            p = self.links[beam].packet
            if p is not None:
                self.cycle_failed.append((p, counter))
        self.pending = set()

    def _response_timeout(self) -> None:
        self.resp_timer = None
        if self.window is not None:
            return
        if self.phase is Phase.AWAIT_CTS:
            self._fail_pending("srl")
            self._conclude_tx_cycle()
        elif self.phase is Phase.AWAIT_ACK:
            self._fail_pending("lrl")
            self._conclude_tx_cycle()
        elif self.phase is Phase.AWAIT_DATA:
            self._end_rx_cycle()

    def _conclude_tx_cycle(self) -> None:
        self.sim.cancel(self.resp_timer)
        self.resp_timer = None
        ok = self.cycle_ok
        failed = self.cycle_failed
        for p in ok:
            self._remove_from_queue(p)
            self.network.forwarded(p, self)
        if ok or failed:
            cw_on_result(self.backoff, bool(ok))
        for p, counter in failed:
            setattr(p, counter, getattr(p, counter) + 1)
            limit = self.params.short_retry_limit if counter == "srl" else self.params.long_retry_limit
            if getattr(p, counter) >= limit:
                self._remove_from_queue(p)
                self.network.retry_drop(p, self)
        self.network.on_cycle(self, [p.uid for p in ok], [p.uid for p, _ in failed])
        self.cycle_ok, self.cycle_failed = [], []
        self.links, self.pending, self.deferred = {}, set(), set()
        self.phase = Phase.IDLE
        self.after_tx_cycle(bool(ok))
        if not self.is_transmitting(self.sim.now):
            self.kick()

    def _remove_from_queue(self, p: Packet) -> None:
        for bs in self.beams.values():
            try:
                bs.queue.remove(p)
                return
            except ValueError:
                continue

    # ---------------------------------------------------------- helpers
    def flag_potential(self, frame: Frame, beam: int) -> None:
        mark_potential_transmitter(self.beams[beam], frame.src)
        self.network.on_flag(self, beam, frame)

    @property
    def busy(self) -> bool:
        return self.phase is not Phase.IDLE or self.window is not None
