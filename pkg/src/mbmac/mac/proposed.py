"""Asynchronous multi-beam MAC with reception windows.

A node that decodes its first desired frame arms a SIFS timer and a shorter
window timer; desired frames completing inside the window join the batch, and
the window timer is cancelled as soon as the batch is complete. Late RTSs and
RTSs on beams that are not awaiting a response never disturb the awaited
beams; they only mark the sender as a potential transmitter so that the next
transmission carries a notification toward it.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping

from .common import CTS, DATA, N_CTS, N_RTS, RTS, Frame, FrameKind
from .node import MacNode, Phase


class WindowPeriodError(ValueError):
    def __init__(self, message: str, side: str):
        super().__init__(message)
        self.side = side


def window_lower_bound(delays: Mapping[object, Iterable[int]]) -> int:
    """Twice the largest propagation-delay spread seen by any common receiver.

    ``delays`` maps each receiver to the delays (ns) from the transmitters
    that must reach it together.
    """
    spread = 0
    for ds in delays.values():
        ds = list(ds)
        if len(ds) > 1:
            spread = max(spread, max(ds) - min(ds))
    return 2 * spread


def compute_window_period(delays: Mapping[object, Iterable[int]], sifs: int, requested: int) -> int:
    """Validate ``requested`` against [2 * max spread, SIFS)."""
    if sifs <= 0:
        raise ValueError("sifs must be positive")
    lower = window_lower_bound(delays)
    if lower >= sifs:
        raise WindowPeriodError(
            f"no valid window period: lower bound {lower}ns is not below SIFS {sifs}ns",
            "infeasible")
    if requested >= sifs:
        raise WindowPeriodError(f"window period {requested}ns must be below SIFS {sifs}ns", "upper")
    if requested < lower:
        raise WindowPeriodError(
            f"window period {requested}ns is below the delay-spread bound {lower}ns", "lower")
    return requested


def required_role_switch_slots(max_delay: float, slot: float) -> int:
    """Slots a transmitter waits after its ACKs so the next hop wins the channel."""
    if slot <= 0:
        raise ValueError("slot must be positive")
    # ratios like 40.3 / 20 carry float noise; snap before taking the ceiling
    return math.ceil(round(max_delay / slot, 9))


def beam_index_guard(pending_beams: set[int], awaited: FrameKind | None, frame: Frame,
                     beam: int) -> bool:
    """Whether ``frame`` may touch the response timers of the awaited beams."""
    return awaited is not None and beam in pending_beams and frame.kind is awaited


class AsyncMac(MacNode):
    variant = "proposed"

    def wp_allowance(self, kind: FrameKind) -> int:
        if kind in (RTS, CTS, N_RTS, N_CTS):
            return self.params.window_period
        if kind is DATA:
            return self._data_window()
        return 0

    def _data_window(self) -> int:
        return int(round(self.params.window_period * self.params.data_wp_multiplier))

    def _total_desired(self) -> int:
        if self.phase is Phase.IDLE:
            return self.attainable_capacity(self.sim.now)
        if self.phase is Phase.AWAIT_ACK:
            return len(self.pending)
        return len(self.links)

    def on_desired(self, frame: Frame, beam: int) -> None:
        now = self.sim.now
        w = self.window
        if w is None:
            wp = None
            if not self.single_beam:
                wp = self._data_window() if self.phase is Phase.AWAIT_DATA else self.params.window_period
            self.open_window(frame, beam, wp, self._total_desired())
        elif (frame.kind is w.kind and now <= w.window_end
              and w.no_of_frames < w.total_desired_frames):
            self.accept(frame, beam)
        else:
            self.smart_late_packet(frame, beam)

    def smart_late_packet(self, frame: Frame, beam: int) -> None:
        if frame.kind is RTS:
            self.flag_potential(frame, beam)
        else:
            self.network.on_discard(self, beam, frame, "late")

    def on_undesired_addressed(self, frame: Frame, beam: int) -> None:
        if frame.kind is RTS:
            # never allowed to cancel a frame timeout on the awaited beams
            self.flag_potential(frame, beam)

    def on_notification(self, frame: Frame, beam: int) -> None:
        if self.phase is not Phase.AWAIT_CTS or beam not in self.pending:
            return
        link = self.links.get(beam)
        if link is None or link.peer != frame.src:
            return
        if self.window is not None and beam in self.window.beams:
            return
        # the peer is busy and has told us until when; not a failure
        self.pending.discard(beam)
        self.deferred.add(beam)
        if not self.pending and self.window is None:
            self._conclude_tx_cycle()

    def after_tx_cycle(self, any_success: bool) -> None:
        if any_success and self.params.role_switch_slots:
            self.defer_until = self.sim.now + self.params.role_switch_slots * self.params.slot
