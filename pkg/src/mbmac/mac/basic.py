"""Baseline synchronous multi-beam MAC.

Concurrent reception only works when every frame of a batch finishes
arriving at the same instant. Frames that complete later are dropped on the
floor, and an RTS that beats the awaited CTS derails the whole exchange.
"""

from __future__ import annotations

from .common import RTS, Frame
from .node import MacNode, Phase


class BasicMac(MacNode):
    variant = "basic"

    def on_desired(self, frame: Frame, beam: int) -> None:
        w = self.window
        if w is None:
            self.open_window(frame, beam, None, 0)
        elif frame.kind is w.kind and self.sim.now == w.first_at:
            self.accept(frame, beam)
        else:
            # arrived after the batch instant: silently discarded
            self.network.on_discard(self, beam, frame, "late")

    def on_undesired_addressed(self, frame: Frame, beam: int) -> None:
        if frame.kind is not RTS:
            return
        now = self.sim.now
        if self.phase is Phase.AWAIT_CTS and self.window is None:
            # an RTS beats the CTSs: the node gives up on them and serves the newcomer
            if not self.nav_clear(beam, frame.src, now) or self.is_transmitting(now):
                return
            self.network.on_discard(self, beam, frame, "capture")
            self.sim.cancel(self.resp_timer)
            self.resp_timer = None
            self._fail_pending("srl")
            self._conclude_tx_cycle()
            self.open_window(frame, beam, None, 0)
        elif self.window is not None:
            self.network.on_discard(self, beam, frame, "late")
        elif self.phase in (Phase.AWAIT_DATA, Phase.AWAIT_ACK):
            self.flag_potential(frame, beam)
        elif not self.nav_clear(beam, frame.src, now):
            self.flag_potential(frame, beam)

    def role_priority_switch(self) -> str:
        """Next cycle's role: transmission wins whenever anything is queued."""
        return "transmit" if self.queued() else "receive"
