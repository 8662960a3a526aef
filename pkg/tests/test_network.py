import pytest

from mbmac import simulate
from mbmac.mac.node import InvariantError
from mbmac.network import Network

from oracles import DIFS, FROZEN_KEY_TIMES, SLOT, handshake_oracle, simulated_handshake
from scenarios import late_rts_scenario, line_scenario, mobile


def test_oracle_matches_frozen_values():
    rows = handshake_oracle()
    times = {(n, e, k): t for t, n, e, k in rows}
    f = FROZEN_KEY_TIMES
    assert times[(6, "tx", "RTS")] == f["rts_tx"]
    assert times[(10, "window_cancel", "")] in (f["rts_rx_far"], f["data_rx_far"])
    assert times[(10, "tx", "CTS")] == f["cts_tx"]
    assert times[(7, "rx", "CTS")] == f["cts_rx_near"]
    assert times[(9, "rx", "CTS")] == f["cts_rx_far"]
    assert times[(10, "tx", "ACK")] == f["ack_tx"]
    assert times[(8, "rx", "ACK")] == f["ack_rx_near"]
    assert times[(6, "rx", "ACK")] == f["ack_rx_far"]
    assert times[(6, "cycle", "")] == f["cycle_far"]
    assert sorted(t for t, n, e, k in rows if e == "rx" and k == "DATA") == \
        [f["data_rx_near"]] * 2 + [f["data_rx_far"]] * 2


def test_first_handshake_matches_oracle_to_the_nanosecond():
    expected = handshake_oracle()
    got = simulated_handshake(FROZEN_KEY_TIMES["cycle_far"])
    assert got == expected


# ------------------------------------------------------- late RTS injection
def awaited_timeline(res, node=5, peers=(2, 3)):
    return [(t, n, b, e, k, s, d) for t, n, b, e, k, s, d in res.trace
            if (n == node and (s in peers or d in peers)) or n in peers]


def test_late_rts_basic_forces_retry_at_the_sender():
    res = simulate(late_rts_scenario("basic", True), trace=True)
    rts6 = [t for t, n, _b, e, k, *_ in res.trace if n == 6 and e == "tx" and k == "RTS"]
    assert rts6[0] == 411_667
    # timeout, then DIFS + 32 slots (window doubled) before the retry
    fails = [row for row in res.trace if row[1] == 6 and row[3] == "cycle" and row[6] == 1]
    assert rts6[1] == fails[0][0] + DIFS + 32 * SLOT
    assert ("discard_late" in {row[3] for row in res.trace if row[1] == 5})


def test_late_rts_proposed_leaves_awaited_beams_untouched():
    clean = simulate(late_rts_scenario("proposed", False), trace=True)
    dirty = simulate(late_rts_scenario("proposed", True), trace=True)
    assert awaited_timeline(clean) == awaited_timeline(dirty)
    flags = [row for row in dirty.trace if row[1] == 5 and row[3] == "flag"]
    assert flags and flags[0][5] == 6
    data_at = min(row[0] for row in dirty.trace
                  if row[1] == 5 and row[3] == "tx" and row[4] == "DATA")
    notes = [row for row in dirty.trace if row[1] == 5 and row[3] == "tx"
             and row[4].startswith("N_") and row[6] == 6]
    assert notes and notes[0][0] == data_at
    # node 6 defers on the notification instead of counting a failure
    cycles6 = [row for row in dirty.trace if row[1] == 6 and row[3] == "cycle"]
    assert cycles6[0][6] == 0
    assert dirty.stats[2].delivered == 1


# ------------------------------------------------------------ end to end
@pytest.mark.parametrize("variant", ["basic", "proposed"])
def test_multihop_chain_delivers(variant):
    res = simulate(line_scenario(variant))
    st = res.stats[0]
    assert st.generated > 0
    assert st.delivered >= st.generated - 3
    counts = res.node_counts
    assert counts[1]["forwarded"] > 0 and counts[2]["forwarded"] > 0


def test_unreachable_destination_counts_no_route():
    cfg = line_scenario(spacing=4000.0, duration=0.05)
    res = simulate(cfg)
    st = res.stats[0]
    assert st.generated == st.drops["no_route"] > 0


def test_conservation_breach_is_detected():
    net = Network(line_scenario(duration=0.05))
    net.sim.run_until(20_000_000)
    net.stats[0].generated += 1
    with pytest.raises(InvariantError):
        net.check_conservation()


@pytest.mark.parametrize("variant", ["basic", "proposed"])
def test_mobile_run_is_consistent(variant):
    res = simulate(mobile(variant, seed=2, duration=3.0, flows=3))
    for fid, st in res.stats.items():
        assert st.delivered + st.dropped <= st.generated
    assert {fid for _, fid, _ in res.route_history} == {0, 1, 2}
    for s in res.samples:
        assert 0 <= s.active_routes <= 4
