import copy
import json

import pytest

from mbmac import ConfigError, load_scenario, parse_scenario
from mbmac.config import PRESETS


def raw(name="fig1-cpr"):
    return copy.deepcopy(load_scenario(name).raw)


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    cfg = load_scenario(name)
    assert cfg.name == name


def test_reference_defaults():
    cfg = load_scenario("fig1-cpr")
    m = cfg.mac
    assert (m.slot, m.sifs, m.difs) == (20_000, 10_000, 50_000)
    assert (m.cw_min, m.cw_max, m.short_retry_limit, m.long_retry_limit) == (16, 1024, 7, 4)
    assert m.window_period == 9_000 and m.role_switch_slots == 3
    assert cfg.channel.bit_rate == 5e6 and cfg.duration_s == 180
    assert [(f.src, f.dst) for f in cfg.flows] == [(6, 10), (7, 10), (8, 10), (9, 10)]


def test_omitted_timing_falls_back_to_defaults():
    r = raw()
    del r["mac"]["slot_us"]
    assert parse_scenario(r).mac.slot == 20_000


def test_window_at_twelve_microseconds_is_rejected():
    r = raw()
    r["mac"]["window_period_us"] = 12
    with pytest.raises(ConfigError) as exc:
        parse_scenario(r)
    assert exc.value.code == "window-upper"


def test_window_below_spread_is_rejected():
    r = raw()
    r["mac"]["window_period_us"] = 2
    with pytest.raises(ConfigError) as exc:
        parse_scenario(r)
    assert exc.value.code == "window-lower"


def test_flow_to_unknown_node():
    r = raw()
    r["flows"][0]["dst"] = 99
    with pytest.raises(ConfigError) as exc:
        parse_scenario(r)
    assert exc.value.code == "unknown-node"


@pytest.mark.parametrize("mutate", [
    lambda r: r.update(bogus=1),
    lambda r: r["mac"].update(turbo=True),
    lambda r: r["mac"].update(variant="fancy"),
    lambda r: r["mac"].update(cw_min=10),
    lambda r: r["sim"].update(duration_s=0),
    lambda r: r["mac"].update(role_switch_slots=-1),
    lambda r: r.update(mobility={"model": "teleport"}),
])
def test_schema_errors(mutate):
    r = raw()
    mutate(r)
    with pytest.raises(ConfigError) as exc:
        parse_scenario(r)
    assert exc.value.code == "schema"


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_scenario(tmp_path / "nope.json")
    assert exc.value.code == "missing"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError) as exc:
        load_scenario(bad)
    assert exc.value.code == "parse"


def test_scenario_file_round_trip(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(raw("fig1-cpt")))
    assert load_scenario(path).config_hash() == load_scenario("fig1-cpt").config_hash()


def test_hash_ignores_seed_and_variant_only():
    cfg = load_scenario("fig1-cpt")
    h = cfg.config_hash()
    assert cfg.with_overrides(variant="basic", seed=42).config_hash() == h
    assert cfg.with_overrides(duration_s=5).config_hash() != h


def test_mobile_preset():
    cfg = load_scenario("mobile-50")
    assert cfg.is_mobile and len(cfg.nodes) == 50
    assert cfg.mobile.gm.mean_speed == 40 and cfg.mobile.gm.alpha == 0.75
    assert cfg.channel.comm_radius == 2000 and cfg.channel.bit_rate == 3e6
    assert cfg.routing.k == 4
