"""Scenario files: JSON loading, defaults, validation and presets."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import engine
from .mac.common import MacParams
from .mac.proposed import (WindowPeriodError, compute_window_period,
                           required_role_switch_slots)
from .mobility import GaussMarkovParams
from .radio import (AntennaConfig, ChannelModel, Position,
                    propagation_delay, transmission_delay)

log = logging.getLogger(__name__)

PRESETS = ("fig1-cpt", "fig1-cpr", "mobile-50")
VARIANT_NAMES = ("basic", "proposed")
_warned: set[str] = set()


class ConfigError(ValueError):
    """Invalid scenario; ``code`` distinguishes the failure class."""

    def __init__(self, message: str, code: str):
        super().__init__(f"[{code}] {message}")
        self.code = code


@dataclass
class NodeSpec:
    id: int
    position: Position | None
    antenna: AntennaConfig
    default_peer: int | None = None


@dataclass
class FlowSpec:
    src: int | None
    dst: int | None
    rate_bps: float
    packet_bytes: int = 1500
    start_s: float = 0.0
    stop_s: float | None = None


@dataclass
class RoutingSpec:
    k: int = 4
    refresh_s: float = 1.0


@dataclass
class MobileSpec:
    num_nodes: int = 50
    num_flows: int = 1
    endpoint_beams: int = 4
    gm: GaussMarkovParams = field(default_factory=GaussMarkovParams)


@dataclass
class ScenarioConfig:
    name: str
    variant: str
    channel: ChannelModel
    mac: MacParams
    nodes: list[NodeSpec]
    flows: list[FlowSpec]
    routing: RoutingSpec
    duration_s: float
    seed: int
    replications: int
    sample_s: float
    mobile: MobileSpec | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def is_mobile(self) -> bool:
        return self.mobile is not None

    def config_hash(self) -> str:
        """Hash of every field except the seed and the MAC variant, so pairs share it."""
        body = {k: v for k, v in self.raw.items() if k != "sim"}
        body = copy.deepcopy(body)
        body.get("mac", {}).pop("variant", None)
        sim = dict(self.raw.get("sim", {}))
        sim.pop("seed", None)
        sim.pop("replications", None)
        body["sim"] = sim
        text = json.dumps(body, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def with_overrides(self, variant: str | None = None, seed: int | None = None,
                       **sim_overrides) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        if variant is not None:
            raw.setdefault("mac", {})["variant"] = variant
        if seed is not None:
            raw.setdefault("sim", {})["seed"] = seed
        for k, v in sim_overrides.items():
            raw.setdefault("sim", {})[k] = v
        return parse_scenario(raw)


_TOP_KEYS = {"name", "world", "channel", "mac", "nodes", "mobility", "flows", "routing", "sim",
             "metrics", "description"}
_MAC_KEYS = {"variant", "window_period_us", "data_wp_multiplier", "role_switch_slots", "cw_min",
             "cw_max", "srl", "lrl", "slot_us", "sifs_us", "difs_us", "queue_capacity",
             "timeout_slots", "rts_bytes", "cts_bytes", "ack_bytes"}


def _schema(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message, "schema")


def _unknown(section: str, got: dict, allowed: set[str]) -> None:
    extra = set(got) - allowed
    _schema(not extra, f"unknown keys in {section}: {sorted(extra)}")


def _mac_params(m: dict) -> MacParams:
    _unknown("mac", m, _MAC_KEYS)
    d = MacParams()
    try:
        p = MacParams(
            slot=engine.us(m.get("slot_us", d.slot / 1000)),
            sifs=engine.us(m.get("sifs_us", d.sifs / 1000)),
            difs=engine.us(m.get("difs_us", d.difs / 1000)),
            cw_min=int(m.get("cw_min", d.cw_min)),
            cw_max=int(m.get("cw_max", d.cw_max)),
            short_retry_limit=int(m.get("srl", d.short_retry_limit)),
            long_retry_limit=int(m.get("lrl", d.long_retry_limit)),
            rts_bytes=int(m.get("rts_bytes", d.rts_bytes)),
            cts_bytes=int(m.get("cts_bytes", d.cts_bytes)),
            ack_bytes=int(m.get("ack_bytes", d.ack_bytes)),
            queue_capacity=int(m.get("queue_capacity", d.queue_capacity)),
            window_period=engine.us(m.get("window_period_us", d.window_period / 1000)),
            data_wp_multiplier=float(m.get("data_wp_multiplier", d.data_wp_multiplier)),
            role_switch_slots=0,
            timeout_slots=int(m.get("timeout_slots", d.timeout_slots)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad mac field: {exc}", "schema") from None
    for name in ("slot", "sifs", "difs"):
        _schema(getattr(p, name) > 0, f"mac.{name}_us must be positive")
    _schema(p.cw_min > 0 and p.cw_min & (p.cw_min - 1) == 0, "mac.cw_min must be a power of two")
    _schema(p.cw_max >= p.cw_min and p.cw_max & (p.cw_max - 1) == 0,
            "mac.cw_max must be a power of two not below cw_min")
    _schema(p.queue_capacity > 0, "mac.queue_capacity must be positive")
    return p


def _antenna(a: dict) -> AntennaConfig:
    try:
        return AntennaConfig(
            num_beams=int(a.get("num_beams", 1)),
            boresight_offset=float(a.get("boresight_offset", 0.0)),
            steerable=bool(a.get("steerable", int(a.get("num_beams", 1)) == 1)),
            beamwidth=float(a.get("beamwidth", 45.0)),
            active_beams=tuple(a["active_beams"]) if a.get("active_beams") is not None else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad antenna: {exc}", "schema") from None


def parse_scenario(raw: dict) -> ScenarioConfig:
    _schema(isinstance(raw, dict), "scenario must be a JSON object")
    _unknown("scenario", raw, _TOP_KEYS)
    name = raw.get("name", "scenario")
    ch = raw.get("channel", {})
    channel = ChannelModel(bit_rate=float(ch.get("bit_rate", 5e6)),
                           comm_radius=float(ch.get("comm_radius", 3000.0)))
    _schema(channel.bit_rate > 0 and channel.comm_radius > 0, "channel values must be positive")
    m = raw.get("mac", {})
    variant = m.get("variant", "proposed")
    _schema(variant in VARIANT_NAMES, f"mac.variant must be one of {VARIANT_NAMES}")
    mac = _mac_params(m)

    world = raw.get("world", {})
    width = float(world.get("width", 10_000.0))
    height = float(world.get("height", 10_000.0))

    nodes: list[NodeSpec] = []
    mobile = None
    mob = raw.get("mobility", {"model": "static"})
    model = mob.get("model", "static")
    if model == "static":
        _schema(bool(raw.get("nodes")), "static scenarios need a non-empty node list")
        for n in raw["nodes"]:
            _schema("id" in n and "x" in n and "y" in n, f"node entry needs id, x, y: {n}")
            nodes.append(NodeSpec(int(n["id"]), Position(float(n["x"]), float(n["y"])),
                                  _antenna(n.get("antenna", {})), n.get("default_peer")))
    elif model == "gauss_markov":
        _schema(width > 0 and height > 0, "world bounds must be positive")
        gm = GaussMarkovParams(
            mean_speed=float(mob.get("mean_speed", 40.0)),
            speed_sigma=float(mob.get("speed_sigma", 5.0)),
            direction_sigma=float(mob.get("direction_sigma", 0.3)),
            alpha=float(mob.get("alpha", 0.75)),
            update_interval=float(mob.get("update_interval_s", 1.0)),
            width=width, height=height)
        _schema(0.0 <= gm.alpha <= 1.0, "mobility.alpha must lie in [0, 1]")
        mobile = MobileSpec(int(mob.get("num_nodes", 50)), int(mob.get("num_flows", 1)),
                            int(mob.get("endpoint_beams", 4)), gm)
        _schema(mobile.num_nodes >= 2 * mobile.num_flows, "not enough nodes for the flows")
        for i in range(mobile.num_nodes):
            nodes.append(NodeSpec(i, None, AntennaConfig(1, steerable=True)))
    else:
        raise ConfigError(f"unknown mobility model {model!r}", "schema")

    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate node ids", "schema")
    known = set(ids)

    flows = []
    for f in raw.get("flows", []):
        fs = FlowSpec(f.get("src"), f.get("dst"), float(f.get("rate_bps", 3e6)),
                      int(f.get("packet_bytes", 1500)), float(f.get("start_s", 0.0)),
                      f.get("stop_s"))
        _schema(fs.rate_bps > 0 and fs.packet_bytes > 0, "flow rate and size must be positive")
        if mobile is None:
            for end in (fs.src, fs.dst):
                if end not in known:
                    raise ConfigError(f"flow references unknown node {end}", "unknown-node")
        flows.append(fs)
    for n in nodes:
        if n.default_peer is not None and n.default_peer not in known:
            raise ConfigError(f"node {n.id} default_peer {n.default_peer} is unknown",
                              "unknown-node")

    r = raw.get("routing", {})
    routing = RoutingSpec(int(r.get("k", 4)), float(r.get("refresh_s", 1.0)))
    _schema(routing.k >= 1, "routing.k must be at least 1")
    sim = raw.get("sim", {})
    cfg = ScenarioConfig(
        name=name, variant=variant, channel=channel, mac=mac, nodes=nodes, flows=flows,
        routing=routing, duration_s=float(sim.get("duration_s", 180.0)),
        seed=int(sim.get("seed", 1)), replications=int(sim.get("replications", 1)),
        sample_s=float(raw.get("metrics", {}).get("sample_s", 1.0)), mobile=mobile, raw=raw)
    _schema(cfg.duration_s > 0, "sim.duration_s must be positive")
    _schema(cfg.replications >= 1, "sim.replications must be at least 1")
    _check_window(cfg)
    _resolve_role_switch(cfg, m.get("role_switch_slots", "auto"))
    return cfg


def neighbor_delays(cfg: ScenarioConfig) -> dict[int, list[int]]:
    """Per multi-beam node, propagation delays from every in-range neighbor."""
    out: dict[int, list[int]] = {}
    for n in cfg.nodes:
        if n.antenna.steerable or n.position is None:
            continue
        ds = []
        for o in cfg.nodes:
            if o.id == n.id:
                continue
            d = n.position.distance(o.position)
            if d <= cfg.channel.comm_radius:
                ds.append(propagation_delay(d, cfg.channel.propagation_speed))
        out[n.id] = ds
    return out


def _check_window(cfg: ScenarioConfig) -> None:
    mac = cfg.mac
    if cfg.is_mobile:
        worst = 2 * propagation_delay(cfg.channel.comm_radius, cfg.channel.propagation_speed)
        if not worst <= mac.window_period < mac.sifs and cfg.name not in _warned:
            _warned.add(cfg.name)
            log.warning("window period %dns may not cover the delay spread of a mobile "
                        "topology (bound up to %dns, SIFS %dns)", mac.window_period, worst, mac.sifs)
        if mac.window_period >= mac.sifs:
            raise ConfigError("window period must be below SIFS", "window-upper")
        return
    try:
        compute_window_period(neighbor_delays(cfg), mac.sifs, mac.window_period)
    except WindowPeriodError as exc:
        raise ConfigError(str(exc), f"window-{exc.side}") from None
    data_wp = int(round(mac.window_period * mac.data_wp_multiplier))
    if not 0 < data_wp < mac.sifs:
        raise ConfigError(f"data-phase window period {data_wp}ns must lie in (0, SIFS)",
                          "window-upper")


def _resolve_role_switch(cfg: ScenarioConfig, value) -> None:
    if value == "auto":
        if cfg.is_mobile:
            prop = propagation_delay(cfg.channel.comm_radius, cfg.channel.propagation_speed)
        else:
            prop = max((max(ds) for ds in neighbor_delays(cfg).values() if ds), default=0)
        delay = transmission_delay(cfg.mac.rts_bytes, cfg.channel.bit_rate) + prop
        cfg.mac.role_switch_slots = required_role_switch_slots(delay, cfg.mac.slot)
    else:
        if not isinstance(value, int) or value < 0:
            raise ConfigError("mac.role_switch_slots must be a nonnegative integer or 'auto'",
                              "schema")
        cfg.mac.role_switch_slots = value


def preset_path(name: str) -> Path:
    return Path(str(resources.files("mbmac.presets").joinpath(f"{name}.json")))


def load_scenario(source: str | Path) -> ScenarioConfig:
    """Load a scenario from a JSON path or a bundled preset name."""
    src = str(source)
    path = Path(src)
    if not path.exists() and src in PRESETS:
        path = preset_path(src)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {src}", "missing")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", "parse") from None
    return parse_scenario(raw)


__all__ = ["ConfigError", "ScenarioConfig", "NodeSpec", "FlowSpec", "RoutingSpec", "MobileSpec",
           "PRESETS", "load_scenario", "parse_scenario", "preset_path", "neighbor_delays"]
