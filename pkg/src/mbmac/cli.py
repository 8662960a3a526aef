"""Command-line front end: run scenarios, compare paired results, validate files."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import statistics
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_scenario, parse_scenario
from .mac.node import InvariantError
from .metrics import RouteUsageSample, e2e_delay, extra_route_utilization, pdr, throughput
from .network import TRACE_COLUMNS, simulate

log = logging.getLogger("mbmac")

METRIC_COLUMNS = ("scenario", "variant", "seed", "flow_id", "rate_bps", "generated", "delivered",
                  "drops_overflow", "drops_retry", "drops_noroute", "throughput_bps", "pdr",
                  "e2e_delay_us", "src", "dst", "num_flows", "config_hash")
COUNT_COLUMNS = ("scenario", "variant", "seed", "node", "event", "count", "config_hash")
USAGE_COLUMNS = ("scenario", "variant", "seed", "t_ns", "flow_id", "active_routes", "config_hash")
REPORT_COLUMNS = ("scenario", "config_hash", "num_flows", "rate_bps", "variant", "seeds",
                  "pdr_q1", "pdr_median", "pdr_q3", "delay_q1_us", "delay_median_us",
                  "delay_q3_us", "extra_route_pct_median", "extra_route_pct_mean")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def run_one(cfg: ScenarioConfig, trace: bool = False) -> dict:
    """Simulate ``cfg`` and flatten the outcome into CSV-ready rows."""
    res = simulate(cfg, trace=trace)
    h = cfg.config_hash()
    base = (cfg.name, cfg.variant, cfg.seed)
    metrics = []
    for f in res.flows:
        st = res.stats[f.flow_id]
        d = e2e_delay(st)
        metrics.append(base + (f.flow_id, f.rate_bps, st.generated, st.delivered,
                               st.drops["overflow"], st.drops["retry_limit"],
                               st.drops["no_route"],
                               throughput(st, res.horizon_s, f.packet_bytes), pdr(st),
                               None if d is None else d * 1e6, f.src, f.dst, len(res.flows), h))
    counts = [base + (n, ev, c, h) for n in sorted(res.node_counts)
              for ev, c in sorted(res.node_counts[n].items())]
    usage = [base + (s.t, s.flow_id, s.active_routes, h) for s in res.samples]
    return {"metrics": metrics, "counts": counts, "usage": usage,
            "trace": res.trace if trace else None, "seed": cfg.seed, "variant": cfg.variant}


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def run_replications(cfg: ScenarioConfig, seeds: list[int], jobs: int = 1,
                     trace: bool = False) -> list[dict]:
    cfgs = [cfg.with_overrides(seed=s) for s in seeds]
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, cfgs, [trace] * len(cfgs)))
    return [run_one(c, trace) for c in cfgs]


def write_outputs(out: Path, results: list[dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    results = sorted(results, key=lambda r: (r["variant"], r["seed"]))
    _write_csv(out / "metrics.csv", METRIC_COLUMNS, [row for r in results for row in r["metrics"]])
    _write_csv(out / "node_counts.csv", COUNT_COLUMNS, [row for r in results for row in r["counts"]])
    _write_csv(out / "route_usage.csv", USAGE_COLUMNS, [row for r in results for row in r["usage"]])
    for r in results:
        if r["trace"] is not None:
            _write_csv(out / f"trace_{r['variant']}_{r['seed']}.csv", TRACE_COLUMNS, r["trace"])


def apply_sets(raw: dict, sets: list[str]) -> dict:
    """Apply ``a.b.0.c=value`` overrides; values are parsed as JSON when possible."""
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}", "schema")
        try:
            val = json.loads(value)
        except json.JSONDecodeError:
            val = value
        parts = key.split(".")
        node = raw
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node.setdefault(p, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = val
        else:
            node[last] = val
    return raw


# ----------------------------------------------------------------- compare
def _read(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _quartiles(values: list[float]) -> tuple[float | None, float | None, float | None]:
    if not values:
        return None, None, None
    if len(values) == 1:
        return values[0], values[0], values[0]
    q = statistics.quantiles(values, n=4, method="inclusive")
    return q[0], statistics.median(values), q[2]


def per_seed_summary(rows: list[dict]) -> dict[tuple, dict]:
    """Pool flows of one run: overall PDR and packet-mean delay per (group, seed)."""
    acc: dict[tuple, dict] = defaultdict(lambda: {"gen": 0, "del": 0, "dsum": 0.0})
    for r in rows:
        key = (r["scenario"], r["config_hash"], int(r["num_flows"]), float(r["rate_bps"]),
               int(r["seed"]))
        a = acc[key]
        a["gen"] += int(r["generated"])
        a["del"] += int(r["delivered"])
        if r["e2e_delay_us"]:
            a["dsum"] += float(r["e2e_delay_us"]) * int(r["delivered"])
    out = {}
    for k, a in acc.items():
        out[k] = {"pdr": a["del"] / a["gen"] if a["gen"] else None,
                  "delay_us": a["dsum"] / a["del"] if a["del"] else None}
    return out


def _usage(rows: list[dict]) -> dict[tuple, list[RouteUsageSample]]:
    out: dict[tuple, list] = defaultdict(list)
    for r in rows:
        out[(r["config_hash"], int(r["seed"]))].append(
            RouteUsageSample(int(r["t_ns"]), int(r["flow_id"]), int(r["active_routes"])))
    return out


def compare_dirs(dir_a: Path, dir_b: Path) -> list[tuple]:
    runs = {}
    for d in (dir_a, dir_b):
        metrics = _read(d / "metrics.csv")
        variants = {r["variant"] for r in metrics}
        if len(variants) != 1:
            raise ConfigError(f"{d} mixes MAC variants {sorted(variants)}", "pairing")
        runs[variants.pop()] = (metrics, _read(d / "route_usage.csv"))
    if set(runs) != {"basic", "proposed"}:
        raise ConfigError("compare needs one basic and one proposed result directory", "pairing")
    summaries = {v: per_seed_summary(m) for v, (m, _) in runs.items()}
    if summaries["basic"].keys() != summaries["proposed"].keys():
        raise ConfigError("result directories are not paired (seeds or configs differ)", "pairing")
    usage = {v: _usage(u) for v, (_, u) in runs.items()}
    groups: dict[tuple, list[int]] = defaultdict(list)
    for key in summaries["basic"]:
        groups[key[:4]].append(key[4])
    report = []
    for g in sorted(groups):
        seeds = sorted(groups[g])
        extra = [extra_route_utilization(usage["proposed"].get((g[1], s), []),
                                         usage["basic"].get((g[1], s), [])) for s in seeds]
        for variant in ("basic", "proposed"):
            vals = [summaries[variant][g + (s,)] for s in seeds]
            p = _quartiles(sorted(v["pdr"] for v in vals if v["pdr"] is not None))
            dl = _quartiles(sorted(v["delay_us"] for v in vals if v["delay_us"] is not None))
            ex = (statistics.median(extra), statistics.fmean(extra)) if variant == "proposed" \
                else (None, None)
            report.append(g + (variant, len(seeds)) + p + dl + ex)
    return report


# -------------------------------------------------------------------- main
def _load(path: str, sets: list[str]) -> ScenarioConfig:
    cfg = load_scenario(path)
    if sets:
        cfg = parse_scenario(apply_sets(cfg.raw, sets))
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args.scenario, args.set)
    cfg = cfg.with_overrides(variant=args.mac, seed=args.seed)
    if args.duration is not None:
        cfg = cfg.with_overrides(duration_s=args.duration)
    k = args.replications or cfg.replications
    seeds = [cfg.seed + i for i in range(k)]
    out = Path(args.out or f"results/{cfg.name}-{cfg.variant}")
    results = run_replications(cfg, seeds, args.jobs, args.trace)
    write_outputs(out, results)
    for r in sorted(results, key=lambda r: r["seed"]):
        for row in r["metrics"]:
            print(f"seed={row[2]} flow={row[3]} {row[13]}->{row[14]} delivered={row[6]}/{row[5]} "
                  f"throughput={row[10] / 1e6:.3f}Mbps")
    print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    report = compare_dirs(Path(args.dir_a), Path(args.dir_b))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, REPORT_COLUMNS, report)
    print(f"wrote {out} ({len(report)} rows)")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.scenario, args.set)
    print(f"{cfg.name}: ok ({len(cfg.nodes)} nodes, {len(cfg.flows)} flow entries, "
          f"variant {cfg.variant}, window {cfg.mac.window_period}ns, "
          f"role_switch_slots {cfg.mac.role_switch_slots}, hash {cfg.config_hash()})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mbmac", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario file or preset")
    r.add_argument("scenario", help="scenario JSON path or preset name")
    r.add_argument("--seed", type=int)
    r.add_argument("--replications", type=int)
    r.add_argument("--mac", choices=("basic", "proposed"))
    r.add_argument("--out")
    r.add_argument("--trace", action="store_true", help="write the full event trace")
    r.add_argument("--duration", type=float, help="override sim.duration_s")
    r.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario field, e.g. mobility.num_flows=3")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="paired basic-vs-proposed report")
    c.add_argument("dir_a")
    c.add_argument("dir_b")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("scenario")
    v.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
