import csv

import pytest

from mbmac.cli import apply_sets, main


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_preset(capsys):
    assert main(["validate", "fig1-cpr"]) == 0
    assert "fig1-cpr: ok" in capsys.readouterr().out


def test_validate_reports_config_errors(capsys):
    assert main(["validate", "fig1-cpr", "--set", "mac.window_period_us=12"]) == 2
    assert "window-upper" in capsys.readouterr().err
    assert main(["validate", "no-such-file.json"]) == 2


def test_run_writes_csvs(tmp_path):
    out = tmp_path / "r"
    assert main(["run", "fig1-cpt", "--duration", "1.5", "--out", str(out), "--jobs", "1",
                 "--trace"]) == 0
    rows = read(out / "metrics.csv")
    assert [r["flow_id"] for r in rows] == ["0", "1", "2", "3"]
    assert all(r["variant"] == "proposed" for r in rows)
    assert read(out / "node_counts.csv")
    assert read(out / "route_usage.csv")
    trace = read(out / "trace_proposed_1.csv")
    assert trace[0]["event"] == "tx" and trace[0]["frame_kind"] == "RTS"


def test_runs_are_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}"
        main(["run", "mobile-50", "--duration", "2", "--replications", "2", "--out", str(out),
              "--jobs", "1", "--trace"])
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    for n in names:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes(), n


def test_compare_pairs_basic_and_proposed(tmp_path):
    for v in ("basic", "proposed"):
        main(["run", "mobile-50", "--mac", v, "--duration", "2", "--replications", "2",
              "--out", str(tmp_path / v), "--jobs", "1"])
    report = tmp_path / "report.csv"
    assert main(["compare", str(tmp_path / "basic"), str(tmp_path / "proposed"),
                 "--out", str(report)]) == 0
    rows = read(report)
    assert [r["variant"] for r in rows] == ["basic", "proposed"]
    assert rows[0]["seeds"] == "2"
    assert rows[1]["extra_route_pct_median"] != ""


def test_compare_refuses_unpaired_dirs(tmp_path):
    main(["run", "fig1-cpt", "--duration", "0.05", "--out", str(tmp_path / "a"), "--jobs", "1"])
    main(["run", "fig1-cpt", "--duration", "0.05", "--out", str(tmp_path / "b"), "--jobs", "1"])
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b"),
                 "--out", str(tmp_path / "r.csv")]) == 2


def test_apply_sets():
    raw = {"mac": {"srl": 7}, "flows": [{"rate_bps": 1}]}
    apply_sets(raw, ["mac.srl=3", "flows.0.rate_bps=4e6", "name=x", "sim.seed=9"])
    assert raw == {"mac": {"srl": 3}, "flows": [{"rate_bps": 4e6}], "name": "x",
                   "sim": {"seed": 9}}
    with pytest.raises(Exception):
        apply_sets({}, ["novalue"])
