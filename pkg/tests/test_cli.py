from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys

import pytest

from csmatraps.cli import main, parse_net, parse_rho
from csmatraps.errors import InvalidParameter
from csmatraps.graph import fig7_network, gen_grid, load_graph
from conftest import RHO0


def test_parse_rho():
    assert parse_rho("2.5") == 2.5
    assert parse_rho("10x") == pytest.approx(10 * RHO0)
    for bad in ("0", "-1", "abc", "x", "inf"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_rho(bad)


def test_parse_net():
    assert parse_net("grid:2x3") == gen_grid(2, 3)
    assert parse_net("fig7") == fig7_network()
    assert parse_net("random:10:2:4").n_links == 10
    for bad in ("grid:2", "ring", "torus:4", "ring:x", "fig7:1"):
        with pytest.raises(InvalidParameter):
            parse_net(bad)


def test_generate_round_trip(tmp_path):
    path = tmp_path / "g.json"
    assert main(["generate", "grid", "--rows", "2", "--cols", "3", "-o", str(path)]) == 0
    assert load_graph(path) == gen_grid(2, 3)
    assert main(["generate", "random", "--n", "12", "--avg-degree", "3", "--seed", "5", "-o", str(tmp_path / "r.json")]) == 0
    assert load_graph(tmp_path / "r.json").n_links == 12


def test_generate_missing_argument():
    with pytest.raises(SystemExit) as exc:
        main(["generate", "ring"])
    assert exc.value.code == 2


def test_analyze_text_and_json(tmp_path, capsys):
    graph = tmp_path / "g.json"
    main(["generate", "fig7", "-o", str(graph)])
    report = tmp_path / "r.json"
    assert main(["analyze", "-g", str(graph), "--rho", "5.35", "-o", str(report), "--tx-ms", "1.5"]) == 0
    out = capsys.readouterr().out
    assert "G1^(1)" in out and "ms)" in out
    d = json.loads(report.read_text())
    assert [t["name"] for t in d["traps"]] == ["G1^(1)", "G2^(1)", "G1^(2)", "G2^(2)"]
    assert main(["analyze", "--net", "fig7", "--rho0-mult", "1", "--json"]) == 0
    assert json.loads(capsys.readouterr().out) == d


def test_missing_file_exits_nonzero(tmp_path, capsys):
    assert main(["analyze", "-g", str(tmp_path / "nope.json"), "--rho", "1"]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_malformed_graph(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"links": 2, "edges": [[0, 0]]}')
    assert main(["analyze", "-g", str(bad), "--rho", "1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_invalid_threshold(capsys):
    assert main(["analyze", "--net", "grid:2x3", "--rho", "1", "--th-temp", "0"]) == 1


def test_simulate_outputs(tmp_path, capsys):
    trace, windows, stats = tmp_path / "t.csv", tmp_path / "w.csv", tmp_path / "s.json"
    args = [
        "simulate", "--net", "grid:2x3", "--rho", "10x", "--horizon", "2000", "--seed", "3",
        "--window", "100", "--trace-csv", str(trace), "--windows-csv", str(windows),
        "--stats", str(stats), "--traps", "--tx", "const", "--backoff", "uniform",
    ]
    assert main(args) == 0
    with open(trace) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time", "link", "event"] and len(rows) > 10
    assert {r[2] for r in rows[1:]} == {"start", "end"}
    with open(windows) as fh:
        wrows = list(csv.reader(fh))
    assert wrows[0] == ["window_start", "link", "throughput"]
    assert len(wrows) == 1 + 20 * 6
    d = json.loads(stats.read_text())
    assert len(d["throughput"]) == 6 and len(d["bimodal_fraction"]) == 6
    assert [t["name"] for t in d["traps"]] == ["G1^(2)", "G2^(2)"]
    assert {p["from"] for p in d["passage"]} == {"G1^(2)", "G2^(2)"}


def test_simulate_rejects_bad_window():
    with pytest.raises(SystemExit):
        main(["simulate", "--net", "ring:4", "--rho", "1", "--window", "0"])


def test_validate_table(tmp_path, capsys):
    out_json = tmp_path / "v.json"
    args = ["validate", "--net", "grid:2x3", "--rho", "10x", "--horizon", "2e5", "--seeds", "2", "--jobs", "2", "-o", str(out_json)]
    assert main(args) == 0
    text = capsys.readouterr().out
    assert "dT_V" in text and "dT_p" in text and "mean |dT_V|" in text
    d = json.loads(out_json.read_text())
    assert len(d["sojourn"]) == 2
    for row in d["sojourn"]:
        assert abs(row["delta"]) < 0.1


def test_validate_without_traps(capsys):
    assert main(["validate", "--net", "ring:5", "--rho", "1", "--horizon", "100"]) == 0
    assert capsys.readouterr().out == "no traps\n"


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "csmatraps", "analyze", "--net", "linear:3", "--rho", "2"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0 and "G1^(1)" in res.stdout
