"""Command-line interface: generate | analyze | simulate | validate."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import graph as graphs
from .errors import CsmaTrapsError, InsufficientSamples, InvalidParameter
from .graph import ContentionGraph
from .report import Thresholds, build_report, format_summary
from .sim import SampleStats, SimConfig, bimodal_fraction, run_seeds
from .sojourn import RHO0
from .statespace import DEFAULT_MAX_STATES, enumerate_states
from .traps import find_traps


def parse_rho(text: str) -> float:
    """``"53.5"`` or a multiple of rho0 such as ``"10x"``."""
    text = text.strip()
    try:
        value = float(text[:-1]) * RHO0 if text.lower().endswith("x") else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid rho {text!r}") from None
    if not value > 0 or not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"rho must be positive, got {text!r}")
    return value


def parse_net(spec: str) -> ContentionGraph:
    """Generator spec: ``ring:N``, ``linear:N``, ``grid:RxC``, ``random:N:DEG:SEED`` or ``fig7``."""
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "ring" and len(args) == 1:
            return graphs.gen_ring(int(args[0]))
        if kind == "linear" and len(args) == 1:
            return graphs.gen_linear(int(args[0]))
        if kind == "grid" and len(args) == 1:
            rows, cols = args[0].lower().split("x")
            return graphs.gen_grid(int(rows), int(cols))
        if kind == "random" and len(args) == 3:
            return graphs.gen_random(int(args[0]), float(args[1]), int(args[2]))
        if kind == "fig7" and not args:
            return graphs.fig7_network()
    except ValueError as exc:
        if isinstance(exc, CsmaTrapsError):
            raise
        raise InvalidParameter(f"malformed network spec {spec!r}") from None
    raise InvalidParameter(f"unknown network spec {spec!r}")


def _add_input(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("-g", "--graph", type=Path, help="contention graph JSON file")
    src.add_argument("--net", help="built-in generator, e.g. grid:2x3, ring:5, random:20:3:7, fig7")


def _add_rho(p: argparse.ArgumentParser) -> None:
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--rho", type=parse_rho, help="access intensity, or a multiple of rho0 like 10x")
    grp.add_argument("--rho0-mult", type=float, help=f"access intensity as a multiple of rho0={RHO0}")


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--th-equil", type=float, default=0.05)
    p.add_argument("--th-temp", type=float, default=0.05)
    p.add_argument("--d-target", type=int, default=1)
    p.add_argument("--x-target", type=float, default=10.0)
    p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=float, default=1e6, help="simulated time after warmup")
    p.add_argument("--warmup", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tx", default="exp", choices=["exp", "const", "uniform"], help="transmission-time distribution")
    p.add_argument("--backoff", default="exp", choices=["exp", "const", "uniform"], help="backoff distribution")


def _graph(args) -> ContentionGraph:
    return graphs.load_graph(args.graph) if args.graph is not None else parse_net(args.net)


def _rho(args) -> float:
    if args.rho is not None:
        return args.rho
    if not args.rho0_mult > 0:
        raise InvalidParameter("--rho0-mult must be positive")
    return args.rho0_mult * RHO0


def _thresholds(args) -> Thresholds:
    return Thresholds(args.th_equil, args.th_temp, args.d_target, args.x_target)


def _config(args, g: ContentionGraph, rho: float, seed: int) -> SimConfig:
    return SimConfig.create(
        g, rho, args.horizon, backoff=args.backoff, transmission=args.tx, seed=seed, warmup=args.warmup
    )


def _write(path: Path | None, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_generate(args) -> int:
    if args.kind == "ring":
        g = graphs.gen_ring(args.n)
    elif args.kind == "linear":
        g = graphs.gen_linear(args.n)
    elif args.kind == "grid":
        g = graphs.gen_grid(args.rows, args.cols)
    elif args.kind == "random":
        g = graphs.gen_random(args.n, args.avg_degree, args.seed)
    else:
        g = graphs.fig7_network()
    _write(args.output, graphs.serialize_graph(g) + "\n")
    return 0


def _with_ms(value: float, tx_ms: float | None) -> str:
    return f"{value:.6g}" if tx_ms is None else f"{value:.6g} ({value * tx_ms:.6g} ms)"


def cmd_analyze(args) -> int:
    g = _graph(args)
    rho = _rho(args)
    sg = enumerate_states(g, args.max_states)
    report = build_report(sg, find_traps(sg), rho, _thresholds(args))
    if args.output is not None:
        Path(args.output).write_text(report.to_json())
    if args.json:
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(format_summary(report))
        if args.tx_ms is not None and report.traps:
            sys.stdout.write(f"durations with mean transmission {args.tx_ms} ms:\n")
            for t in report.traps:
                sys.stdout.write(f"  T_V {t['name']}: {_with_ms(t['sojourn']['value'], args.tx_ms)}\n")
            for p in report.passage:
                sys.stdout.write(f"  T_p {p['from_name']} -> {p['to_name']}: {_with_ms(p['value'], args.tx_ms)}\n")
    return 0


def _analysis(g: ContentionGraph, rho: float, args):
    sg = enumerate_states(g, args.max_states)
    forest = find_traps(sg)
    report = build_report(sg, forest, rho, _thresholds(args))
    sets = {t.name: t.masks for t in forest}
    pairs = {
        f"{p['from_name']}->{p['to_name']}": (sets[p["from_name"]], sets[p["to_name"]])
        for p in report.passage
    }
    return report, sets, pairs


def _sample_dict(x: np.ndarray, min_samples: int) -> dict:
    s = SampleStats.from_samples(x)
    out = s.to_dict()
    out["sufficient"] = s.count >= min_samples
    return out


def cmd_simulate(args) -> int:
    g = _graph(args)
    rho = _rho(args)
    sets: dict = {}
    pairs: dict = {}
    report = None
    if args.traps:
        report, sets, pairs = _analysis(g, rho, args)

    trace_fh = None
    writer = None
    if args.trace_csv is not None:
        trace_fh = open(args.trace_csv, "w", newline="")
        writer = csv.writer(trace_fh)
        writer.writerow(["time", "link", "event"])

    def dump(trace):
        for t, i, kind in trace.events():
            writer.writerow([repr(t), i, kind])

    try:
        stats = run_seeds(
            [_config(args, g, rho, args.seed)],
            state_sets=sets,
            pairs=pairs,
            window=args.window,
            on_trace=dump if writer is not None else None,
        )
    finally:
        if trace_fh is not None:
            trace_fh.close()

    out = {
        "rho": rho,
        "seed": args.seed,
        "horizon": args.horizon,
        "warmup": args.warmup,
        "transmission": args.tx,
        "backoff": args.backoff,
        "events": stats.events,
        "throughput": [float(x) for x in stats.throughput],
    }
    if args.window is not None:
        out["window"] = args.window
        out["bimodal_fraction"] = [bimodal_fraction(stats.windows[i]) for i in range(g.n_links)]
        if args.windows_csv is not None:
            with open(args.windows_csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["window_start", "link", "throughput"])
                starts = args.warmup + args.window * np.arange(len(stats.windows[0]))
                for k, start in enumerate(starts):
                    for i in range(g.n_links):
                        w.writerow([repr(float(start)), i, repr(float(stats.windows[i][k]))])
    if report is not None:
        out["traps"] = [
            {
                "name": t["name"],
                "probability": t["probability"],
                "measured_probability": stats.occupancy(t["name"]),
                "sojourn": t["sojourn"]["value"],
                "measured_sojourn": _sample_dict(stats.sojourn[t["name"]], args.min_samples),
            }
            for t in report.traps
        ]
        out["passage"] = [
            {
                "from": p["from_name"],
                "to": p["to_name"],
                "value": p["value"],
                "measured": _sample_dict(stats.passage[f"{p['from_name']}->{p['to_name']}"], args.min_samples),
            }
            for p in report.passage
        ]
    text = json.dumps(out, indent=2) + "\n"
    if args.stats is not None:
        Path(args.stats).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _delta(model: float, measured: float) -> float:
    return (model - measured) / measured


def cmd_validate(args) -> int:
    g = _graph(args)
    rho = _rho(args)
    report, sets, pairs = _analysis(g, rho, args)
    if not report.traps:
        sys.stdout.write("no traps\n")
        return 0
    configs = [_config(args, g, rho, args.seed + k) for k in range(args.seeds)]
    stats = run_seeds(configs, jobs=args.jobs, state_sets=sets, pairs=pairs)

    rows = []
    lines = [f"{'trap':<10} {'T_V':>12} {'simulated':>12} {'visits':>9} {'dT_V':>9}"]
    for t in report.traps:
        try:
            s = stats.sojourn_stats(t["name"], args.min_samples)
        except InsufficientSamples as exc:
            lines.append(f"{t['name']:<10} {t['sojourn']['value']:>12.6g} {'-':>12} {exc.count:>9} {'-':>9}")
            rows.append({"trap": t["name"], "model": t["sojourn"]["value"], "visits": exc.count})
            continue
        d = _delta(t["sojourn"]["value"], s.mean)
        lines.append(f"{t['name']:<10} {t['sojourn']['value']:>12.6g} {s.mean:>12.6g} {s.count:>9} {100 * d:>8.2f}%")
        rows.append({"trap": t["name"], "model": t["sojourn"]["value"], "simulated": s.mean,
                     "ci95": s.ci95, "visits": s.count, "delta": d})
    deltas = [abs(r["delta"]) for r in rows if "delta" in r]
    if deltas:
        lines.append(f"mean |dT_V| = {100 * float(np.mean(deltas)):.2f}%")

    prow = []
    if report.passage:
        lines.append(f"{'pair':<22} {'T_p':>12} {'simulated':>12} {'samples':>9} {'dT_p':>9}")
        for p in report.passage:
            key = f"{p['from_name']}->{p['to_name']}"
            try:
                s = stats.passage_stats(key, args.min_samples)
            except InsufficientSamples as exc:
                lines.append(f"{key:<22} {p['value']:>12.6g} {'-':>12} {exc.count:>9} {'-':>9}")
                prow.append({"pair": key, "model": p["value"], "samples": exc.count})
                continue
            d = _delta(p["value"], s.mean)
            lines.append(f"{key:<22} {p['value']:>12.6g} {s.mean:>12.6g} {s.count:>9} {100 * d:>8.2f}%")
            prow.append({"pair": key, "model": p["value"], "simulated": s.mean,
                         "ci95": s.ci95, "samples": s.count, "delta": d})
    sys.stdout.write("\n".join(lines) + "\n")
    if args.output is not None:
        Path(args.output).write_text(json.dumps({"rho": rho, "sojourn": rows, "passage": prow}, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csmatraps", description="Trap analysis of CSMA networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a contention graph as JSON")
    p.add_argument("kind", choices=["ring", "linear", "grid", "random", "fig7"])
    p.add_argument("--n", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--avg-degree", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="trap analysis report")
    _add_input(p)
    _add_rho(p)
    _add_thresholds(p)
    p.add_argument("-o", "--output", type=Path, help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print JSON instead of the text summary")
    p.add_argument("--tx-ms", type=float, help="also show durations in ms for this mean transmission time")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run the event-driven simulator")
    _add_input(p)
    _add_rho(p)
    _add_sim(p)
    _add_thresholds(p)
    p.add_argument("--window", type=float, help="window length for windowed throughput")
    p.add_argument("--trace-csv", type=Path)
    p.add_argument("--windows-csv", type=Path)
    p.add_argument("--stats", type=Path, help="write statistics JSON here instead of stdout")
    p.add_argument("--traps", action="store_true", help="also measure every analysed trap and trap pair")
    p.add_argument("--min-samples", type=int, default=30)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="compare analysis with simulation")
    _add_input(p)
    _add_rho(p)
    _add_sim(p)
    _add_thresholds(p)
    p.add_argument("--seeds", type=int, default=1, help="number of independent runs to pool")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for independent runs")
    p.add_argument("--min-samples", type=int, default=30)
    p.add_argument("-o", "--output", type=Path, help="write the comparison as JSON")
    p.set_defaults(func=cmd_validate)
    return parser


def _check_generate(parser: argparse.ArgumentParser, args) -> None:
    need = {"ring": ["n"], "linear": ["n"], "grid": ["rows", "cols"], "random": ["n", "avg_degree"], "fig7": []}
    missing = [name for name in need[args.kind] if getattr(args, name) is None]
    if missing:
        parser.error(f"generate {args.kind} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "generate":
        _check_generate(parser, args)
    if getattr(args, "window", None) is not None and not args.window > 0:
        parser.error("--window must be positive")
    if getattr(args, "seeds", 1) < 1 or getattr(args, "jobs", 1) < 1:
        parser.error("--seeds and --jobs must be at least 1")
    try:
        return args.func(args)
    except (CsmaTrapsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
