"""Starvation classification and the combined analysis report."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidParameter
from .graph import ContentionGraph
from .passage import first_passage
from .sojourn import RHO0, sojourn_time
from .statespace import (
    DEFAULT_MAX_STATES,
    StateGraph,
    _check_link,
    _check_rho,
    all_throughputs,
    asymptotic_throughput,
    enumerate_states,
    link_throughput,
    mask_links,
)
from .traps import Trap, TrapForest, find_traps, frozen_traps, starving_links, trap_probability

SCHEMA_VERSION = 1
FROZEN_SELECTION = "greedy pairwise-disjoint frozen traps by decreasing Pr*T_V"


@dataclass(frozen=True)
class Thresholds:
    """``th_equil`` and ``th_temp`` are throughputs, ``x_target`` a mean wait in normalized time."""

    th_equil: float = 0.05
    th_temp: float = 0.05
    d_target: int = 1
    x_target: float = 10.0

    def __post_init__(self):
        for name in ("th_equil", "th_temp", "x_target"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameter(f"{name} must be positive, got {value}")
        if not 0 < self.th_equil <= 1 or not 0 < self.th_temp <= 1:
            raise InvalidParameter("throughput thresholds must lie in (0, 1]")
        if isinstance(self.d_target, bool) or not isinstance(self.d_target, int) or self.d_target < 1:
            raise InvalidParameter(f"d_target must be an integer >= 1, got {self.d_target}")

    def to_dict(self) -> dict:
        return {
            "th_equil": self.th_equil,
            "th_temp": self.th_temp,
            "d_target": self.d_target,
            "x_target": self.x_target,
        }


def classify_equilibrium(sg: StateGraph, rho: float, th: Thresholds, i: int) -> bool:
    return link_throughput(sg, rho, i) < th.th_equil


def classify_temporal(forest: TrapForest, sg: StateGraph, rho: float, th: Thresholds, i: int) -> tuple[bool, list[int]]:
    """Whether link ``i`` starves inside some trap of depth at least ``d_target``; returns supporting trap ids."""
    _check_link(sg, i)
    support = [
        t.id for t in forest
        if t.depth >= th.d_target and i in starving_links(t, sg, rho, th.th_temp)
    ]
    return bool(support), support


@dataclass(frozen=True)
class UnifiedBound:
    """Lower bound on link ``i``'s mean residual wait from its frozen traps.

    ``exponent`` is the leading power of rho of the bound, ``None`` when no
    frozen trap exists.
    """

    value: float
    exponent: int | None
    trap_ids: tuple[int, ...]

    def __iter__(self):
        return iter((self.value, self.exponent))


def _bound_exponent(trap: Trap, sg: StateGraph) -> int:
    # Pr{Tr} ~ rho**(l + d - max column) and T_V ~ rho**d
    return trap.level + 2 * trap.depth - sg.max_column


def unified_bound(forest: TrapForest, sg: StateGraph, rho: float, i: int) -> UnifiedBound:
    _check_rho(rho)
    scored = [
        (trap_probability(t, sg, rho) * sojourn_time(t, sg, rho).value, t)
        for t in frozen_traps(forest, sg, i)
    ]
    scored.sort(key=lambda p: (-p[0], p[1].id))
    chosen: list[Trap] = []
    total = 0.0
    for value, t in scored:
        if all(not t.overlaps(c) for c in chosen):
            chosen.append(t)
            total += value
    if not chosen:
        return UnifiedBound(0.0, None, ())
    exponent = max(_bound_exponent(t, sg) for t in chosen)
    return UnifiedBound(total, exponent, tuple(sorted(t.id for t in chosen)))


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def _labels(g: ContentionGraph, mask: int) -> list[str]:
    return [g.label(i) for i in mask_links(mask)]


@dataclass
class StarvationReport:
    graph: ContentionGraph
    rho: float
    thresholds: Thresholds
    column_counts: tuple[int, ...]
    links: list[dict] = field(default_factory=list)
    traps: list[dict] = field(default_factory=list)
    passage: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "graph": self.graph.to_dict(),
            "rho": self.rho,
            "rho_over_rho0": self.rho / RHO0,
            "thresholds": self.thresholds.to_dict(),
            "state_space": {
                "states": sum(self.column_counts),
                "column_counts": list(self.column_counts),
            },
            "links": self.links,
            "traps": self.traps,
            "passage": self.passage,
            "metadata": {
                "time_unit": "mean transmission duration",
                "rho0": RHO0,
                "frozen_trap_selection": FROZEN_SELECTION,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @property
    def starving_links(self) -> list[int]:
        return [
            row["link"] for row in self.links
            if row["equilibrium_starved"] or row["temporally_starved"] or row["unified_bound_starved"]
        ]


def _trap_entry(t: Trap, sg: StateGraph, rho: float, th: Thresholds) -> dict:
    g = sg.graph
    soj = sojourn_time(t, sg, rho)
    starving = starving_links(t, sg, rho, th.th_temp)
    return {
        "id": t.id,
        "name": t.name,
        "level": t.level,
        "depth": t.depth,
        "parent": t.parent,
        "children": list(t.children),
        "state_count": len(t),
        "column_sizes": list(t.column_sizes),
        "roots": [sg.states[k] for k in t.roots],
        "root_labels": [_labels(g, sg.states[k]) for k in t.roots],
        "probability": trap_probability(t, sg, rho),
        "sojourn": {
            "value": soj.value,
            "coefficients": [_frac(c) for c in soj.coefficients],
            "beta": _frac(soj.beta),
            "leading": float(soj.beta) * rho ** soj.depth,
            "uniform": soj.exact,
        },
        "starving_links": starving,
        "starving_labels": [g.label(i) for i in starving],
    }


def _passage_pairs(forest: TrapForest, sg: StateGraph, rho: float) -> list[dict]:
    out = []
    levels = sorted({t.level for t in forest})
    for level in levels:
        same = [t for t in forest if t.level == level]
        for a in same:
            for b in same:
                if a.id == b.id or a.overlaps(b):
                    continue
                out.append({
                    "from": a.id,
                    "to": b.id,
                    "from_name": a.name,
                    "to_name": b.name,
                    "value": first_passage(sg, forest, a, b, rho),
                })
    return out


def build_report(sg: StateGraph, forest: TrapForest, rho: float, th: Thresholds) -> StarvationReport:
    _check_rho(rho)
    g = sg.graph
    th_values = all_throughputs(sg, rho)
    report = StarvationReport(g, float(rho), th, sg.column_counts)
    for i in range(g.n_links):
        limit = asymptotic_throughput(sg, i)
        temporal, support = classify_temporal(forest, sg, rho, th, i)
        bound = unified_bound(forest, sg, rho, i)
        report.links.append({
            "link": i,
            "label": g.label(i),
            "throughput": float(th_values[i]),
            "asymptotic_throughput": _frac(limit),
            "equilibrium_starved": bool(th_values[i] < th.th_equil),
            "temporally_starved": temporal,
            "temporal_traps": support,
            "unified_bound": {
                "value": bound.value,
                "exponent": bound.exponent,
                "traps": list(bound.trap_ids),
            },
            "unified_bound_starved": bound.value > th.x_target,
            "asymptotically_starved": bound.exponent is not None and bound.exponent >= 1,
        })
    report.traps = [_trap_entry(t, sg, rho, th) for t in forest]
    report.passage = _passage_pairs(forest, sg, rho)
    return report


def full_report(
    g: ContentionGraph,
    rho: float,
    th: Thresholds | None = None,
    max_states: int = DEFAULT_MAX_STATES,
    min_depth: int = 1,
) -> StarvationReport:
    th = Thresholds() if th is None else th
    _check_rho(rho)
    sg = enumerate_states(g, max_states)
    return build_report(sg, find_traps(sg, min_depth), rho, th)


def format_summary(report: StarvationReport) -> str:
    """Human-readable digest of a report."""
    g = report.graph
    lines = [
        f"links: {g.n_links}  edges: {len(g.edges)}  states: {sum(report.column_counts)}  "
        f"rho: {report.rho:g} ({report.rho / RHO0:g} x rho0)",
    ]
    if not report.traps:
        lines.append("no traps")
    else:
        lines.append("traps:")
        for t in report.traps:
            roots = " ".join("{" + ",".join(r) + "}" for r in t["root_labels"])
            starving = ",".join(t["starving_labels"]) or "-"
            soj = t["sojourn"]
            lines.append(
                f"  {t['name']:<10} l={t['level']} d={t['depth']} roots {roots}  "
                f"Pr={100 * t['probability']:.2f}%  T_V={soj['value']:.6g}  "
                f"beta*rho^d={soj['leading']:.6g}  starving {{{starving}}}"
            )
    if report.passage:
        lines.append("passage times:")
        for p in report.passage:
            lines.append(f"  {p['from_name']} -> {p['to_name']}: {p['value']:.6g}")
    lines.append("links:")
    for row in report.links:
        flags = [
            name for name, key in (
                ("equilibrium", "equilibrium_starved"),
                ("temporal", "temporally_starved"),
                ("unified", "unified_bound_starved"),
            ) if row[key]
        ]
        lines.append(
            f"  {row['label']:>4}  Th={row['throughput']:.4f}  limit={row['asymptotic_throughput']}  "
            f"bound={row['unified_bound']['value']:.4g}  starved: {','.join(flags) or 'no'}"
        )
    return "\n".join(lines) + "\n"
