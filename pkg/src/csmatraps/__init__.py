"""Trap analysis of CSMA wireless networks under the idealized CSMA model.

Enumerates the feasible states of a contention graph, decomposes the
state-transition diagram into traps, estimates how long the process stays in
each trap and how long it takes to move between traps, and cross-checks the
analysis with an event-driven simulator.
"""
from .errors import CsmaTrapsError
from .graph import ContentionGraph, fig7_network, gen_grid, gen_linear, gen_random, gen_ring, load_graph, parse_graph
from .passage import first_passage
from .report import Thresholds, full_report
from .sojourn import RHO0, exact_sojourn, sojourn_time
from .statespace import all_throughputs, asymptotic_throughput, enumerate_states, link_throughput
from .traps import find_traps, trap_probability

__all__ = [
    "RHO0",
    "ContentionGraph",
    "CsmaTrapsError",
    "Thresholds",
    "all_throughputs",
    "asymptotic_throughput",
    "enumerate_states",
    "exact_sojourn",
    "fig7_network",
    "find_traps",
    "first_passage",
    "full_report",
    "gen_grid",
    "gen_linear",
    "gen_random",
    "gen_ring",
    "link_throughput",
    "load_graph",
    "parse_graph",
    "sojourn_time",
    "trap_probability",
]
