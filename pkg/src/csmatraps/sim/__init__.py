"""Event-driven simulation of the idealized CSMA network."""
from .config import DistributionSpec, SimConfig
from .engine import LinkTimer, Simulator, SimTrace, iter_traces, simulate
from .export import read_trace_csv, write_trace_csv, write_windows_csv
from .measure import (
    OccupancyTally,
    PassageTally,
    SampleStats,
    SojournTally,
    active_fraction,
    bimodal_fraction,
    check_carrier_sense,
    measure_passage,
    measure_residual_wait,
    measure_sojourn,
    measure_stationary,
    passage_samples,
    sojourn_samples,
    windowed_throughput,
)
from .runner import RunStatistics, run_seeds, run_statistics

__all__ = [
    "DistributionSpec",
    "LinkTimer",
    "OccupancyTally",
    "PassageTally",
    "RunStatistics",
    "SampleStats",
    "SimConfig",
    "SimTrace",
    "Simulator",
    "SojournTally",
    "active_fraction",
    "bimodal_fraction",
    "check_carrier_sense",
    "iter_traces",
    "measure_passage",
    "measure_residual_wait",
    "measure_sojourn",
    "measure_stationary",
    "passage_samples",
    "read_trace_csv",
    "run_seeds",
    "run_statistics",
    "simulate",
    "sojourn_samples",
    "windowed_throughput",
    "write_trace_csv",
    "write_windows_csv",
]
