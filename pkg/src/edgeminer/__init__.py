"""Distributed construction of process-mining footprint matrices at the event sources."""

from .alpha import PetriNet, alpha
from .collector import build_dfg, collect, dependency_measures
from .estimators import AlphaMiner, CentralFootprint, DependencyMeasures, EdgeMiner
from .events import (
    ActivityTable,
    Event,
    EventLog,
    Relation,
    ValidationError,
    central_footprint,
    generate_synthetic,
    parse_csv,
    parse_xes,
    read_log,
    relation,
    validate_log,
    write_csv,
)
from .footprint import MergedFM, PartialFM, binarize, fitness, merge_columns, split_columns
from .network import Latency, SimConfig, SimResult, Simulation, oracle_strategy_cost, run
from .node import Node

__version__ = "0.1.0"

__all__ = [
    "ActivityTable",
    "AlphaMiner",
    "CentralFootprint",
    "DependencyMeasures",
    "EdgeMiner",
    "Event",
    "EventLog",
    "Latency",
    "MergedFM",
    "Node",
    "PartialFM",
    "PetriNet",
    "Relation",
    "SimConfig",
    "SimResult",
    "Simulation",
    "ValidationError",
    "alpha",
    "binarize",
    "build_dfg",
    "central_footprint",
    "collect",
    "dependency_measures",
    "fitness",
    "generate_synthetic",
    "merge_columns",
    "oracle_strategy_cost",
    "parse_csv",
    "parse_xes",
    "read_log",
    "relation",
    "run",
    "split_columns",
    "validate_log",
    "write_csv",
]
