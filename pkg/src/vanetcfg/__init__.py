"""Distributed VANET clustering as a coalition formation game."""

from .baselines import ca_bp_init, greedy_unilateral, mst_cfa
from .config import SimConfig
from .engine import CoalitionGame, EngineState, LearningParams, OpKind, Operation, is_nash_stable, run
from .netmodel import ChannelParams, MobileNetwork, NetworkGraph, build_graph, generate_scenario
from .objective import Objective, ObjectiveParams
from .partition import Coalition, Partition

__all__ = [
    "ChannelParams", "Coalition", "CoalitionGame", "EngineState", "LearningParams", "MobileNetwork",
    "NetworkGraph", "Objective", "ObjectiveParams", "OpKind", "Operation", "Partition", "SimConfig",
    "build_graph", "ca_bp_init", "generate_scenario", "greedy_unilateral", "is_nash_stable",
    "mst_cfa", "run",
]

__version__ = "0.1.0"
