"""Capacity and energy efficiency of multi-radio multi-channel wireless networks."""

from .conflict import ConflictGraph, build_mdcg, enumerate_maximal_is, max_weight_is
from .energy import EnergyError, EnergyReport, ee_upper_bound, energy_efficiency
from .lp import SchedulePlan, Strategy, TwoStageSolver, solve_two_stage
from .model import (
    Commodity,
    EnergyParams,
    NodeSpec,
    PerChannelFixed,
    Topology,
    TopologyError,
    TotalFixed,
    Tuple,
    enumerate_tuples,
    generate_random,
    load_topology,
)
from .sweep import CrConfig, ConfigResult, relaxation_sweep, run_config, sweep_cr
from .validate import check_plan

__version__ = "0.1.0"

__all__ = [
    "Commodity", "ConfigResult", "ConflictGraph", "CrConfig", "EnergyError", "EnergyParams",
    "EnergyReport", "NodeSpec", "PerChannelFixed", "SchedulePlan", "Strategy", "Topology",
    "TopologyError", "TotalFixed", "Tuple", "TwoStageSolver", "build_mdcg", "check_plan",
    "ee_upper_bound", "energy_efficiency", "enumerate_maximal_is", "enumerate_tuples",
    "generate_random", "load_topology", "max_weight_is", "relaxation_sweep", "run_config",
    "solve_two_stage", "sweep_cr",
]
