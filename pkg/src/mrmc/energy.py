"""Energy accounting, energy efficiency and the shortest-path upper bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lp import SchedulePlan
from .model import NoPathError, Topology, Tuple, shortest_path_hops

NEG_TOL = 1e-9


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyReport:
    e_transmission: float
    e_sleep: float
    throughput: float
    efficiency: float
    upper_bound: float
    efficiency_fraction: float

    def as_dict(self) -> dict:
        return dict(vars(self))


def transmission_energy(plan: SchedulePlan, tuples: Sequence[Tuple]) -> float:
    """Energy per slot spent moving traffic: each tuple costs e_tx + e_rx per unit flow."""
    if not len(tuples):
        return 0.0
    unit = np.array([t.e_tx + t.e_rx for t in tuples])
    return float(unit @ np.asarray(plan.tuple_flows).sum(axis=1))


def sleep_energy(plan: SchedulePlan, topology: Topology, p0: Optional[float] = None) -> float:
    """Sleep-mode energy per slot: every radio not busy in the active IS sleeps."""
    p0 = topology.energy.p0 if p0 is None else p0
    busy = sum(2.0 * a * len(members) for members, a in plan.active_sets)
    value = p0 * (topology.total_radios - busy)
    if value < -NEG_TOL * max(1.0, p0 * topology.total_radios):
        raise EnergyError(
            f"negative sleep energy {value:g}: plan keeps more radios busy than exist"
        )
    return max(value, 0.0)


def _unit_energy(topology: Topology) -> float:
    e = topology.energy
    base = e.e_tx + e.e_rx
    for o in e.overrides:
        if not math.isclose(o.e_tx + o.e_rx, base, rel_tol=1e-12, abs_tol=1e-15):
            raise EnergyError("upper bound undefined for heterogeneous energies")
    return base


def ee_upper_bound(topology: Topology) -> float:
    """1 / mean over commodities of (e_tx + e_rx) * shortest hop count.

    With unequal demands each commodity is weighted by its demand, which
    reduces to the plain mean for homogeneous commodities.
    """
    unit = _unit_energy(topology)
    if not topology.commodities:
        return 0.0
    demand = sum(c.demand for c in topology.commodities)
    cost = sum(c.demand * unit * shortest_path_hops(topology, c) for c in topology.commodities)
    if cost == 0:
        return math.inf
    return demand / cost


def energy_efficiency(plan: SchedulePlan, tuples: Sequence[Tuple], topology: Topology,
                      throughput: Optional[float] = None,
                      upper_bound: Optional[float] = None) -> EnergyReport:
    e = transmission_energy(plan, tuples)
    e0 = sleep_energy(plan, topology)
    thr = plan.throughput(topology) if throughput is None else throughput
    ee = thr / (e + e0) if thr > 0 and e + e0 > 0 else 0.0
    if upper_bound is None:
        try:
            upper_bound = ee_upper_bound(topology)
        except NoPathError:
            upper_bound = 0.0
    frac = ee / upper_bound if upper_bound > 0 else 0.0
    return EnergyReport(e, e0, thr, ee, upper_bound, frac)
