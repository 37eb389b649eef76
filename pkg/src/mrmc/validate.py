"""Solver-independent feasibility check of a schedule plan.

Works only from the plan, the tuple list and the topology; the conflict
rule is re-evaluated pairwise rather than read from a prebuilt graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Sequence

import numpy as np

from .conflict import conflicts
from .lp import FEAS_TOL, SchedulePlan
from .model import Topology, Tuple


@dataclass
class PlanCheck:
    time_budget: float = 0.0      # max(0, sum(alpha) - 1), alpha outside [0, 1]
    activity: float = 0.0         # max over tuples of flow/w - active time
    negativity: float = 0.0       # most negative flow, as a positive number
    conservation: float = 0.0     # max |node balance residual|
    dependent_sets: List[int] = field(default_factory=list)
    tol: float = FEAS_TOL

    @property
    def worst(self) -> float:
        return max(self.time_budget, self.activity, self.negativity, self.conservation)

    @property
    def ok(self) -> bool:
        return self.worst <= self.tol and not self.dependent_sets

    def describe(self) -> str:
        parts = [f"{k}={getattr(self, k):.3g}" for k in
                 ("time_budget", "activity", "negativity", "conservation")]
        if self.dependent_sets:
            parts.append(f"dependent_sets={self.dependent_sets}")
        return ", ".join(parts)


def check_plan(plan: SchedulePlan, tuples: Sequence[Tuple], topology: Topology,
               tol: float = FEAS_TOL) -> PlanCheck:
    chk = PlanCheck(tol=tol)
    alphas = np.array([a for _, a in plan.active_sets], dtype=float)
    if alphas.size:
        chk.time_budget = max(0.0, alphas.sum() - 1.0, -alphas.min(), alphas.max() - 1.0)

    flows = np.asarray(plan.tuple_flows, dtype=float).reshape(len(tuples), -1)
    if flows.size:
        chk.negativity = max(0.0, -float(flows.min()))

    active_time = np.zeros(len(tuples))
    for m, (members, a) in enumerate(plan.active_sets):
        for p in members:
            active_time[p] += a
        for i, j in combinations(sorted(members), 2):
            if conflicts(tuples[i], tuples[j], topology):
                chk.dependent_sets.append(m)
                break
    if len(tuples):
        cap = np.array([t.capacity for t in tuples])
        need = flows.sum(axis=1) / cap
        chk.activity = max(0.0, float((need - active_time).max()))

    idx = topology.node_index
    worst = 0.0
    for k, c in enumerate(topology.commodities):
        s, d = idx[c.source], idx[c.destination]
        net: Dict[int, float] = {}
        for p, t in enumerate(tuples):
            f = flows[p, k]
            if f:
                net[t.tx] = net.get(t.tx, 0.0) + f
                net[t.rx] = net.get(t.rx, 0.0) - f
        delivered = plan.lam * c.demand
        for u in range(len(topology.nodes)):
            expected = delivered if u == s else (-delivered if u == d else 0.0)
            worst = max(worst, abs(net.get(u, 0.0) - expected))
    chk.conservation = worst
    return chk
