"""Two-stage scheduling/routing LP.

Stage 1 maximizes the common demand fraction lambda (network capacity);
stage 2 fixes the throughput and minimizes transmission energy.  Columns
are independent sets of the conflict graph, either fully enumerated or
generated on demand by max-weight-IS pricing on the LP duals.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple as PyTuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .conflict import (
    DEFAULT_IS_CAP,
    ConflictGraph,
    ResourceLimits,
    SearchLimitExceeded,
    co_channel_matrix,
    enumerate_maximal_is,
    greedy_extend,
    max_weight_is,
    max_weight_is_milp,
)
from .model import Topology, Tuple
from .simplex import SolverError, simplex

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-7
OPT_TOL = 1e-6
REDUCED_COST_TOL = 1e-7
# branch-and-bound budget per pricing call before switching to the MILP
DEFAULT_PRICING_NODES = 50_000


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class Strategy(str, enum.Enum):
    FULL = "full"
    COLGEN = "colgen"


# --------------------------------------------------------------------------
# generic sparse LP


class LpProblem:
    """Sparse LP assembled row by row.

    Variables carry names and bounds; rows are sparse coefficient maps with
    a relation (``<=``, ``>=``, ``=``) and a right-hand side.
    """

    def __init__(self, sense: str = "max"):
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        self.sense = sense
        self.names: List[str] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.objective: Dict[int, float] = {}
        self.row_names: List[str] = []
        self.relations: List[str] = []
        self.rhs: List[float] = []
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._vals: List[float] = []

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def add_variable(self, name: str, lower: float = 0.0, upper: float = math.inf,
                     cost: float = 0.0) -> int:
        if not lower <= upper:
            raise ValueError(f"{name}: lower bound {lower} > upper bound {upper}")
        self.names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        j = len(self.names) - 1
        if cost:
            self.objective[j] = float(cost)
        return j

    def add_constraint(self, coeffs: Dict[int, float], relation: str, rhs: float,
                       name: str = "") -> int:
        if relation not in ("<=", ">=", "="):
            raise ValueError(f"unknown relation {relation!r}")
        i = len(self.rhs)
        for j, v in coeffs.items():
            if not 0 <= j < self.num_vars:
                raise ValueError(f"row {name or i}: unknown variable {j}")
            if not math.isfinite(v):
                raise ValueError(f"row {name or i}: non-finite coefficient")
            if v:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(float(v))
        self.row_names.append(name or f"r{i}")
        self.relations.append(relation)
        self.rhs.append(float(rhs))
        return i

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self._vals, (self._rows, self._cols)), shape=(self.num_rows, self.num_vars)
        )

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.matrix() @ np.asarray(x, dtype=float)

    def to_lp_text(self) -> str:
        """CPLEX-LP style text dump for cross-checking with other solvers."""
        def term(v: float, name: str, first: bool) -> str:
            sign = "-" if v < 0 else ("" if first else "+")
            return f"{sign} {abs(v):.12g} {name}".strip()

        lines = ["Maximize" if self.sense == "max" else "Minimize"]
        obj = [term(v, self.names[j], k == 0)
               for k, (j, v) in enumerate(sorted(self.objective.items()))]
        lines.append(" obj: " + (" ".join(obj) if obj else "0 " + self.names[0]))
        lines.append("Subject To")
        A = self.matrix().tocsr()
        rel = {"<=": "<=", ">=": ">=", "=": "="}
        for i in range(self.num_rows):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            terms = [term(v, self.names[j], k == 0)
                     for k, (j, v) in enumerate(zip(A.indices[lo:hi], A.data[lo:hi]))]
            body = " ".join(terms) if terms else "0 " + self.names[0]
            lines.append(f" {self.row_names[i]}: {body} {rel[self.relations[i]]} {self.rhs[i]:.12g}")
        lines.append("Bounds")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            up = "+inf" if math.isinf(hi) else f"{hi:.12g}"
            lines.append(f" {lo:.12g} <= {name} <= {up}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: Status
    objective_value: float = math.nan
    primal: Optional[np.ndarray] = None
    # d(objective)/d(rhs), in the problem's own sense
    duals: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _solve_highs(problem: LpProblem, feas_tol: float) -> LpSolution:
    A = problem.matrix()
    c = problem.cost_vector()
    sign = -1.0 if problem.sense == "max" else 1.0
    rel = np.array(problem.relations)
    rhs = np.array(problem.rhs)
    ub_rows = np.nonzero(rel != "=")[0]
    eq_rows = np.nonzero(rel == "=")[0]
    flip = np.where(rel[ub_rows] == ">=", -1.0, 1.0)
    A_ub = sp.diags(flip) @ A[ub_rows] if ub_rows.size else None
    b_ub = flip * rhs[ub_rows] if ub_rows.size else None
    A_eq = A[eq_rows] if eq_rows.size else None
    b_eq = rhs[eq_rows] if eq_rows.size else None
    bounds = [(lo, None if math.isinf(hi) else hi) for lo, hi in zip(problem.lower, problem.upper)]
    res = linprog(
        sign * c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": feas_tol * 1e-2,
                 "dual_feasibility_tolerance": 1e-9, "presolve": True},
    )
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE, iterations=res.nit)
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED, iterations=res.nit)
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    duals = np.zeros(problem.num_rows)
    if ub_rows.size:
        duals[ub_rows] = sign * flip * res.ineqlin.marginals
    if eq_rows.size:
        duals[eq_rows] = sign * res.eqlin.marginals
    x = np.asarray(res.x, dtype=float)
    return LpSolution(Status.OPTIMAL, float(c @ x), x, duals, int(res.nit))


def _solve_simplex(problem: LpProblem) -> LpSolution:
    c = problem.cost_vector()
    sign = -1.0 if problem.sense == "max" else 1.0
    res = simplex(sign * c, problem.matrix().toarray(), problem.relations, problem.rhs,
                  problem.lower, problem.upper)
    if res.status != "optimal":
        return LpSolution(Status(res.status), iterations=res.iterations)
    return LpSolution(Status.OPTIMAL, float(c @ res.x), res.x, sign * res.duals,
                      res.iterations)


def solve_lp(problem: LpProblem, backend: str = "highs",
             feas_tol: float = FEAS_TOL) -> LpSolution:
    """Solve ``problem``.  ``backend`` is ``"highs"`` (sparse, default) or
    ``"simplex"`` (the internal dense revised simplex)."""
    if problem.num_vars == 0:
        return LpSolution(Status.OPTIMAL, 0.0, np.zeros(0), np.zeros(problem.num_rows))
    if backend == "highs":
        return _solve_highs(problem, feas_tol)
    if backend == "simplex":
        return _solve_simplex(problem)
    raise ValueError(f"unknown LP backend {backend!r}")


# --------------------------------------------------------------------------
# flow / schedule model


@dataclass
class SchedulePlan:
    """A schedule (IS, time fraction) plus per-(tuple, commodity) flows."""

    active_sets: List[PyTuple[frozenset, float]]
    tuple_flows: np.ndarray  # shape (num_tuples, num_commodities)
    lam: float

    def throughput(self, topology: Topology) -> float:
        return self.lam * sum(c.demand for c in topology.commodities)

    def summary(self, tuples: Sequence[Tuple]) -> dict:
        used = np.nonzero(self.tuple_flows.sum(axis=1) > 1e-12)[0]
        return {
            "lambda": self.lam,
            "active_sets": [
                {"alpha": a, "tuples": sorted(int(i) for i in s)} for s, a in self.active_sets
            ],
            "tuple_flows": [
                {"tuple": int(p), "tx": tuples[p].tx, "rx": tuples[p].rx,
                 "tx_radio": tuples[p].tx_radio, "rx_radio": tuples[p].rx_radio,
                 "channel": tuples[p].channel,
                 "flows": [float(v) for v in self.tuple_flows[p]]}
                for p in used
            ],
        }


class _FlowModel:
    """LP assembly over resource items (tuples, radio classes or links).

    Columns are sets of pricing vertices; ``vertex_item`` maps each vertex
    to the item whose activity row it feeds.
    """

    def __init__(self, items: Sequence[Tuple], topology: Topology,
                 vertex_item: Optional[Sequence[int]] = None):
        self.items = list(items)
        self.topology = topology
        self.vertex_item = list(range(len(items))) if vertex_item is None else list(vertex_item)
        idx = topology.node_index
        self.commodities = [(idx[c.source], idx[c.destination], c.demand)
                            for c in topology.commodities]
        self.total_demand = sum(d for _, _, d in self.commodities)

    def build(self, columns: Sequence[frozenset], stage: int,
              target: Optional[float] = None) -> PyTuple[LpProblem, dict]:
        items, K = self.items, len(self.commodities)
        prob = LpProblem("max" if stage == 1 else "min")
        fvar = np.empty((len(items), K), dtype=int)
        for p, t in enumerate(items):
            for k, (s, d, _) in enumerate(self.commodities):
                # a commodity never enters its source or leaves its destination
                ub = 0.0 if (t.rx == s or t.tx == d) else math.inf
                cost = t.unit_energy if stage == 2 else 0.0
                fvar[p, k] = prob.add_variable(f"f_{p}_{k}", 0.0, ub, cost)
        # no explicit alpha <= 1: the time row implies it and a bound would take its dual
        avar = [prob.add_variable(f"a_{m}", 0.0) for m in range(len(columns))]
        lam = prob.add_variable("lam", 0.0, math.inf,
                                self.total_demand if stage == 1 else 0.0)

        out_of: Dict[int, List[int]] = {}
        into: Dict[int, List[int]] = {}
        for p, t in enumerate(items):
            out_of.setdefault(t.tx, []).append(p)
            into.setdefault(t.rx, []).append(p)
        nodes = sorted(set(out_of) | set(into))

        def balance(u: int, k: int) -> Dict[int, float]:
            row = {int(fvar[p, k]): 1.0 for p in out_of.get(u, [])}
            for p in into.get(u, []):
                row[int(fvar[p, k])] = row.get(int(fvar[p, k]), 0.0) - 1.0
            return row

        for k, (s, d, demand) in enumerate(self.commodities):
            row = balance(s, k)
            row[lam] = -demand
            prob.add_constraint(row, "=", 0.0, f"src_{k}")
            row = {j: -v for j, v in balance(d, k).items()}
            row[lam] = -demand
            prob.add_constraint(row, "=", 0.0, f"dst_{k}")
            for u in nodes:
                if u not in (s, d):
                    prob.add_constraint(balance(u, k), "=", 0.0, f"bal_{k}_{u}")
        time_row = prob.add_constraint({a: 1.0 for a in avar}, "<=", 1.0, "time")
        uses: Dict[int, Dict[int, float]] = {}
        for m, col in enumerate(columns):
            for v in col:
                row = uses.setdefault(self.vertex_item[v], {})
                row[avar[m]] = row.get(avar[m], 0.0) - 1.0
        act_rows = []
        for p, t in enumerate(items):
            row = {int(fvar[p, k]): 1.0 / t.capacity for k in range(K)}
            row.update(uses.get(p, {}))
            act_rows.append(prob.add_constraint(row, "<=", 0.0, f"act_{p}"))
        if stage == 2:
            prob.add_constraint({lam: self.total_demand}, "=", float(target), "throughput")
        layout = {"f": fvar, "alpha": avar, "lam": lam, "time": time_row, "act": act_rows}
        return prob, layout


@dataclass
class SolveStats:
    strategy: str
    stage1_iterations: int = 0
    stage2_iterations: int = 0
    pricing_rounds: int = 0
    exact_pricing: int = 0
    milp_pricing: int = 0
    columns: int = 0
    reduction: str = "none"
    wall_ms: float = 0.0

    def as_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class _Reduction:
    """Symmetry reduction of the tuple space for column generation.

    Pricing vertices are (tx, rx, channel) classes whose radio variants are
    interchangeable.  If channels are interchangeable too, LP items are whole
    links and the channel label of a vertex is a free relabelling.
    """

    vertices: List[Tuple]
    vertex_item: List[int]
    items: List[Tuple]
    item_members: List[List[int]]
    channel_symmetric: bool


def _reduce(tuples: Sequence[Tuple], topology: Topology) -> Optional[_Reduction]:
    classes: Dict[PyTuple[int, int, int], List[int]] = {}
    for i, t in enumerate(tuples):
        classes.setdefault((t.tx, t.rx, t.channel), []).append(i)

    def signature(t: Tuple):
        return (t.capacity, t.e_tx, t.e_rx)

    vertices, members = [], []
    for key in sorted(classes):
        idx = classes[key]
        u, v, _ = key
        if len(idx) != topology.nodes[u].radios * topology.nodes[v].radios:
            return None
        sig = signature(tuples[idx[0]])
        if any(signature(tuples[i]) != sig for i in idx):
            return None
        vertices.append(tuples[idx[0]])
        members.append(idx)

    links: Dict[PyTuple[int, int], List[int]] = {}
    for k, t in enumerate(vertices):
        links.setdefault((t.tx, t.rx), []).append(k)
    symmetric = all(
        len(ks) == topology.channels
        and len({signature(vertices[k]) for k in ks}) == 1
        for ks in links.values()
    )
    if not symmetric:
        return _Reduction(vertices, list(range(len(vertices))), vertices, members, False)
    keys = sorted(links)
    item_of = {key: i for i, key in enumerate(keys)}
    vertex_item = [item_of[(t.tx, t.rx)] for t in vertices]
    items = [vertices[links[key][0]] for key in keys]
    item_members = [sorted(i for k in links[key] for i in members[k]) for key in keys]
    return _Reduction(vertices, vertex_item, items, item_members, True)


class TwoStageSolver:
    """Holds the column pool so capacity and (repeated) min-energy solves share it."""

    def __init__(self, tuples: Sequence[Tuple], graph: ConflictGraph, topology: Topology,
                 strategy: Strategy = Strategy.COLGEN, backend: str = "highs",
                 is_cap: int = DEFAULT_IS_CAP, reduce_symmetry: bool = True,
                 max_rounds: int = 100_000,
                 pricing_node_limit: Optional[int] = DEFAULT_PRICING_NODES):
        self.tuples = list(tuples)
        self.pricing_node_limit = pricing_node_limit
        self._degree: Optional[List[int]] = None
        self.graph = graph
        self.topology = topology
        self.strategy = Strategy(strategy)
        self.backend = backend
        self.max_rounds = max_rounds
        self.stats = SolveStats(self.strategy.value)
        self.reduction: Optional[_Reduction] = None
        self.limits: Optional[ResourceLimits] = None
        self.labels: Optional[List[int]] = None
        if self.strategy is Strategy.COLGEN and reduce_symmetry:
            self.reduction = _reduce(self.tuples, topology)
        red = self.reduction
        if red is not None:
            self.vertex_graph = ConflictGraph(co_channel_matrix(red.vertices, topology))
            self.limits = ResourceLimits(
                tuple((t.tx, t.rx) for t in red.vertices),
                tuple(n.radios for n in topology.nodes),
            )
            if red.channel_symmetric:
                self.labels = [t.channel for t in red.vertices]
            self.stats.reduction = "link" if red.channel_symmetric else "radio"
            self.model = _FlowModel(red.items, topology, red.vertex_item)
        else:
            self.vertex_graph = graph
            self.model = _FlowModel(self.tuples, topology)
        if self.strategy is Strategy.FULL:
            self.columns = [c for c in enumerate_maximal_is(graph, is_cap) if c]
        else:
            self.columns = self._initial_columns()
        self._known = set(self.columns)
        self.capacity: Optional[float] = None

    def _initial_columns(self) -> List[frozenset]:
        """One greedy maximal IS per not-yet-covered vertex."""
        cols: List[frozenset] = []
        covered: set = set()
        n = self.vertex_graph.tuple_count
        for p in range(n):
            if p in covered:
                continue
            order = [q for q in range(n) if q not in covered]
            col = frozenset(greedy_extend(self.vertex_graph, [p], self.limits, order))
            if col not in cols:
                cols.append(col)
            covered |= col
        return cols

    def _solve(self, stage: int, target: Optional[float] = None):
        rounds = 0
        vertex_item = np.asarray(self.model.vertex_item, dtype=int)
        while True:
            prob, layout = self.model.build(self.columns, stage, target)
            sol = solve_lp(prob, self.backend)
            if stage == 1:
                self.stats.stage1_iterations += sol.iterations
            else:
                self.stats.stage2_iterations += sol.iterations
            if not sol.optimal or self.strategy is Strategy.FULL:
                return sol, layout
            sign = 1.0 if stage == 1 else -1.0
            item_w = np.maximum(sign * sol.duals[layout["act"]], 0.0)
            weights = item_w[vertex_item] if vertex_item.size else item_w
            threshold = sign * sol.duals[layout["time"]]
            self.stats.pricing_rounds += 1
            new = self._heuristic_columns(weights, threshold)
            if not new:
                self.stats.exact_pricing += 1
                try:
                    best, value = max_weight_is(self.vertex_graph, weights, self.limits,
                                                labels=self.labels,
                                                floor=threshold + REDUCED_COST_TOL,
                                                node_limit=self.pricing_node_limit)
                except SearchLimitExceeded:
                    self.stats.milp_pricing += 1
                    best, value = max_weight_is_milp(self.vertex_graph, weights, self.limits)
                if value <= threshold + REDUCED_COST_TOL:
                    return sol, layout
                col = frozenset(greedy_extend(self.vertex_graph, best, self.limits))
                if col in self._known:
                    logger.warning("pricing returned a known column; stopping (rc=%g)",
                                   value - threshold)
                    return sol, layout
                new = [col]
            for col in new:
                self.columns.append(col)
                self._known.add(col)
            rounds += 1
            if rounds > self.max_rounds:
                raise SolverError(f"column generation exceeded {self.max_rounds} rounds")

    def _heuristic_columns(self, weights: np.ndarray, threshold: float) -> List[frozenset]:
        """Greedy maximal sets with positive reduced cost, tried before exact pricing."""
        n = len(weights)
        if self._degree is None:
            self._degree = [bin(m).count("1") for m in self.vertex_graph.neighbor_masks]
        degree = self._degree
        orders = (
            sorted(range(n), key=lambda v: (-weights[v], v)),
            sorted(range(n), key=lambda v: (-weights[v] / (1 + degree[v]), v)),
        )
        out: List[frozenset] = []
        for order in orders:
            order = [v for v in order if weights[v] > 0]
            col = frozenset(greedy_extend(self.vertex_graph, [], self.limits, order))
            value = float(sum(weights[v] for v in col))
            if value > threshold + REDUCED_COST_TOL and col not in self._known \
                    and col not in out:
                out.append(col)
        return out

    def solve_capacity(self) -> float:
        sol, layout = self._solve(1)
        if not sol.optimal:
            raise SolverError(f"capacity LP {sol.status.value}")
        self.capacity = max(float(sol.objective_value), 0.0)
        self.stats.columns = len(self.columns)
        return self.capacity

    def solve_min_energy(self, target: float) -> PyTuple[SchedulePlan, float]:
        """Minimum transmission energy plan delivering total throughput ``target``."""
        sol, layout = self._solve(2, target)
        if sol.status is Status.INFEASIBLE and self.capacity is not None \
                and target >= self.capacity * (1 - 1e-9):
            # target sits on the capacity boundary; back off by solver noise
            target = target * (1 - 1e-9)
            sol, layout = self._solve(2, target)
        if not sol.optimal:
            raise SolverError(f"min-energy LP {sol.status.value} at target {target:g}")
        self.stats.columns = len(self.columns)
        return self._plan(sol, layout), float(sol.objective_value)

    def _plan(self, sol: LpSolution, layout: dict) -> SchedulePlan:
        x = np.maximum(sol.primal, 0.0)
        flows = x[layout["f"]]
        alphas = [min(float(x[a]), 1.0) for a in layout["alpha"]]
        lam = float(x[layout["lam"]])
        cols = [(c, a) for c, a in zip(self.columns, alphas) if a > 1e-12]
        if self.reduction is None:
            return SchedulePlan([(frozenset(c), a) for c, a in cols], flows, lam)
        return self._lift(cols, flows, lam)

    def _lift(self, cols, item_flows: np.ndarray, lam: float) -> SchedulePlan:
        """Map a reduced plan back onto concrete tuples.

        Radios are handed out lowest-free-first inside each active set, and
        every item's flow is split over its tuples in proportion to their
        active time.
        """
        red = self.reduction
        index = {(t.tx, t.rx, t.tx_radio, t.rx_radio, t.channel): i
                 for i, t in enumerate(self.tuples)}
        active = []
        tuple_time = np.zeros(len(self.tuples))
        for col, a in cols:
            next_radio: Dict[int, int] = {}
            lifted = []
            for k in sorted(col):
                t = red.vertices[k]
                ru = next_radio.get(t.tx, 0)
                rv = next_radio.get(t.rx, 0)
                next_radio[t.tx] = ru + 1
                next_radio[t.rx] = rv + 1
                p = index[(t.tx, t.rx, ru, rv, t.channel)]
                lifted.append(p)
                tuple_time[p] += a
            active.append((frozenset(lifted), a))
        flows = np.zeros((len(self.tuples), item_flows.shape[1]))
        for i, idx in enumerate(red.item_members):
            if not item_flows[i].any():
                continue
            total = tuple_time[idx].sum()
            if total > 0:
                share = tuple_time[idx] / total
            else:
                share = np.zeros(len(idx))
                share[0] = 1.0
            flows[idx] = np.outer(share, item_flows[i])
        return SchedulePlan(active, flows, lam)


def build_capacity_lp(tuples: Sequence[Tuple], independent_sets: Sequence[frozenset],
                      topology: Topology) -> LpProblem:
    """Stage-1 LP: maximize total delivered demand ``lambda * sum(f0)``."""
    return _FlowModel(tuples, topology).build(list(independent_sets), 1)[0]


def build_min_energy_lp(tuples: Sequence[Tuple], independent_sets: Sequence[frozenset],
                        topology: Topology, f_star: float) -> LpProblem:
    """Stage-2 LP: minimize transmission energy at total throughput ``f_star``."""
    return _FlowModel(tuples, topology).build(list(independent_sets), 2, f_star)[0]


def solve_two_stage(tuples: Sequence[Tuple], graph: ConflictGraph, topology: Topology,
                    strategy: Strategy = Strategy.COLGEN, backend: str = "highs",
                    is_cap: int = DEFAULT_IS_CAP,
                    reduce_symmetry: bool = True) -> PyTuple[float, SchedulePlan, SolveStats]:
    """Capacity ``f*`` and the minimum-energy plan that achieves it."""
    t0 = time.perf_counter()
    solver = TwoStageSolver(tuples, graph, topology, strategy, backend, is_cap, reduce_symmetry)
    f_star = solver.solve_capacity()
    plan, _ = solver.solve_min_energy(f_star)
    solver.stats.wall_ms = (time.perf_counter() - t0) * 1e3
    return f_star, plan, solver.stats
