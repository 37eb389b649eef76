"""Multi-dimensional conflict graph (MDCG) and independent-set machinery."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple as PyTuple

import numpy as np

from .model import Topology, Tuple

WEIGHT_TOL = 1e-9
DEFAULT_IS_CAP = 200_000


class ISSpaceTooLarge(RuntimeError):
    """More maximal independent sets than the configured cap."""


class SearchLimitExceeded(RuntimeError):
    """Branch and bound visited more nodes than its budget without a proof."""


def _within(topo: Topology, u: int, v: int) -> bool:
    return topo.distance(u, v) <= topo.interference_range


def conflicts(a: Tuple, b: Tuple, topology: Topology) -> bool:
    """Whether two tuples cannot be active at the same time."""
    if set(a.endpoints) & set(b.endpoints):
        return True
    if a.channel != b.channel:
        return False
    # symmetrized: either transmitter reaches a node of the other tuple
    return any(_within(topology, a.tx, w) for w in (b.tx, b.rx)) or any(
        _within(topology, b.tx, w) for w in (a.tx, a.rx)
    )


def co_channel_matrix(tuples: Sequence[Tuple], topology: Topology) -> np.ndarray:
    """Pairwise co-channel interference, ignoring radios.  Diagonal is True."""
    if not tuples:
        return np.zeros((0, 0), dtype=bool)
    pos = topology.positions
    diff = pos[:, None, :] - pos[None, :, :]
    near = np.hypot(diff[..., 0], diff[..., 1]) <= topology.interference_range
    tx = np.array([t.tx for t in tuples])
    rx = np.array([t.rx for t in tuples])
    ch = np.array([t.channel for t in tuples])
    # hits[i, j]: tx of i reaches some node of j
    hits = near[tx[:, None], tx[None, :]] | near[tx[:, None], rx[None, :]]
    return (ch[:, None] == ch[None, :]) & (hits | hits.T)


def radio_conflict_matrix(tuples: Sequence[Tuple]) -> np.ndarray:
    if not tuples:
        return np.zeros((0, 0), dtype=bool)
    keys: Dict[PyTuple[int, int], int] = {}
    ends = np.array(
        [[keys.setdefault(e, len(keys)) for e in t.endpoints] for t in tuples]
    )
    a, b = ends[:, 0], ends[:, 1]
    return (
        (a[:, None] == a[None, :])
        | (a[:, None] == b[None, :])
        | (b[:, None] == a[None, :])
        | (b[:, None] == b[None, :])
    )


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    """Symmetric, irreflexive conflict relation over vertex indices."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        n = adj.shape[0] if adj.ndim == 2 else 0
        adj = adj.reshape(n, n).copy()
        np.fill_diagonal(adj, False)
        if not np.array_equal(adj, adj.T):
            raise ValueError("conflict adjacency must be symmetric")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def tuple_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def adjacent(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    @cached_property
    def neighbor_masks(self) -> List[int]:
        """Neighbourhoods as Python int bitsets."""
        if self.tuple_count == 0:
            return []
        packed = np.packbits(self.adjacency, axis=1, bitorder="little")
        return [int.from_bytes(row.tobytes(), "little") for row in packed]

    def edges(self) -> List[PyTuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def dump_edges(self) -> str:
        return "".join(f"{i} {j}\n" for i, j in self.edges())

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[PyTuple[int, int]]) -> "ConflictGraph":
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            adj[i, j] = adj[j, i] = True
        return cls(adj)


def build_mdcg(tuples: Sequence[Tuple], topology: Topology) -> ConflictGraph:
    """Conflict graph over ``tuples``: shared radio or co-channel interference."""
    if not tuples:
        return ConflictGraph(np.zeros((0, 0), dtype=bool))
    return ConflictGraph(co_channel_matrix(tuples, topology) | radio_conflict_matrix(tuples))


@dataclass(frozen=True)
class ResourceLimits:
    """Packing side-constraints: each vertex consumes one unit of each of
    its resources and resource ``r`` holds at most ``capacity[r]`` units."""

    usage: PyTuple[PyTuple[int, ...], ...]
    capacity: PyTuple[int, ...]

    @cached_property
    def members(self) -> List[int]:
        masks = [0] * len(self.capacity)
        for v, rs in enumerate(self.usage):
            for r in rs:
                masks[r] |= 1 << v
        return masks

    def fits(self, chosen: Iterable[int]) -> bool:
        load = [0] * len(self.capacity)
        for v in chosen:
            for r in self.usage[v]:
                load[r] += 1
        return all(x <= c for x, c in zip(load, self.capacity))


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def is_independent(graph: ConflictGraph, members: Iterable[int],
                   limits: Optional[ResourceLimits] = None) -> bool:
    m = sorted(set(members))
    if m and graph.adjacency[np.ix_(m, m)].any():
        return False
    return limits is None or limits.fits(m)


def is_maximal(graph: ConflictGraph, members: Iterable[int],
               limits: Optional[ResourceLimits] = None) -> bool:
    m = set(members)
    for v in range(graph.tuple_count):
        if v not in m and is_independent(graph, m | {v}, limits):
            return False
    return True


def enumerate_maximal_is(graph: ConflictGraph, cap: int = DEFAULT_IS_CAP) -> List[frozenset]:
    """All maximal independent sets, via pivoting Bron-Kerbosch on the
    complement relation.  Sorted by their ascending member lists."""
    n = graph.tuple_count
    if n == 0:
        return [frozenset()]
    full = (1 << n) - 1
    compat = [full & ~(nb | (1 << v)) for v, nb in enumerate(graph.neighbor_masks)]
    found: List[int] = []

    stack = [(0, full, 0)]
    while stack:
        r, p, x = stack.pop()
        if not p:
            if not x:
                found.append(r)
                if len(found) > cap:
                    raise ISSpaceTooLarge(
                        f"more than {cap} maximal independent sets; use column generation"
                    )
            continue
        px = p | x
        pivot = max(_bits(px), key=lambda u: (compat[u] & p).bit_count())
        for v in _bits(p & ~compat[pivot]):
            bit = 1 << v
            stack.append((r | bit, p & compat[v], x & compat[v]))
            p &= ~bit
            x |= bit
    sets = [sorted(_bits(r)) for r in found]
    sets.sort()
    return [frozenset(s) for s in sets]


def greedy_extend(graph: ConflictGraph, members: Iterable[int],
                  limits: Optional[ResourceLimits] = None,
                  order: Optional[Sequence[int]] = None) -> List[int]:
    """Grow ``members`` to a maximal independent set, scanning ``order``
    (ascending index by default) and then every remaining vertex."""
    nb = graph.neighbor_masks
    chosen = sorted(set(members))
    blocked = 0
    load = [0] * len(limits.capacity) if limits else []
    for v in chosen:
        blocked |= nb[v] | (1 << v)
        if limits:
            for r in limits.usage[v]:
                load[r] += 1
    scan = list(order or []) + list(range(graph.tuple_count))
    for v in scan:
        if blocked >> v & 1:
            continue
        if limits and any(load[r] >= limits.capacity[r] for r in limits.usage[v]):
            continue
        chosen.append(v)
        blocked |= nb[v] | (1 << v)
        if limits:
            for r in limits.usage[v]:
                load[r] += 1
    return sorted(chosen)


def _clique_cover_bound(cand: Sequence[int], wl: Sequence[float], nb: List[int]) -> float:
    """Greedy clique partition of ``cand``; an IS takes at most one vertex per clique."""
    cliques: List[List[int]] = []  # [mask, best weight]
    for v in sorted(cand, key=lambda v: -wl[v]):
        for c in cliques:
            if c[0] & ~nb[v] == 0:
                c[0] |= 1 << v
                break
        else:
            cliques.append([1 << v, wl[v]])
    return sum(c[1] for c in cliques)


def _radio_bound(cand: Sequence[int], wl: Sequence[float], limits: ResourceLimits,
                 load: Sequence[int]) -> float:
    """Each vertex uses two resources, so half the per-resource top-k sums bound the IS."""
    per: Dict[int, List[float]] = {}
    for v in cand:
        for r in limits.usage[v]:
            per.setdefault(r, []).append(wl[v])
    total = 0.0
    for r, ws in per.items():
        k = limits.capacity[r] - load[r]
        if k < len(ws):
            ws.sort(reverse=True)
            ws = ws[:k]
        total += sum(ws)
    return total / 2.0


class _Found(Exception):
    pass


def max_weight_is(graph: ConflictGraph, weights: Sequence[float],
                  limits: Optional[ResourceLimits] = None,
                  tol: float = WEIGHT_TOL, labels: Optional[Sequence[int]] = None,
                  floor: Optional[float] = None,
                  node_limit: Optional[int] = None) -> PyTuple[frozenset, float]:
    """Exact maximum-weight independent set by branch and bound.

    Greedy-by-weight gives the incumbent; the bound is the current weight
    plus the weight of every remaining candidate, tightened by clique-cover
    and radio-budget bounds.  Zero-weight vertices are never selected, and
    among optimal sets the lexicographically smallest ascending member list
    wins.

    ``labels`` declares interchangeable vertex labels (channels): the graph,
    weights and limits must be invariant under relabelling, and vertices must
    be sorted by (link, label).  Only sets that introduce labels in order
    0, 1, 2, ... are searched, which loses no optimum value.

    With ``floor`` the search only decides whether some set beats it: the
    first such set is returned, and when none exists the greedy set is
    returned even if it is not optimal.
    ``node_limit`` caps the number of search nodes (SearchLimitExceeded).
    """
    n = graph.tuple_count
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got {w.shape}")
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    nb = graph.neighbor_masks
    wl = w.tolist()
    positive = [v for v in range(n) if wl[v] > 0]
    if not positive:
        return frozenset(), 0.0

    # greedy incumbent
    inc: List[int] = []
    blocked = 0
    load = [0] * len(limits.capacity) if limits else []
    for v in sorted(positive, key=lambda v: (-wl[v], v)):
        if blocked >> v & 1:
            continue
        if limits and any(load[r] >= limits.capacity[r] for r in limits.usage[v]):
            continue
        inc.append(v)
        blocked |= nb[v]
        if limits:
            for r in limits.usage[v]:
                load[r] += 1
    best_list = sorted(inc)
    best_w = sum(wl[v] for v in best_list)
    from_search = False
    if floor is not None:
        if best_w > floor + tol:
            return frozenset(best_list), float(best_w)
        best_w = floor
    lab = list(labels) if labels is not None else None
    visited = 0

    res_members = limits.members if limits else []
    caps = limits.capacity if limits else ()
    usage = limits.usage if limits else ()

    two_per_vertex = limits is not None and all(len(u) == 2 for u in usage)

    def pruned(weight: float, bound: float) -> bool:
        if floor is not None:
            return bound <= floor + tol
        return bound < best_w - tol or (from_search and bound <= best_w + tol)

    def search(chosen: List[int], weight: float, cand: List[int], load: List[int],
               maxlabel: int):
        nonlocal best_list, best_w, from_search, visited
        visited += 1
        if node_limit is not None and visited > node_limit:
            raise SearchLimitExceeded(f"max-weight IS search exceeded {node_limit} nodes")
        if floor is not None:
            if weight > floor + tol:
                best_list = list(chosen)
                raise _Found
        elif weight > best_w + tol or (weight >= best_w - tol and chosen < best_list):
            best_list, best_w, from_search = list(chosen), weight, True
        if len(cand) > 2:
            # tighter bounds on top of the running sum; all are valid upper bounds
            extra = _clique_cover_bound(cand, wl, nb)
            if two_per_vertex:
                extra = min(extra, _radio_bound(cand, wl, limits, load))
            if pruned(weight, weight + extra):
                return
        # suffix sums of candidate weights for the bound
        suffix = [0.0] * (len(cand) + 1)
        for i in range(len(cand) - 1, -1, -1):
            suffix[i] = suffix[i + 1] + wl[cand[i]]
        for i, v in enumerate(cand):
            if pruned(weight, weight + suffix[i]):
                return
            child_label = maxlabel
            if lab is not None:
                if lab[v] > maxlabel + 1:
                    continue
                child_label = max(maxlabel, lab[v])
            rest_mask = nb[v]
            new_load = load
            if limits:
                new_load = list(load)
                for r in usage[v]:
                    new_load[r] += 1
                    if new_load[r] >= caps[r]:
                        rest_mask |= res_members[r]
            nxt = [u for u in cand[i + 1:] if not rest_mask >> u & 1]
            chosen.append(v)
            search(chosen, weight + wl[v], nxt, new_load, child_label)
            chosen.pop()

    cand0 = positive
    if limits:
        cand0 = [v for v in positive if all(caps[r] >= 1 for r in usage[v])]
    try:
        search([], 0.0, cand0, [0] * len(caps), -1)
    except _Found:
        pass
    return frozenset(best_list), float(sum(wl[v] for v in best_list))


def edge_clique_cover(graph: ConflictGraph) -> List[List[int]]:
    """Cliques (size >= 2) covering every edge, grown greedily from uncovered edges."""
    nb = graph.neighbor_masks
    covered = [0] * graph.tuple_count
    cliques = []
    for i, j in graph.edges():
        if covered[i] >> j & 1:
            continue
        clique = [i, j]
        common = nb[i] & nb[j]
        while common:
            # prefer the candidate that covers the most still-uncovered edges
            cand = list(_bits(common))
            v = max(cand, key=lambda u: (sum(1 for c in clique if not covered[c] >> u & 1), -u))
            clique.append(v)
            common &= nb[v]
        for a in clique:
            for b in clique:
                covered[a] |= 1 << b
        cliques.append(sorted(clique))
    return cliques


def max_weight_is_milp(graph: ConflictGraph, weights: Sequence[float],
                       limits: Optional[ResourceLimits] = None,
                       time_limit: float = 120.0) -> PyTuple[frozenset, float]:
    """Exact maximum-weight independent set as a 0/1 program solved by HiGHS.

    Used when branch and bound runs out of budget.  Ties are not broken
    lexicographically.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp
    import scipy.sparse as sp

    n = graph.tuple_count
    w = np.asarray(weights, dtype=float)
    if n == 0 or not (w > 0).any():
        return frozenset(), 0.0
    rows, cols, ub = [], [], []
    for clique in edge_clique_cover(graph):
        rows += [len(ub)] * len(clique)
        cols += clique
        ub.append(1.0)
    if limits:
        for r, mask in enumerate(limits.members):
            vs = list(_bits(mask))
            if len(vs) > limits.capacity[r]:
                rows += [len(ub)] * len(vs)
                cols += vs
                ub.append(float(limits.capacity[r]))
    kwargs = {}
    if ub:
        A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ub), n))
        kwargs["constraints"] = LinearConstraint(A, -np.inf, ub)
    res = milp(-w, integrality=np.ones(n), bounds=Bounds(0, np.where(w > 0, 1.0, 0.0)),
               options={"time_limit": time_limit, "mip_rel_gap": 0.0}, **kwargs)
    if res.status != 0 or res.x is None:
        raise SearchLimitExceeded(f"MILP pricing did not finish: {res.message}")
    members = frozenset(int(v) for v in np.nonzero(res.x > 0.5)[0])
    if not is_independent(graph, members, limits):
        raise SearchLimitExceeded("MILP pricing returned a dependent set")
    return members, float(w[list(members)].sum())
