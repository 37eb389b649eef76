"""Independent reference implementations used to check the library.

Nothing here imports the library's conflict, LP or energy code; only the
plain data types are shared.
"""

import itertools
import math

import networkx as nx
import numpy as np
from scipy.optimize import linprog


def in_range(topo, u, v, radius):
    a, b = topo.nodes[u], topo.nodes[v]
    return math.dist((a.x, a.y), (b.x, b.y)) <= radius


def tuple_space(topo):
    """All tuples by brute force over node pairs, radios and channels."""
    idx = {n.id: i for i, n in enumerate(topo.nodes)}
    srcs = {idx[c.source] for c in topo.commodities}
    dsts = {idx[c.destination] for c in topo.commodities}
    out = []
    for u, v in itertools.permutations(range(len(topo.nodes)), 2):
        if not in_range(topo, u, v, topo.comm_range):
            continue
        if not topo.allow_endpoint_relay and (u in dsts or v in srcs):
            continue
        for ru in range(topo.nodes[u].radios):
            for rv in range(topo.nodes[v].radios):
                for ch in range(topo.channels):
                    out.append((u, v, ru, rv, ch))
    return sorted(out)


def conflict(topo, a, b):
    """Pairwise rule straight from the definitions."""
    ends_a = {(a[0], a[2]), (a[1], a[3])}
    ends_b = {(b[0], b[2]), (b[1], b[3])}
    if ends_a & ends_b:
        return True
    if a[4] != b[4]:
        return False
    r = topo.interference_range
    hit_ab = any(in_range(topo, b[0], n, r) for n in (a[0], a[1]))
    hit_ba = any(in_range(topo, a[0], n, r) for n in (b[0], b[1]))
    return hit_ab or hit_ba


def conflict_edges(topo, tuples):
    keys = [(t.tx, t.rx, t.tx_radio, t.rx_radio, t.channel) for t in tuples]
    return {
        (i, j)
        for i, j in itertools.combinations(range(len(keys)), 2)
        if conflict(topo, keys[i], keys[j])
    }


def maximal_independent_sets(n, edges):
    """Maximal cliques of the complement graph."""
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    comp = nx.complement(g)
    # the empty set is the only maximal independent set of the empty graph
    return sorted(tuple(sorted(c)) for c in nx.find_cliques(comp)) if n else [()]


def brute_force_mwis(n, edges, weights):
    best, best_w = (), 0.0
    for r in range(1, n + 1):
        for sub in itertools.combinations(range(n), r):
            if any((a, b) in edges or (b, a) in edges for a, b in itertools.combinations(sub, 2)):
                continue
            w = sum(weights[i] for i in sub)
            if w > best_w + 1e-12:
                best, best_w = sub, w
    return best, best_w


def dense_two_stage(topo, tuples, columns, stage2_target=None):
    """Capacity and minimum transmission energy from a dense LP over all columns.

    Written from the model description with its own variable layout and
    solved by scipy's interior-point code, independent of the library LP.
    """
    idx = {n.id: i for i, n in enumerate(topo.nodes)}
    comms = [(idx[c.source], idx[c.destination], c.demand) for c in topo.commodities]
    P, K, M, N = len(tuples), len(comms), len(columns), len(topo.nodes)
    nv = P * K + M + 1
    lam = nv - 1

    def fv(p, k):
        return p * K + k

    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
    for k, (s, d, dem) in enumerate(comms):
        for u in range(N):
            row = np.zeros(nv)
            for p, t in enumerate(tuples):
                if t.tx == u:
                    row[fv(p, k)] += 1
                if t.rx == u:
                    row[fv(p, k)] -= 1
            if u == s:
                row[lam] -= dem
            elif u == d:
                row[lam] += dem
            eq_rows.append(row)
            eq_rhs.append(0.0)
        # a commodity cannot re-enter its source or leave its destination
        for p, t in enumerate(tuples):
            if t.rx == s or t.tx == d:
                row = np.zeros(nv)
                row[fv(p, k)] = 1
                eq_rows.append(row)
                eq_rhs.append(0.0)
    row = np.zeros(nv)
    row[P * K:P * K + M] = 1
    ub_rows.append(row)
    ub_rhs.append(1.0)
    for p, t in enumerate(tuples):
        row = np.zeros(nv)
        for k in range(K):
            row[fv(p, k)] = 1.0 / t.capacity
        for m, col in enumerate(columns):
            if p in col:
                row[P * K + m] = -1.0
        ub_rows.append(row)
        ub_rhs.append(0.0)
    bounds = [(0, None)] * (P * K) + [(0, 1)] * M + [(0, None)]
    total = sum(d for _, _, d in comms)

    c1 = np.zeros(nv)
    c1[lam] = -total
    r1 = linprog(c1, A_ub=np.array(ub_rows), b_ub=ub_rhs, A_eq=np.array(eq_rows), b_eq=eq_rhs,
                 bounds=bounds, method="highs-ipm")
    assert r1.status == 0, r1.message
    cap = -r1.fun

    target = cap if stage2_target is None else stage2_target
    c2 = np.zeros(nv)
    for p, t in enumerate(tuples):
        for k in range(K):
            c2[fv(p, k)] = t.e_tx + t.e_rx
    row = np.zeros(nv)
    row[lam] = total
    r2 = linprog(c2, A_ub=np.array(ub_rows), b_ub=ub_rhs,
                 A_eq=np.array(eq_rows + [row]), b_eq=eq_rhs + [target * (1 - 1e-10)],
                 bounds=bounds, method="highs-ipm")
    assert r2.status == 0, r2.message
    return cap, r2.fun


def bfs_hops(adj, s, d):
    dist = {s: 0}
    frontier = [s]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj.get(u, ()):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist.get(d)


def vertex_enumeration_lp(c, A, b):
    """max c.x s.t. A x <= b, x >= 0 by checking every basic solution."""
    m, n = A.shape
    G = np.vstack([A, -np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    best = -math.inf
    for rows in itertools.combinations(range(m + n), n):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, h[list(rows)])
        if (G @ x <= h + 1e-9).all():
            best = max(best, float(c @ x))
    return best
