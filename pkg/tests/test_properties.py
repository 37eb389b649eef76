"""Property tests for the invariants of each module."""

import itertools
import json

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from oracles import dense_two_stage, maximal_independent_sets

from mrmc.conflict import (
    ConflictGraph,
    build_mdcg,
    conflicts,
    enumerate_maximal_is,
    is_independent,
    is_maximal,
    max_weight_is,
)
from mrmc.energy import energy_efficiency, transmission_energy
from mrmc.lp import SchedulePlan, Strategy, TwoStageSolver
from mrmc.model import (
    Commodity,
    NodeSpec,
    Topology,
    TotalFixed,
    all_reachable,
    enumerate_tuples,
    shortest_path_hops,
    topology_from_dict,
    topology_to_dict,
)
from mrmc.sweep import CrConfig, relaxation_sweep, run_config
from mrmc.validate import check_plan

SETTINGS = settings(max_examples=25, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])


@st.composite
def topologies(draw, max_nodes=6, max_radios=2, max_channels=2, reachable=False):
    n = draw(st.integers(3, max_nodes))
    coords = draw(st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60)),
                           min_size=n, max_size=n, unique=True))
    radios = draw(st.integers(1, max_radios))
    nodes = [NodeSpec(f"n{i}", 10.0 * x, 10.0 * y, radios) for i, (x, y) in enumerate(coords)]
    k = draw(st.integers(1, min(2, n // 2)))
    ends = draw(st.permutations(range(n)))[:2 * k]
    comms = [Commodity(f"n{ends[2 * i]}", f"n{ends[2 * i + 1]}", 1.0) for i in range(k)]
    topo = Topology(nodes, draw(st.integers(1, max_channels)), 250.0, 500.0, comms)
    if reachable:
        assume(all_reachable(topo))
    return topo


@st.composite
def graphs(draw, max_n=10):
    n = draw(st.integers(0, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    edges = [p for p, keep in zip(pairs, draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))) if keep]
    return ConflictGraph.from_edges(n, edges)


def keyset(tuples):
    return {(t.tx, t.rx, t.tx_radio, t.rx_radio, t.channel) for t in tuples}


# ---------------------------------------------------------------- model

@SETTINGS
@given(topologies(max_radios=3, max_channels=3))
def test_tuples_per_link(topo):
    per_link = {}
    for t in enumerate_tuples(topo):
        per_link[(t.tx, t.rx)] = per_link.get((t.tx, t.rx), 0) + 1
    for (u, v), count in per_link.items():
        assert count == topo.nodes[u].radios * topo.nodes[v].radios * topo.channels


@SETTINGS
@given(topologies())
def test_more_channels_contains_fewer(topo):
    small = keyset(enumerate_tuples(topo))
    assume(small)
    big = keyset(enumerate_tuples(topo.with_config(topo.channels + 1, topo.nodes[0].radios)))
    assert small < big


@SETTINGS
@given(topologies(reachable=True), st.randoms(use_true_random=False), st.sampled_from([1.0, 2.0, 0.5]))
def test_hops_invariant_under_relabel_and_scale(topo, rnd, scale):
    order = list(range(len(topo.nodes)))
    rnd.shuffle(order)
    names = {n.id: f"m{order[i]}" for i, n in enumerate(topo.nodes)}
    nodes = [NodeSpec(names[n.id], n.x * scale, n.y * scale, n.radios) for n in topo.nodes]
    comms = [Commodity(names[c.source], names[c.destination], c.demand) for c in topo.commodities]
    moved = Topology(nodes[::-1], topo.channels, topo.comm_range * scale,
                     topo.interference_range * scale, comms)
    for a, b in zip(topo.commodities, moved.commodities):
        assert shortest_path_hops(topo, a) == shortest_path_hops(moved, b)


@SETTINGS
@given(topologies(max_channels=4), st.floats(0.5, 10.0))
def test_total_fixed_capacity(topo, total):
    from dataclasses import replace
    split = replace(topo, bandwidth_mode=TotalFixed(total))
    for t in enumerate_tuples(split):
        assert t.capacity * split.channels == pytest.approx(total)


@SETTINGS
@given(topologies())
def test_json_round_trip(topo):
    assert topology_from_dict(json.loads(json.dumps(topology_to_dict(topo)))) == topo


# ---------------------------------------------------------------- conflict

@SETTINGS
@given(topologies())
def test_conflicts_symmetric_and_graph_consistent(topo):
    tuples = enumerate_tuples(topo)
    graph = build_mdcg(tuples, topo)
    for i, j in itertools.combinations(range(len(tuples)), 2):
        c = conflicts(tuples[i], tuples[j], topo)
        assert c == conflicts(tuples[j], tuples[i], topo) == graph.adjacent(i, j)


@SETTINGS
@given(graphs())
def test_maximal_sets_valid_and_complete(graph):
    sets = enumerate_maximal_is(graph)
    assert all(is_independent(graph, s) and is_maximal(graph, s) for s in sets)
    assert sorted(tuple(sorted(s)) for s in sets) == maximal_independent_sets(graph.tuple_count, graph.edges())


@SETTINGS
@given(graphs(), st.data())
def test_max_weight_dominates_maximal_sets(graph, data):
    w = data.draw(st.lists(st.integers(0, 9).map(float), min_size=graph.tuple_count,
                           max_size=graph.tuple_count))
    members, value = max_weight_is(graph, w)
    assert is_independent(graph, members)
    assert value == pytest.approx(sum(w[i] for i in members))
    best = max((sum(w[i] for i in s) for s in enumerate_maximal_is(graph)), default=0.0)
    assert value == pytest.approx(best)


@SETTINGS
@given(topologies())
def test_independent_sets_use_distinct_radios(topo):
    tuples = enumerate_tuples(topo)
    for s in enumerate_maximal_is(build_mdcg(tuples, topo)):
        ends = [e for i in s for e in tuples[i].endpoints]
        assert len(ends) == len(set(ends))


# ---------------------------------------------------------------- lp / energy

def solved(topo, strategy=Strategy.COLGEN):
    tuples = enumerate_tuples(topo)
    graph = build_mdcg(tuples, topo)
    solver = TwoStageSolver(tuples, graph, topo, strategy)
    f = solver.solve_capacity()
    plan, energy = solver.solve_min_energy(f)
    return tuples, graph, f, plan, energy


@SETTINGS
@given(topologies(reachable=True))
def test_plans_valid_and_strategies_agree(topo):
    tuples, graph, f, plan, energy = solved(topo, Strategy.FULL)
    _, _, f2, plan2, energy2 = solved(topo, Strategy.COLGEN)
    assert check_plan(plan, tuples, topo).ok and check_plan(plan2, tuples, topo).ok
    assert f2 == pytest.approx(f, rel=1e-6, abs=1e-9)
    assert energy2 == pytest.approx(energy, rel=1e-6, abs=1e-9)


@SETTINGS
@given(topologies(reachable=True))
def test_matches_dense_oracle(topo):
    tuples, graph, f, _, energy = solved(topo, Strategy.FULL)
    cap, e_ref = dense_two_stage(topo, tuples, enumerate_maximal_is(graph))
    assert f == pytest.approx(cap, rel=1e-6, abs=1e-9)
    assert energy == pytest.approx(e_ref, rel=1e-6, abs=1e-9)


@SETTINGS
@given(topologies(reachable=True, max_radios=1, max_channels=1))
def test_capacity_monotone(topo):
    caps = {(c, r): run_config(topo, CrConfig(c, r), keep_plan=False).capacity
            for c in (1, 2, 3) for r in (1, 2)}
    for (c, r), v in caps.items():
        if (c + 1, r) in caps:
            assert caps[(c + 1, r)] >= v - 1e-7
        if (c, r + 1) in caps:
            assert caps[(c, r + 1)] >= v - 1e-7


@SETTINGS
@given(topologies(reachable=True))
def test_energy_invariants(topo):
    tuples, _, f, plan, _ = solved(topo)
    busy = sum(2 * a * len(s) for s, a in plan.active_sets)
    assert busy <= topo.total_radios + 1e-9
    rep = energy_efficiency(plan, tuples, topo)
    assert rep.e_sleep >= 0
    assert rep.efficiency <= rep.upper_bound + 1e-9
    assert rep.efficiency_fraction <= 1 + 1e-6
    scaled = SchedulePlan(plan.active_sets, 2.5 * plan.tuple_flows, plan.lam)
    assert transmission_energy(scaled, tuples) == pytest.approx(2.5 * rep.e_transmission)
    # common fraction for all commodities
    idx = topo.node_index
    for k, c in enumerate(topo.commodities):
        s = idx[c.source]
        out = sum(plan.tuple_flows[p, k] for p, t in enumerate(tuples) if t.tx == s)
        assert out == pytest.approx(plan.lam * c.demand, abs=1e-7)


# ---------------------------------------------------------------- sweep

@SETTINGS
@given(topologies(reachable=True))
def test_relaxation_properties(topo):
    cfg = CrConfig(topo.channels, topo.nodes[0].radios)
    rhos = [0.2, 0.4, 0.6, 0.8, 1.0]
    points = relaxation_sweep(topo, cfg, rhos)
    E = [rep.e_transmission for _, rep in points]
    assert all(b >= a - 1e-9 for a, b in zip(E, E[1:]))
    for a, b, c in zip(E, E[1:], E[2:]):
        assert b <= (a + c) / 2 + 1e-6
    assert points[-1][1] == run_config(topo, cfg).report


@SETTINGS
@given(topologies(reachable=True))
def test_run_config_deterministic(topo):
    a = run_config(topo, None)
    b = run_config(topo, None)
    assert a.capacity == b.capacity and a.report == b.report
    assert np.array_equal(a.plan.tuple_flows, b.plan.tuple_flows)
