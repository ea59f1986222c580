import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idncsim import (CapacityError, InvalidArgument, LocalGraph, Vertex, build_local_graph,
                     max_weight_clique, select_global)
from idncsim.graph import check_instant_decodability
from idncsim.oracles import brute_force_clique, random_graph, random_scenario

from conftest import exchange_scenario, pkts

A, B, C = 0, 1, 2


def lacks_of(state):
    return [d.lacks for d in state.devices]


def keys(graph):
    return [(v.target, v.packet) for v in graph.vertices]


def test_exchange_local_graph_of_a(exchange):
    g = build_local_graph(exchange, A, lacks_of(exchange))
    assert keys(g) == [(B, 1), (C, 2), (C, 3)]
    # (B,p2)-(C,p3): p2 in H_C and p3 in H_B
    assert g.has_edge(0, 1)
    # (B,p2)-(C,p4): p2 in H_C and p4 in H_B, so also adjacent
    assert g.has_edge(0, 2)
    # same target never adjacent
    assert not g.has_edge(1, 2)


def test_same_packet_rule():
    s = random_scenario(np.random.default_rng(0), 3, 1)
    # with one packet, every vertex carries it, so all vertices are pairwise adjacent
    for t in range(3):
        g = build_local_graph(s, t, lacks_of(s))
        assert g.is_clique(range(len(g)))


def test_no_lacked_packet_gives_empty_graph(exchange):
    elig = [set(), set(), set()]
    assert len(build_local_graph(exchange, A, elig)) == 0
    assert max_weight_clique(build_local_graph(exchange, A, elig)) is None


def test_eligibility_must_be_lacked(exchange):
    with pytest.raises(InvalidArgument):
        build_local_graph(exchange, A, [set(), pkts(1), set()])


def test_exchange_max_clique_of_a(exchange):
    sel = max_weight_clique(build_local_graph(exchange, A, lacks_of(exchange)))
    assert sel.coded_packets == pkts(2, 3)
    assert sel.targets == {B: 1, C: 2}
    assert sel.total_weight == 2


def test_single_vertex_graph():
    g = LocalGraph.from_edges(4, [Vertex(4, 1, 7, 2.5)], [])
    sel = max_weight_clique(g)
    assert sel.coded_packets == {7} and sel.targets == {1: 7} and sel.total_weight == 2.5


def test_select_global_exchange_tie_goes_to_lowest_transmitter(exchange):
    graphs = [build_local_graph(exchange, t, lacks_of(exchange)) for t in range(3)]
    per_t = [max_weight_clique(g) for g in graphs]
    assert [s.total_weight for s in per_t] == [2, 2, 2]
    assert set(per_t[B].targets) == {A, C} and 0 in per_t[B].coded_packets
    best = select_global(graphs)
    assert best.transmitter == A and best.coded_packets == pkts(2, 3)


def test_select_global_empty_and_single():
    empty = LocalGraph.from_edges(0, [], [])
    assert select_global([empty, LocalGraph.from_edges(1, [], [])]) is None
    g = LocalGraph.from_edges(2, [Vertex(2, 0, 0, 1.0), Vertex(2, 1, 0, 1.0)], [(0, 1)])
    assert select_global([empty, g]).total_weight == 2.0


def test_capacity_error_and_greedy_escape():
    verts = [Vertex(0, i, i, 1.0) for i in range(70)]
    g = LocalGraph.from_edges(0, verts, [(i, i + 1) for i in range(69)])
    with pytest.raises(CapacityError, match="greedy"):
        max_weight_clique(g)
    assert max_weight_clique(g, greedy=True).total_weight == 2.0


def test_dump_round_trip(exchange):
    g = build_local_graph(exchange, B, lacks_of(exchange), weight=lambda t, n, m: 0.5 + n + m)
    text = g.dump()
    assert text.splitlines()[1] == "v 1 0 0 0.5"
    assert LocalGraph.parse(text) == g


def test_exhaustive_tie_breaking():
    # two cliques of weight 2: {0,1} and {2}; the lexicographically smaller wins
    verts = [Vertex(0, i, i, w) for i, w in enumerate([1.0, 1.0, 2.0])]
    g = LocalGraph.from_edges(0, verts, [(0, 1)])
    assert max_weight_clique(g).vertex_keys == ((0, 0, 0), (0, 1, 1))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 14), st.integers(0, 2**32 - 1))
def test_solver_matches_exhaustive_search(n_vertices, seed):
    g = random_graph(np.random.default_rng(seed), n_vertices)
    sel = max_weight_clique(g)
    weight, idx = brute_force_clique(g)
    assert tuple(sorted(g.vertices.index(v) for v in sel.vertices)) == idx
    assert sel.total_weight == pytest.approx(weight, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 14), st.integers(0, 2**32 - 1))
def test_greedy_valid_and_not_better_than_exact(n_vertices, seed):
    g = random_graph(np.random.default_rng(seed), n_vertices)
    greedy = max_weight_clique(g, greedy=True)
    idx = [g.vertices.index(v) for v in greedy.vertices]
    assert g.is_clique(idx)
    assert greedy.total_weight <= max_weight_clique(g).total_weight + 1e-9


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_cliques_are_instantly_decodable(n, m, seed):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, n, m)
    for t in range(n):
        g = build_local_graph(s, t, lacks_of(s), weight=lambda *_: float(rng.uniform(0.1, 1)))
        # each target appears at most once in any clique: same-target vertices are never adjacent
        for i, j in g.edges():
            assert g.vertices[i].target != g.vertices[j].target
        sel = max_weight_clique(g)
        if sel is not None:
            check_instant_decodability(s, sel)
            assert sel.coded_packets <= s.devices[t].has
