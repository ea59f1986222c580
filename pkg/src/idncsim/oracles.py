"""Exhaustive reference implementations used by the tests and ``idncsim selftest``.

Nothing here shares search logic with the production paths: Wants families
come from scanning all subsets, cliques from scanning all vertex subsets, and
the best deadline-constrained code from scanning every XOR combination a
transmitter could send.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .graph import LocalGraph, Vertex, max_weight_clique, tie_tolerance
from .model import ChannelModel, PacketUniverse, make_scenario
from .policies import PolicyConfig, propose_code
from .wants import enumerate_wants_family


def subsets(items):
    items = sorted(items)
    for k in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, k))


def brute_force_wants(column, has, lacks, d_cons):
    """Minimal subsets W of lacks with fsum(r over lacks minus W) <= d_cons."""
    ok = [w for w in subsets(lacks)
          if math.fsum(column[m] for m in lacks if m not in w) <= d_cons]
    minimal = [w for w in ok if not any(o < w for o in ok)]
    return sorted(minimal, key=lambda s: (len(s), sorted(s)))


def brute_force_clique(graph):
    """(weight, indices) of the lexicographically first near-optimal clique."""
    V = len(graph.vertices)
    if V == 0:
        return None
    w = graph.weights()
    cliques = []
    for mask in range(1, 1 << V):
        idx = tuple(i for i in range(V) if mask >> i & 1)
        if graph.is_clique(idx):
            cliques.append((sum(w[i] for i in idx), idx))
    best = max(c[0] for c in cliques)
    floor = best - tie_tolerance(best)
    return min((c for c in cliques if c[0] >= floor), key=lambda c: c[1])


def expected_distortion_norm(state, transmitter, coded, p):
    """p-norm of the expected distortion vector after one broadcast of ``coded``."""
    total = []
    for dev in state.devices:
        d = dev.distortion
        n = dev.device_id
        if n != transmitter:
            unknown = dev.lacks & coded
            if len(unknown) == 1:
                r = state.universe.column(n)[next(iter(unknown))]
                eps = state.channel.eps(transmitter, n)
                d = eps * d + (1 - eps) * (d - r)
        total.append(d ** p)
    return math.fsum(total) ** (1.0 / p)


def brute_force_best_code(state, p):
    """Smallest expected-distortion norm over every code any device can send."""
    best = math.inf
    for t, dev in enumerate(state.devices):
        for coded in subsets(dev.has):
            if coded:
                best = min(best, expected_distortion_norm(state, t, coded, p))
    return best


# random instances

def random_graph(rng, n_vertices, density=None):
    density = rng.uniform(0.1, 0.9) if density is None else density
    weights = rng.choice([rng.uniform(0, 10, n_vertices), rng.integers(0, 4, n_vertices).astype(float)])
    verts = [Vertex(0, i, i, float(weights[i])) for i in range(n_vertices)]
    edges = [(i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)
             if rng.random() < density]
    return LocalGraph.from_edges(0, verts, edges)


def random_scenario(rng, n_devices, n_packets, eps_high=0.9, integer_importance=False):
    """Random valid post-setup scenario (every packet held by some, missed by some)."""
    N, M = n_devices, n_packets
    if integer_importance:
        imp = rng.integers(0, 6, size=(M, N)).astype(float)
    else:
        imp = rng.gamma(0.5, 2.0, size=(M, N))
    universe = PacketUniverse.create(imp)
    has = [set() for _ in range(N)]
    for m in range(M):
        holders = rng.random(N) < rng.uniform(0.2, 0.8)
        if holders.all():
            holders[rng.integers(N)] = False
        if not holders.any():
            holders[rng.integers(N)] = True
        for n in np.flatnonzero(holders):
            has[n].add(m)
    channel = ChannelModel(rng.uniform(0, eps_high, size=(N, N)), np.zeros(N))
    return make_scenario(universe, channel, has)


# suites

def check_wants_suite(rng, instances=500, max_lacks=12):
    mismatches = 0
    for _ in range(instances):
        M = int(rng.integers(1, max_lacks + 1))
        col = rng.choice([rng.gamma(0.5, 2.0, M), rng.integers(0, 5, M).astype(float)]).tolist()
        col = [float(x) for x in col]
        universe = PacketUniverse.create(np.array(col).reshape(M, 1).repeat(2, axis=1))
        has = set()
        lacks = set(range(M))
        total = math.fsum(col)
        d_cons = float(rng.choice([0.0, rng.uniform(0, total), total * rng.integers(0, 3) / 4]))
        state = make_scenario(universe, ChannelModel.uniform(2), [has, set(range(M))])
        got = enumerate_wants_family(state, 0, d_cons)
        want = brute_force_wants(col, has, lacks, d_cons)
        mismatches += list(got.sets) != want
    return mismatches


def check_clique_suite(rng, instances=500, max_vertices=16):
    mismatches = 0
    for _ in range(instances):
        g = random_graph(rng, int(rng.integers(1, max_vertices + 1)))
        sel = max_weight_clique(g)
        ref = brute_force_clique(g)
        got_idx = tuple(sorted(g.vertices.index(v) for v in sel.vertices))
        mismatches += got_idx != ref[1] or abs(sel.total_weight - ref[0]) > tie_tolerance(ref[0])
    return mismatches


def check_p2_suite(rng, instances=200, max_vertices=8, p=2.0):
    from .policies import local_graphs

    mismatches = done = 0
    while done < instances:
        state = random_scenario(rng, int(rng.integers(2, 5)), int(rng.integers(1, 5)))
        policy = PolicyConfig("P2", p=p, t_cons=1)
        if sum(len(g) for g in local_graphs(policy, state)) > max_vertices:
            continue
        done += 1
        sel = propose_code(policy, state)
        got = expected_distortion_norm(state, sel.transmitter, sel.coded_packets, p)
        ref = brute_force_best_code(state, p)
        mismatches += abs(got - ref) > 1e-9 * max(1.0, ref)
    return mismatches


SUITES = {
    "wants-enumeration": check_wants_suite,
    "max-weight-clique": check_clique_suite,
    "p2-one-step": check_p2_suite,
}


def run_selftest(seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    sizes = {"wants-enumeration": 500, "max-weight-clique": 500, "p2-one-step": 200}
    return {name: (max(1, int(sizes[name] * scale)), fn(rng, max(1, int(sizes[name] * scale))))
            for name, fn in SUITES.items()}
