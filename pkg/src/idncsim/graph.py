"""IDNC local graphs and maximum-weight clique selection.

Vertex (t, n, m) means "transmitter t can serve packet m to device n". Two
vertices are adjacent when they carry the same packet, or when each target
already holds the other's packet; every clique is then an XOR code that is
instantly decodable for all of its targets.

Adjacency is stored as one int bitmask per vertex.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import CapacityError, InvalidArgument, InvariantViolation

MAX_EXACT_VERTICES = 64


class Vertex(NamedTuple):
    transmitter: int
    target: int
    packet: int
    weight: float

    @property
    def key(self):
        return (self.transmitter, self.target, self.packet)


@dataclass(frozen=True)
class LocalGraph:
    transmitter: int
    vertices: tuple
    adjacency: tuple  # adjacency[i]: bitmask of neighbours of vertex i

    def __len__(self):
        return len(self.vertices)

    def has_edge(self, i, j):
        return bool(self.adjacency[i] >> j & 1)

    def edges(self):
        for i, mask in enumerate(self.adjacency):
            for j in range(i + 1, len(self.vertices)):
                if mask >> j & 1:
                    yield i, j

    def weights(self):
        return [v.weight for v in self.vertices]

    def with_weights(self, weights):
        weights = list(weights)
        if len(weights) != len(self.vertices):
            raise InvalidArgument("one weight per vertex")
        return LocalGraph(self.transmitter,
                          tuple(v._replace(weight=float(w)) for v, w in zip(self.vertices, weights)),
                          self.adjacency)

    def is_clique(self, indices):
        indices = list(indices)
        return all(self.has_edge(a, b) for k, a in enumerate(indices) for b in indices[k + 1:])

    def dump(self):
        """Plain-text listing: one ``t n m weight`` line per vertex, then edges."""
        lines = [f"# local graph t={self.transmitter} vertices={len(self.vertices)}"]
        lines += [f"v {v.transmitter} {v.target} {v.packet} {v.weight!r}" for v in self.vertices]
        lines += [f"e {i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text):
        verts, edges = [], []
        for line in text.splitlines():
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append(Vertex(int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])))
            elif parts[0] == "e":
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise InvalidArgument(f"unrecognised graph dump line: {line!r}")
        transmitters = {v.transmitter for v in verts}
        if len(transmitters) > 1:
            raise InvalidArgument("a local graph has a single transmitter")
        return cls.from_edges(transmitters.pop() if transmitters else 0, verts, edges)

    @classmethod
    def from_edges(cls, transmitter, vertices, edges):
        adj = [0] * len(vertices)
        for i, j in edges:
            if i == j:
                raise InvalidArgument("self loops are not allowed")
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return cls(transmitter, tuple(vertices), tuple(adj))


@dataclass(frozen=True)
class CodeSelection:
    transmitter: int
    coded_packets: frozenset
    targets: dict  # device -> packet it decodes
    total_weight: float
    vertices: tuple = ()

    @property
    def vertex_keys(self):
        return tuple(sorted(v.key for v in self.vertices))


def build_local_graph(state, transmitter, eligibility, weight=None):
    """Local graph of ``transmitter``.

    ``eligibility[n]`` holds the packets device n may be served (a subset of
    its Lacks set); ``weight(t, n, m)`` gives vertex weights (default 1).
    """
    devices = state.devices
    held = devices[transmitter].has
    verts = []
    for n, dev in enumerate(devices):
        if n == transmitter:
            continue
        wanted = eligibility[n]
        if not wanted <= dev.lacks:
            raise InvalidArgument(f"eligible packets of device {n} are not all lacked")
        for m in sorted(wanted & held):
            w = 1.0 if weight is None else float(weight(transmitter, n, m))
            verts.append(Vertex(transmitter, n, m, w))

    by_packet = {}
    target_holds = {}  # packet m -> vertices whose target holds m
    for i, v in enumerate(verts):
        by_packet[v.packet] = by_packet.get(v.packet, 0) | (1 << i)
    for m in by_packet:
        mask = 0
        for i, v in enumerate(verts):
            if m in devices[v.target].has:
                mask |= 1 << i
        target_holds[m] = mask
    held_by_target = {}
    adj = []
    for i, v in enumerate(verts):
        pin = held_by_target.get(v.target)
        if pin is None:
            tgt_has = devices[v.target].has
            pin = 0
            for m, mask in by_packet.items():
                if m in tgt_has:
                    pin |= mask
            held_by_target[v.target] = pin
        adj.append((by_packet[v.packet] | (target_holds[v.packet] & pin)) & ~(1 << i))
    return LocalGraph(transmitter, tuple(verts), tuple(adj))


def _color_classes(graph, order):
    """Greedy partition into independent sets (a clique meets each at most once)."""
    classes = []
    for i in order:
        for c in classes:
            if not graph.adjacency[i] & c[0]:
                c[0] |= 1 << i
                c[1].append(i)
                break
        else:
            classes.append([1 << i, [i]])
    return [members for _, members in classes]


class _CliqueSearch:
    """Depth-first clique search over index tuples in lexicographic order.

    Branches are bounded by summing, over a greedy colouring, the heaviest
    candidate of each colour class.
    """

    def __init__(self, graph, weights):
        self.weights = weights
        self.adj = graph.adjacency
        V = len(weights)
        order = sorted(range(V), key=lambda i: (-weights[i], i))
        self.classes = _color_classes(graph, order)
        self.higher = [~((2 << i) - 1) for i in range(V)]
        self.full = (1 << V) - 1

    def bound(self, cand):
        total = 0.0
        w = self.weights
        for members in self.classes:
            for i in members:
                if cand >> i & 1:
                    total += w[i]
                    break
        return total

    def optimum(self):
        best = [-1.0]
        w, adj, higher, bound = self.weights, self.adj, self.higher, self.bound

        def rec(cur, cand):
            while cand:
                if cur + bound(cand) <= best[0]:
                    return
                low = cand & -cand
                i = low.bit_length() - 1
                cand ^= low
                nw = cur + w[i]
                if nw > best[0]:
                    best[0] = nw
                rec(nw, cand & adj[i] & higher[i])

        rec(0.0, self.full)
        return best[0]

    def first_reaching(self, floor):
        w, adj, higher, bound = self.weights, self.adj, self.higher, self.bound
        clique = []

        def rec(cur, cand):
            while cand:
                if cur + bound(cand) < floor:
                    return None
                low = cand & -cand
                i = low.bit_length() - 1
                cand ^= low
                nw = cur + w[i]
                clique.append(i)
                if nw >= floor:
                    return nw, tuple(clique)
                hit = rec(nw, cand & adj[i] & higher[i])
                if hit is not None:
                    return hit
                clique.pop()
            return None

        return rec(0.0, self.full)


def tie_tolerance(value):
    # relative, so the chosen clique does not change when all weights are rescaled
    return 1e-9 * abs(value)


def _exact_clique(graph):
    weights = graph.weights()
    if any(w < 0 for w in weights):
        raise InvalidArgument("vertex weights must be non-negative")
    search = _CliqueSearch(graph, weights)
    w_star = search.optimum()
    hit = search.first_reaching(w_star - tie_tolerance(w_star))
    if hit is None:
        raise InvariantViolation("clique search lost the optimum")
    return hit


def _greedy_clique(graph):
    weights = graph.weights()
    chosen = []
    cand = (1 << len(weights)) - 1
    while cand:
        i = max((i for i in range(len(weights)) if cand >> i & 1), key=lambda i: (weights[i], -i))
        chosen.append(i)
        cand &= graph.adjacency[i]
    chosen.sort()
    return sum(weights[i] for i in chosen), tuple(chosen)


def selection_from_clique(graph, indices, total=None):
    verts = tuple(graph.vertices[i] for i in indices)
    targets = {}
    for v in verts:
        if v.target in targets:
            raise InvariantViolation(f"device {v.target} targeted twice in one clique")
        targets[v.target] = v.packet
    if total is None:
        total = sum(v.weight for v in verts)
    return CodeSelection(graph.transmitter, frozenset(v.packet for v in verts), targets, total, verts)


def max_weight_clique(graph, greedy=False, max_vertices=MAX_EXACT_VERTICES):
    """Heaviest clique of ``graph`` as a code, or None for an empty graph.

    Ties (within a relative 1e-9) go to the lexicographically smallest
    sorted vertex tuple. ``greedy=True`` trades exactness for speed.
    """
    if not graph.vertices:
        return None
    if greedy:
        total, idx = _greedy_clique(graph)
    else:
        if len(graph.vertices) > max_vertices:
            raise CapacityError(
                f"local graph of transmitter {graph.transmitter} has {len(graph.vertices)} vertices "
                f"(exact solver cap {max_vertices}); enable greedy clique mode")
        total, idx = _exact_clique(graph)
    return selection_from_clique(graph, idx, total)


def select_global(graphs, greedy=False, max_vertices=MAX_EXACT_VERTICES):
    """Best code over all local graphs; ties go to the lowest transmitter id."""
    found = []
    for g in sorted(graphs, key=lambda g: g.transmitter):
        sel = max_weight_clique(g, greedy=greedy, max_vertices=max_vertices)
        if sel is not None:
            found.append(sel)
    if not found:
        return None
    w_star = max(s.total_weight for s in found)
    floor = w_star - tie_tolerance(w_star)
    return next(s for s in found if s.total_weight >= floor)


def check_instant_decodability(state, selection):
    """Raise unless every target lacks exactly its own packet of the code."""
    for n, m in selection.targets.items():
        unknown = state.devices[n].lacks & selection.coded_packets
        if unknown != {m}:
            raise InvariantViolation(
                f"code {sorted(selection.coded_packets)} is not instantly decodable for device {n}")
