"""Code-selection policies: vertex eligibility plus vertex weights.

Content and loss aware policies weight a vertex by its expected reduction of
the p-norm objective (completion times for the quality-constrained problem,
distortions for the deadline-constrained one). The three baselines follow
the usual IDNC recipes built on Lacks-set sizes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import ConfigError
from .graph import build_local_graph, select_global


class PolicyKind(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    CONTENT_AWARE_LOSS_UNAWARE_P1 = "ContentAwareLossUnawareP1"
    CONTENT_AWARE_LOSS_UNAWARE_P2 = "ContentAwareLossUnawareP2"
    LOSS_AWARE_IDNC = "LossAwareIdnc"
    LOSS_UNAWARE_IDNC = "LossUnawareIdnc"

    @property
    def p1_family(self):
        return self in (PolicyKind.P1, PolicyKind.CONTENT_AWARE_LOSS_UNAWARE_P1)

    @property
    def p2_family(self):
        return self in (PolicyKind.P2, PolicyKind.CONTENT_AWARE_LOSS_UNAWARE_P2)

    @property
    def baseline(self):
        return self in (PolicyKind.LOSS_AWARE_IDNC, PolicyKind.LOSS_UNAWARE_IDNC)

    @property
    def loss_aware(self):
        return self in (PolicyKind.P1, PolicyKind.P2, PolicyKind.LOSS_AWARE_IDNC)


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    p: float = 2.0
    d_cons: tuple = None
    t_cons: int = None
    greedy_clique: bool = False

    def __post_init__(self):
        try:
            kind = PolicyKind(self.kind)
        except ValueError:
            raise ConfigError(f"unknown policy kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if not self.p >= 1:
            raise ConfigError("p-norm exponent must be >= 1")
        if self.d_cons is not None:
            d = tuple(float(x) for x in self.d_cons)
            if any(x < 0 for x in d):
                raise ConfigError("distortion budgets must be non-negative")
            object.__setattr__(self, "d_cons", d)
        if self.t_cons is not None and (int(self.t_cons) != self.t_cons or self.t_cons < 0):
            raise ConfigError("t_cons must be a non-negative integer")
        if kind.p1_family and self.d_cons is None:
            raise ConfigError(f"{kind.value} needs per-device d_cons")
        if kind.p2_family and self.t_cons is None:
            raise ConfigError(f"{kind.value} needs t_cons")


def weight_p1(t_n, eps, p, critical):
    """Expected drop of T_n**p when the vertex serves a critical packet."""
    if not critical:
        return 0.0
    return t_n ** p - (t_n - 1 + eps) ** p


def weight_p2(d_n, r_mn, eps, p):
    """Expected drop of D_n**p when the vertex serves a packet worth r_mn."""
    return d_n ** p - (d_n - r_mn + eps * r_mn) ** p


def eligibility(policy, state, wants=None):
    if policy.kind.p1_family:
        if wants is None:
            raise ConfigError(f"{policy.kind.value} needs current Wants families")
        return [wants[n].union() for n in range(state.device_count)]
    return [d.lacks for d in state.devices]


def _weight_fn(policy, state, wants):
    kind, p = policy.kind, policy.p
    channel, devices = state.channel, state.devices
    eps = channel.d2d_loss.tolist()
    if not kind.loss_aware:
        eps = [[0.0] * len(row) for row in eps]

    if kind.p1_family:
        t_vec = [wants[n].t_n for n in range(len(devices))]
        crit = [wants[n].critical() for n in range(len(devices))]

        def w(t, n, m):
            return weight_p1(t_vec[n], eps[t][n], p, m in crit[n])
    elif kind.p2_family:
        cols = [state.universe.column(n) for n in range(len(devices))]
        dist = [d.distortion for d in devices]

        def w(t, n, m):
            return weight_p2(dist[n], cols[n][m], eps[t][n], p)
    elif kind is PolicyKind.LOSS_AWARE_IDNC:
        sizes = [len(d.lacks) for d in devices]

        def w(t, n, m):
            return (1.0 - eps[t][n]) * sizes[n]
    else:
        w = None
    return w


def _loss_unaware_weights(graph, state):
    sizes = [len(state.devices[v.target].lacks) for v in graph.vertices]
    out = []
    for i in range(len(graph.vertices)):
        mask = graph.adjacency[i]
        out.append(sizes[i] + sum(sizes[j] for j in range(len(sizes)) if mask >> j & 1))
    return out


def local_graphs(policy, state, wants=None):
    elig = eligibility(policy, state, wants)
    weight = _weight_fn(policy, state, wants)
    graphs = [build_local_graph(state, t, elig, weight) for t in range(state.device_count)]
    if policy.kind is PolicyKind.LOSS_UNAWARE_IDNC:
        graphs = [g.with_weights(_loss_unaware_weights(g, state)) for g in graphs]
    return graphs


def propose_code(policy, state, wants=None):
    """Code to send next, or None when no device can be served."""
    graphs = local_graphs(policy, state, wants)
    sel = select_global(graphs, greedy=policy.greedy_clique)
    if sel is None or sel.total_weight > 0:
        return sel
    # every clique weighs 0: keep making progress with the largest clique
    unit = [g.with_weights([1.0] * len(g)) for g in graphs]
    fallback = select_global(unit, greedy=policy.greedy_clique)
    return replace(fallback, total_weight=0.0,
                   vertices=tuple(v._replace(weight=0.0) for v in fallback.vertices))
