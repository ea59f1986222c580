"""Transmission rounds and full cooperative-recovery episodes.

Randomness: every episode owns one Philox (counter-based) generator and each
round consumes exactly N uniforms, one per device in id order, whether or
not the device is the transmitter. Round k therefore sees the same draws
under every policy, which is what makes paired comparisons exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, InvariantViolation
from .graph import check_instant_decodability
from .model import refresh_distortion, xor_decode
from .policies import propose_code
from .wants import advance_on_decode, enumerate_wants_family

GENERATOR = "numpy.random.Philox"


def make_rng(seed):
    """Philox generator from an int, a SeedSequence, or pass a Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class TransmissionRecord:
    round_index: int
    transmitter: int
    coded: frozenset
    targets: dict       # device -> packet the code was meant to deliver
    received: frozenset  # devices whose copy arrived
    decoded: dict       # device -> packet actually recovered

    def outcome(self, device):
        if device == self.transmitter:
            return "transmitter"
        if device not in self.targets:
            return "not-targeted"
        return "received" if device in self.received else "lost"


@dataclass
class EpisodeResult:
    completion_time: int          # rounds executed, losses included
    successful_rounds: int        # rounds where some targeted device got its packet
    final_distortion: tuple
    records: list
    seed: object
    terminated_normally: bool
    p: float = 2.0
    generator: str = GENERATOR
    final_state: object = field(default=None, repr=False)

    @property
    def rounds(self):
        return self.completion_time

    def distortion_norm(self, p=None):
        p = self.p if p is None else p
        if math.isinf(p):
            return max(self.final_distortion, default=0.0)
        return math.fsum(d ** p for d in self.final_distortion) ** (1.0 / p)


def run_round(state, selection, rng, wants=None, round_index=0):
    """Broadcast ``selection`` once and update ``state`` (and ``wants``) in place."""
    t = selection.transmitter
    if not selection.coded_packets <= state.devices[t].has:
        raise InvalidArgument("transmitter does not hold every coded packet")
    check_instant_decodability(state, selection)
    eps = state.channel.d2d_loss[t]
    draws = rng.random(state.device_count)
    received, decoded = set(), {}
    for dev in state.devices:
        n = dev.device_id
        if n == t or draws[n] < eps[n]:
            continue
        received.add(n)
        m = xor_decode(dev, selection.coded_packets)
        if m is None:
            continue
        dev.has.add(m)
        dev.lacks.discard(m)
        refresh_distortion(state.universe, dev)
        decoded[n] = m
        if wants is not None and not wants[n].satisfied:
            wants[n] = advance_on_decode(wants[n], m)
    return TransmissionRecord(round_index, t, selection.coded_packets, dict(selection.targets),
                              frozenset(received), decoded)


def _successful(record):
    return any(record.decoded.get(n) == m for n, m in record.targets.items())


def run_episode_p1(state, policy, rng, max_rounds=None):
    """Transmit until every device meets its distortion budget.

    ``state`` is copied, never mutated. With ``max_rounds`` unset the guard
    is ten times the post-setup sum of per-device completion times.
    """
    if policy.kind.p2_family:
        raise InvalidArgument(f"{policy.kind.value} belongs to the deadline-constrained problem")
    d_cons = policy.d_cons
    if d_cons is None or len(d_cons) != state.device_count:
        raise InvalidArgument("run_episode_p1 needs one distortion budget per device")
    seed = rng if not isinstance(rng, np.random.Generator) else None
    rng = make_rng(rng)
    state = state.copy()
    wants = {n: enumerate_wants_family(state, n, d_cons[n]) for n in range(state.device_count)}
    if max_rounds is None:
        max_rounds = max(1, 10 * sum(f.t_n for f in wants.values()))
    if max_rounds < 1:
        raise InvalidArgument("max_rounds must be >= 1")
    track = wants if policy.kind.p1_family else None

    records, ok_rounds = [], 0
    normal = True
    while not all(f.satisfied for f in wants.values()):
        if len(records) >= max_rounds:
            normal = False
            break
        sel = propose_code(policy, state, track)
        if sel is None:
            raise InvariantViolation("unsatisfied devices but no code to send")
        rec = run_round(state, sel, rng, wants, round_index=len(records))
        records.append(rec)
        ok_rounds += _successful(rec)
    for n, dev in enumerate(state.devices):
        if normal and dev.distortion > d_cons[n]:
            raise InvariantViolation(f"device {n} reported satisfied above its budget")
    return EpisodeResult(len(records), ok_rounds, tuple(state.distortions()), records, seed,
                         normal, policy.p, final_state=state)


def run_episode_p2(state, policy, rng):
    """Transmit ``t_cons`` rounds, or fewer if every Lacks set empties first."""
    if policy.kind.p1_family:
        raise InvalidArgument(f"{policy.kind.value} belongs to the quality-constrained problem")
    if policy.t_cons is None:
        raise InvalidArgument("run_episode_p2 needs t_cons")
    seed = rng if not isinstance(rng, np.random.Generator) else None
    rng = make_rng(rng)
    state = state.copy()
    records, ok_rounds = [], 0
    while len(records) < policy.t_cons and state.total_lacks() > 0:
        sel = propose_code(policy, state)
        if sel is None:
            raise InvariantViolation("devices still lack packets but no code to send")
        rec = run_round(state, sel, rng, round_index=len(records))
        records.append(rec)
        ok_rounds += _successful(rec)
    return EpisodeResult(len(records), ok_rounds, tuple(state.distortions()), records, seed,
                         True, policy.p, final_state=state)


def run_episode(state, policy, rng, max_rounds=None):
    if policy.kind.p2_family or (policy.kind.baseline and policy.d_cons is None):
        return run_episode_p2(state, policy, rng)
    return run_episode_p1(state, policy, rng, max_rounds)

