"""Packets, devices, channel and the distortion metric.

Packets and devices are identified by 0-based integers. A reduced universe
(after dropping packets every device already holds) keeps the original ids
in ``PacketUniverse.labels`` for reporting.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, InvariantViolation

# IDNC_DEBUG=1 recomputes cached distortions after every decode.
DEBUG = os.environ.get("IDNC_DEBUG", "") not in ("", "0")


@dataclass(frozen=True, eq=False)
class PacketUniverse:
    """Importance matrix ``importance[m, n]`` = r_{m,n} (packet m, device n).

    A universe produced by :func:`apply_stage1` may be empty (every packet
    already everywhere); user-built universes need at least one packet.
    """

    importance: np.ndarray
    labels: tuple = None
    _columns: list = field(init=False, repr=False)

    def __post_init__(self):
        imp = np.array(self.importance, dtype=float)
        if imp.ndim != 2:
            raise InvalidArgument("importance must be an M x N matrix")
        if imp.shape[1] < 1:
            raise InvalidArgument("need at least one device")
        if not np.all(np.isfinite(imp)) or np.any(imp < 0):
            raise InvalidArgument("importances must be finite and non-negative")
        imp.setflags(write=False)
        object.__setattr__(self, "importance", imp)
        labels = tuple(range(imp.shape[0])) if self.labels is None else tuple(self.labels)
        if len(labels) != imp.shape[0]:
            raise InvalidArgument("one label per packet")
        object.__setattr__(self, "labels", labels)
        # per-device python float lists; the hot loops index these
        object.__setattr__(self, "_columns", [imp[:, n].tolist() for n in range(imp.shape[1])])

    @classmethod
    def broadcast(cls, importances, n_devices):
        """Every device values packet m at ``importances[m]``."""
        col = np.asarray(importances, dtype=float).reshape(-1, 1)
        if col.shape[0] < 1:
            raise InvalidArgument("need at least one packet")
        return cls(np.repeat(col, n_devices, axis=1))

    @classmethod
    def create(cls, importance):
        u = cls(importance)
        if u.packet_count < 1:
            raise InvalidArgument("need at least one packet")
        return u

    @property
    def packet_count(self):
        return self.importance.shape[0]

    @property
    def device_count(self):
        return self.importance.shape[1]

    def column(self, device):
        return self._columns[device]

    def total(self, device):
        return math.fsum(self._columns[device])

    def __eq__(self, other):
        if not isinstance(other, PacketUniverse):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.importance, other.importance)

    __hash__ = None


def compute_distortion(universe, has, device):
    """Total importance of the packets ``device`` is missing.

    Summed over the complement of ``has`` with ``math.fsum`` so the result is
    order independent and exactly 0 for complete content.
    """
    if not 0 <= device < universe.device_count:
        raise InvalidArgument(f"device {device} out of range")
    M = universe.packet_count
    if any(not 0 <= m < M for m in has):
        raise InvalidArgument("has contains unknown packet ids")
    col = universe.column(device)
    return math.fsum(col[m] for m in range(M) if m not in has)


@dataclass
class DeviceState:
    device_id: int
    has: set
    lacks: set
    distortion: float = 0.0

    def copy(self):
        return DeviceState(self.device_id, set(self.has), set(self.lacks), self.distortion)


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """``d2d_loss[i, j]``: loss probability from transmitter i to receiver j."""

    d2d_loss: np.ndarray
    stage1_loss: np.ndarray

    def __post_init__(self):
        d2d = np.array(self.d2d_loss, dtype=float)
        s1 = np.array(self.stage1_loss, dtype=float).reshape(-1)
        N = s1.shape[0]
        if d2d.shape != (N, N):
            raise InvalidArgument("d2d_loss must be N x N with N = len(stage1_loss)")
        off = ~np.eye(N, dtype=bool)
        if np.any(d2d[off] < 0) or np.any(d2d[off] >= 1):
            raise InvalidArgument("D2D loss probabilities must lie in [0, 1)")
        if np.any(s1 < 0) or np.any(s1 > 1):
            raise InvalidArgument("stage-1 loss probabilities must lie in [0, 1]")
        np.fill_diagonal(d2d, 0.0)
        d2d.setflags(write=False)
        s1.setflags(write=False)
        object.__setattr__(self, "d2d_loss", d2d)
        object.__setattr__(self, "stage1_loss", s1)

    @classmethod
    def uniform(cls, n_devices, d2d=0.0, stage1=0.0):
        return cls(np.full((n_devices, n_devices), d2d), np.full(n_devices, stage1))

    @property
    def device_count(self):
        return self.stage1_loss.shape[0]

    def eps(self, t, n):
        return float(self.d2d_loss[t, n])

    def with_d2d(self, d2d_loss):
        return ChannelModel(d2d_loss, self.stage1_loss)


@dataclass
class ScenarioState:
    universe: PacketUniverse
    devices: list
    channel: ChannelModel

    @property
    def device_count(self):
        return len(self.devices)

    def copy(self):
        return ScenarioState(self.universe, [d.copy() for d in self.devices], self.channel)

    def distortions(self):
        return [d.distortion for d in self.devices]

    def total_lacks(self):
        return sum(len(d.lacks) for d in self.devices)

    def check(self, require_setup_invariants=True):
        """Raise InvariantViolation if any documented invariant is broken."""
        M = self.universe.packet_count
        everything = set(range(M))
        if len(self.devices) != self.universe.device_count:
            raise InvariantViolation("device count mismatch")
        for d in self.devices:
            if d.has | d.lacks != everything or d.has & d.lacks:
                raise InvariantViolation(f"device {d.device_id}: has/lacks do not partition the packets")
            expected = compute_distortion(self.universe, d.has, d.device_id)
            if d.distortion != expected:
                raise InvariantViolation(
                    f"device {d.device_id}: cached distortion {d.distortion} != {expected}")
        if require_setup_invariants:
            held = set().union(*(d.has for d in self.devices)) if self.devices else set()
            missing = set().union(*(d.lacks for d in self.devices)) if self.devices else set()
            if held != everything:
                raise InvariantViolation("some packet is held by no device")
            if missing != everything:
                raise InvariantViolation("some packet is held by every device")


def make_scenario(universe, channel, has_sets):
    """Build a scenario from explicit Has sets (no repair, no reduction)."""
    if len(has_sets) != universe.device_count or channel.device_count != universe.device_count:
        raise InvalidArgument("has_sets, universe and channel disagree on N")
    everything = set(range(universe.packet_count))
    devices = []
    for n, has in enumerate(has_sets):
        has = set(has)
        if not has <= everything:
            raise InvalidArgument(f"device {n} holds unknown packets")
        devices.append(DeviceState(n, has, everything - has, compute_distortion(universe, has, n)))
    return ScenarioState(universe, devices, channel)


def reduce_scenario(universe, channel, has_sets, rng=None):
    """Enforce the post-stage-1 invariants on raw Has sets.

    Packets nobody holds go to one uniformly chosen device (needs ``rng``);
    packets everybody holds are dropped and the rest are renumbered.
    """
    N = universe.device_count
    M = universe.packet_count
    has_sets = [set(h) for h in has_sets]
    for m in range(M):
        if not any(m in h for h in has_sets):
            if rng is None:
                raise InvalidArgument(f"packet {m} is held by no device")
            has_sets[int(rng.integers(N))].add(m)
    keep = [m for m in range(M) if not all(m in h for h in has_sets)]
    remap = {old: new for new, old in enumerate(keep)}
    reduced = PacketUniverse(universe.importance[keep, :],
                             labels=[universe.labels[m] for m in keep])
    new_has = [{remap[m] for m in h if m in remap} for h in has_sets]
    return make_scenario(reduced, channel, new_has)


def apply_stage1(universe, channel, rng):
    """Simulate the base-station broadcast with independent Bernoulli losses."""
    M, N = universe.packet_count, universe.device_count
    if channel.device_count != N:
        raise InvalidArgument("channel and universe disagree on N")
    received = rng.random((M, N)) >= channel.stage1_loss[np.newaxis, :]
    has_sets = [set(np.flatnonzero(received[:, n]).tolist()) for n in range(N)]
    return reduce_scenario(universe, channel, has_sets, rng)


def xor_decode(receiver, coded):
    """The one packet of ``coded`` the receiver can recover, else None."""
    unknown = receiver.lacks.intersection(coded)
    if len(unknown) == 1:
        return next(iter(unknown))
    return None


def refresh_distortion(universe, device):
    device.distortion = math.fsum(universe.column(device.device_id)[m] for m in device.lacks)
    if DEBUG:
        expected = compute_distortion(universe, device.has, device.device_id)
        if device.distortion != expected:
            raise InvariantViolation(
                f"device {device.device_id}: distortion drifted ({device.distortion} != {expected})")
    return device.distortion
