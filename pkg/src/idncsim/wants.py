"""Admissible Wants sets under a per-device distortion budget.

A Wants set W of device n is a subset of its Lacks set whose reception
brings the distortion to at most ``d_cons``; only inclusion-minimal ones are
kept. The device's completion time is the size of the smallest member.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CapacityError, InvalidArgument, InvariantViolation

MAX_LACKS = 20


def _antichain(sets):
    """Drop duplicates and strict supersets; canonical (size, ids) order."""
    uniq = sorted({frozenset(s) for s in sets}, key=lambda s: (len(s), sorted(s)))
    kept = []
    for s in uniq:
        if not any(k < s for k in kept):
            kept.append(s)
    return tuple(kept)


@dataclass(frozen=True)
class WantsFamily:
    device: int
    sets: tuple
    t_n: int

    @classmethod
    def from_sets(cls, device, sets):
        members = _antichain(sets)
        if not members:
            raise InvariantViolation(f"device {device}: empty Wants family")
        return cls(device, members, min(len(s) for s in members))

    @classmethod
    def satisfied_family(cls, device):
        return cls(device, (frozenset(),), 0)

    @property
    def satisfied(self):
        return self.t_n == 0

    def union(self):
        return frozenset().union(*self.sets)

    def critical(self):
        """Packets lying in some minimum-cardinality member."""
        return frozenset().union(*(s for s in self.sets if len(s) == self.t_n))

    def advance(self, decoded):
        return advance_on_decode(self, decoded)


def meets_budget(column, lacks, wanted, d_cons):
    """True when receiving ``wanted`` leaves distortion <= d_cons."""
    return math.fsum(column[m] for m in lacks if m not in wanted) <= d_cons


def enumerate_wants_family(state, device, d_cons):
    dev = state.devices[device]
    col = state.universe.column(device)
    if d_cons < 0:
        raise InvalidArgument("d_cons must be non-negative")
    if dev.distortion <= d_cons:
        return WantsFamily.satisfied_family(device)
    if len(dev.lacks) > MAX_LACKS:
        raise CapacityError(
            f"device {device} lacks {len(dev.lacks)} packets; Wants enumeration is capped "
            f"at {MAX_LACKS}, use a smaller block size")
    lacks = dev.lacks
    # zero-importance packets never belong to a minimal set here
    items = sorted((m for m in lacks if col[m] > 0), key=lambda m: (-col[m], m))
    need = dev.distortion - d_cons
    slack = 1e-9 * max(1.0, dev.distortion)
    suffix = [0.0] * (len(items) + 1)
    for i in range(len(items) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + col[items[i]]

    found = []

    def extend(start, chosen, chosen_sum):
        for j in range(start, len(items)):
            if chosen_sum + suffix[j] < need - slack:
                break
            m = items[j]
            chosen.append(m)
            if meets_budget(col, lacks, chosen, d_cons):
                found.append(frozenset(chosen))
            else:
                extend(j + 1, chosen, chosen_sum + col[m])
            chosen.pop()

    extend(0, [], 0.0)
    minimal = [w for w in found
               if not any(meets_budget(col, lacks, w - {x}, d_cons) for x in w)]
    return WantsFamily.from_sets(device, minimal)


def per_device_completion_time(family):
    if not family.sets:
        raise InvariantViolation("empty Wants family")
    return min(len(s) for s in family.sets)


def advance_on_decode(family, decoded, lacks=None):
    """Family after the device decodes ``decoded``.

    Every member loses the packet and the antichain is restored, so the
    completion time drops by one exactly when a smallest member held it.
    """
    if family.satisfied:
        raise InvalidArgument(f"device {family.device} is already satisfied")
    if lacks is not None and decoded not in lacks:
        raise InvalidArgument(f"packet {decoded} is not in the Lacks set of device {family.device}")
    return WantsFamily.from_sets(family.device, [s - {decoded} for s in family.sets])


def completion_time_bounds(tvec):
    tvec = list(tvec)
    if not tvec:
        return 0, 0
    return max(tvec), sum(tvec)
